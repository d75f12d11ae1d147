#pragma once

#include "bilex/geometry.hpp"
#include "bilex/profile.hpp"

namespace bilex {

// Fiber coordinates on the lower half square: r in (0, 1/2) indexes the level
// curve, theta in [-1, 1] the position along it (theta = 0 on the vertical
// crack, theta = +-1 on the boundary of the unit square).
struct PolarCoord {
    double r = 0.0;
    double theta = 0.0;
};

namespace polar {

// Chart inverse: (r, theta) -> (x1, x2) in [0,1] x [0,1/2).
//   x1 = 1/2 + (r+h) sin(theta T)
//   x2 = (r+h) cos(theta T) - h, computed as r - 2 (r+h) sin^2(theta T / 2)
// so the large h and (r+h) terms never cancel.
Vec2 inverse(const Profile& p, PolarCoord c);

// Chart forward: recovers r by bisection on
//   F(r) = (r - x2)(r + x2 + 2 h(r)) - (x1 - 1/2)^2,
// which is strictly increasing on [x2, 1/2), bracketed in
// [1e-9, 1/2 - 1e-9] (at most 200 halvings, one Newton polish), then
//   theta = atan2(x1 - 1/2, x2 + h(r)) / Theta(r), clamped to [-1, 1].
// Throws std::domain_error for x2 >= 1/2 or x within 1e-12 of (1/2, 0).
PolarCoord forward(const Profile& p, Vec2 x);

// Jacobian d(x1,x2)/d(r,theta) of the chart inverse.
Mat2 jacobian_inverse(const Profile& p, PolarCoord c);

// |det| of jacobian_inverse in closed form:
//   Theta(r) (r+h) (1 + h' - h' cos(theta Theta)).
double abs_det_jacobian_inverse(const Profile& p, PolarCoord c);

}  // namespace polar
}  // namespace bilex
