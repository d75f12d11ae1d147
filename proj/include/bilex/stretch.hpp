#pragma once

#include "bilex/geometry.hpp"
#include "bilex/polar.hpp"
#include "bilex/profile.hpp"

namespace bilex {

// Largest admissible |delta|; inputs are clamped to this.
inline constexpr double kDeltaMax = 1.0 - 1e-6;

namespace stretch {

// Antiderivative of the fiber speed 1 + h'(r) - h'(r) cos(l Theta(r)):
//   H_r(l) = (1 + h') l - h' sin(l Theta) / Theta
// evaluated as l + (h'/Theta) (l Theta - sin(l Theta)) so the two h'-sized
// terms never cancel (h' reaches 1e30 and beyond near r = 1/2).
double antiderivative(const Profile& p, double r, double ell);

// d/dl of the antiderivative, >= 1.
double antiderivative_deriv(const Profile& p, double r, double ell);

// Fiber stretch g_r: [-1,1] -> [-1,1] mapping the fraction delta of
// H-measure across l = 0:
//   (1+delta)(H(l) - H(-1)) = H(g) - H(-1)   for l <= 0,
//   (1-delta)(H(1) - H(l))  = H(1) - H(g)    for l >= 0.
// Root solve: at most 80 bisection halvings on [-1,1], then up to 3 Newton
// steps; absolute tolerance 1e-13 in H-value.  g(+-1) = +-1 exactly; for
// r <= 1/10 the closed forms g = -1 + (1+delta)(l+1) / 1 - (1-delta)(1-l)
// are returned directly.
double solve_g(const Profile& p, double r, double ell, double delta);

// Inverse fiber stretch: the l with g_r(l) = y.
double solve_g_inverse(const Profile& p, double r, double y, double delta);

// Analytic d g / d theta = (1 +- delta) H'(l) / H'(g).
double g_prime_theta(const Profile& p, double r, double ell, double delta);

// d g / d r by central difference (step 1e-6), one-sided near r0, the domain
// ends, and the changeover radius so both samples stay on one branch.
double g_prime_r(const Profile& p, double r, double ell, double delta);

// The square stretch map: identity on the boundary, fixes (1/2,0) and
// (1/2,1), piecewise linear on the midline, and K^-1 ∘ (r, l -> g_r(l)) ∘ K
// on each open half.  delta is clamped to +-kDeltaMax.
Vec2 psi(const Profile& p, Vec2 x, double delta);

Vec2 psi_inverse(const Profile& p, Vec2 y, double delta);

// Jacobian of psi at x: J(r, g) * [[1,0],[dg/dr, dg/dtheta]] * J(r, theta)^-1
// on the lower half, conjugated by the reflection on the upper half.
// Points within 1e-12 of the crack, midline, or changeover fiber are nudged
// by 1e-9 before evaluation; elsewhere the caller keeps inputs off the
// singular loci.
Mat2 psi_jacobian(const Profile& p, Vec2 x, double delta);

}  // namespace stretch

// Axis along which a rectangle conjugate of psi stretches.
enum class Axis { Lengthwise, Heightwise };

// Affine chart from the unit square onto the rectangle u + [0,a] x [0,b];
// Heightwise swaps coordinates so the stretch runs bottom/top instead of
// left/right.
struct RectFrame {
    Vec2 u;
    double a = 1.0;
    double b = 1.0;
    Axis axis = Axis::Lengthwise;

    Vec2 from_unit(Vec2 x) const {
        if (axis == Axis::Lengthwise) return {u.x + a * x.x, u.y + b * x.y};
        return {u.x + a * x.y, u.y + b * x.x};
    }

    Vec2 to_unit(Vec2 y) const {
        if (axis == Axis::Lengthwise) return {(y.x - u.x) / a, (y.y - u.y) / b};
        return {(y.y - u.y) / b, (y.x - u.x) / a};
    }

    // d from_unit / d x.
    Mat2 unit_jacobian() const {
        if (axis == Axis::Lengthwise) return {a, 0.0, 0.0, b};
        return {0.0, a, b, 0.0};
    }

    bool contains(Vec2 y) const {
        return y.x >= u.x && y.x <= u.x + a && y.y >= u.y && y.y <= u.y + b;
    }
};

namespace stretch {

Vec2 psi_rect(const Profile& p, Vec2 y, double delta, const RectFrame& f);
Vec2 psi_rect_inverse(const Profile& p, Vec2 y, double delta, const RectFrame& f);
Mat2 psi_rect_jacobian(const Profile& p, Vec2 y, double delta, const RectFrame& f);

}  // namespace stretch
}  // namespace bilex
