#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bilex/geometry.hpp"
#include "bilex/map_stack.hpp"
#include "bilex/pixel_set.hpp"

namespace bilex {
namespace verify {

using MapFn = std::function<Vec2(Vec2)>;

struct LipschitzReport {
    double max_forward = 0.0;  // sup |f(x)-f(y)| / |x-y| over sampled pairs
    double max_inverse = 0.0;  // sup |x-y| / |f(x)-f(y)|, same pairs
    Vec2 arg_forward[2];
    Vec2 arg_inverse[2];
    size_t n_pairs = 0;   // pairs actually evaluated
    size_t n_skipped = 0;  // degenerate after clamping to the square
    std::vector<double> scales;     // separation of each stratum
    std::vector<double> scale_fwd;  // per-scale max forward ratio
    std::vector<double> scale_inv;  // per-scale max inverse ratio
};

// Empirical bi-Lipschitz constants of f over the unit square.  Pairs are
// laid out at the prescribed separations, one quarter uniform and the rest
// crowded where the construction is least tame: the gluing midline, the
// r = r1 / r = r0 circles around the lower and upper centers, and the twist
// half-disks at the crack endpoints.  Draw positions are indexed by pair,
// so any block partition of the loop reproduces the same report.
LipschitzReport estimate_lipschitz(
    const MapFn& f, size_t n_pairs,
    const std::vector<double>& scales = {1.0, 1e-1, 1e-2, 1e-3, 1e-4},
    uint64_t seed = 1);

struct MeasureReport {
    double mc_estimate = 0.0;
    double std_error = 0.0;  // sqrt(p(1-p)/N), indicator sampling
    double exact_prediction = 0.0;  // antichain formula; NaN off MapStack
    double pixel_pushforward = 0.0;  // grid estimate; NaN when skipped
    size_t n_samples = 0;
    size_t hits = 0;
};

// Measure of the image of `set` under the map with the given inverse:
// sample y uniform in the square and test whether inverse(y) lands in the
// set.  Sampling in the codomain needs no Jacobian, so this is independent
// of every derivative path in the library.  The pixel pass repeats the
// membership test at the 2^q grid centers.
MeasureReport estimate_pushforward_measure(const MapFn& inverse,
                                           const PixelSet& set,
                                           size_t n_samples, uint64_t seed = 1,
                                           bool pixel_pass = true);

// Same estimator, plus the exact per-leaf prediction: each antichain leaf
// contributes area * rho * product of (1 +- delta) over the proper-ancestor
// stretches above it, the sign picked by which half the leaf sits in.
MeasureReport estimate_pushforward_measure(const MapStack& stack,
                                           const PixelSet& set,
                                           size_t n_samples, uint64_t seed = 1,
                                           bool pixel_pass = true);

struct BoundaryReport {
    bool pass = false;
    double max_boundary_disp = 0.0;
    Vec2 worst_boundary;
    double max_round_trip = 0.0;
    Vec2 worst_interior;
    size_t n_boundary = 0;
    size_t n_interior = 0;
};

// Boundary pinning and bijectivity: every perimeter sample (corners always
// included) must stay within 1e-9, and inverse(f(x)) must return interior
// samples within 1e-8.  The worst witnesses are reported either way.
BoundaryReport check_boundary_and_bijection(const MapFn& f, const MapFn& finv,
                                            size_t n_boundary,
                                            size_t n_interior,
                                            uint64_t seed = 1);

// Centered finite-difference Jacobian, an oracle for the analytic one.
Mat2 fd_jacobian(const MapFn& f, Vec2 x, double step = 1e-5);

}  // namespace verify
}  // namespace bilex
