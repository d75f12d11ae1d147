#pragma once

#include <cstdint>
#include <vector>

#include "bilex/geometry.hpp"
#include "bilex/multiscale.hpp"
#include "bilex/profile.hpp"

namespace bilex {
namespace poisson {

struct PointSample {
    int n = 0;
    std::vector<Vec2> points;        // in [0, n]^2
    std::vector<uint8_t> occupancy;  // n*n unit squares, row major
    int k = 0;                       // unit squares holding >= 1 point

    bool occupied(int sx, int sy) const {
        return occupancy[static_cast<size_t>(sy) * n + sx] != 0;
    }
};

// Homogeneous Poisson sample on [0, n]^2; the total count comes from the
// exponential-race inversion, so one seed fixes the sample exactly.
PointSample sample_poisson(int n, double intensity, uint64_t seed);

// Critical kappa for (1 - e^{-k^2})^{1/k^2} = e^{-eps}; valid kappa lie
// above it.  Solved to 1e-9.
double critical_kappa(double eps);

// Smallest delta' with (1 - e^{-k^2})^{(1-d')/k^2} e^{-d'} >= e^{-eps}.
// Throws std::domain_error when kappa is subcritical for eps (the
// constraint is linear in d' with positive slope, so no d' < 1 works).
double minimal_delta_prime(double eps, double kappa);

// Smallest eps making (kappa, delta_prime) admissible; inverse companion
// of the two solvers above.
double minimal_eps(double kappa, double delta_prime);

struct EmbedConfig {
    double delta = 0.4;        // asserted lower bound on lambda(A)
    double eps = 0.0;          // 0: derived as minimal_eps(kappa, delta_prime)
    double kappa = 1.0;        // cell size; n/kappa must be an integer
    double delta_prime = 0.2;  // expansion target is 1 - delta_prime
    double eta = 0.5;
    int q = 8;             // raster resolution for the stretch construction
    int n_pairs = 10000;   // pair budget for the (M, D) measurement
    uint64_t seed = 1;     // pair sampling seed
    // Per-step raster gain floor for the expansion budget; the measured
    // desk-scale rate, well under the nominal threshold-case gain.
    double step_floor = 1e-4;
};

struct RoughIsometryReport {
    bool event_e = false;
    double m = 1.0;  // multiplicative constant (sup of both ratios of phi)
    double d = 0.0;  // additive slack on top of m over the sampled pairs
    double c = 0.0;  // image density radius over the Y-points
    double kappa = 0.0;
    double delta_prime = 0.0;
    double eps = 0.0;
    int steps = 0;              // expansion rounds behind phi
    double expanded_measure = 0.0;  // lambda of the expanded raster
    size_t pairs_checked = 0;
    size_t cell_misses = 0;  // T fell back to a wider Y search
    bool def11_ok = false;   // every sampled pair satisfies the two bounds
    Vec2 worst_mult[2];      // pair attaining m
    Vec2 worst_add[2];       // pair attaining d
    Vec2 worst_dense;        // Y-point attaining c
    int b_cells = 0;         // kappa-cells of B
    int e_missing = 0;       // B-cells with no Y-point
    int e_outside = 0;       // Y-points outside B
};

// Desk-scale run of the embedding argument: raster A from the occupied
// squares of X, expand it to measure 1 - delta_prime, form the kappa-cell
// set B over the image, test event E on Y, and when E holds build
// T = nearest-Y-point-in-cell after the stretch map (identity on the
// boundary) and measure (M, D, C) over sampled pairs.  The probability
// bound of the source argument is a large-deviations statement and is not
// reproduced; what is verified is that every event-E run yields a valid
// rough isometry.  Throws std::invalid_argument when k_X < delta n^2 or
// the config is inconsistent.
RoughIsometryReport embed(const Profile& p, const PointSample& x,
                          const PointSample& y, const EmbedConfig& cfg);

// Convenience overload matching the five-argument call shape: kappa is
// snapped to the coarsest grid-compatible value above critical_kappa(eps)
// and delta_prime to minimal_delta_prime(eps, kappa).
RoughIsometryReport embed(const Profile& p, const PointSample& x,
                          const PointSample& y, double delta, double eps,
                          uint64_t seed);

// One Y-point in every kappa-cell of B (cell centers), nothing outside:
// the deterministic fixture that forces event E for a given X and config.
PointSample forced_event_y(const Profile& p, const PointSample& x,
                           const EmbedConfig& cfg);

}  // namespace poisson
}  // namespace bilex
