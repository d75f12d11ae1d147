#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bilex/dyadic.hpp"
#include "bilex/map_stack.hpp"
#include "bilex/pixel_set.hpp"
#include "bilex/profile.hpp"

namespace bilex {
namespace multiscale {

// Thresholds and limits for the stopping scan.  eps3 and eps4 are pinned
// functions of (gamma, gamma_prime, eta); eps1 and eps2 are free knobs with
// defaults chosen so the per-level stretch stays inside the Lipschitz budget.
struct StopConfig {
    double gamma = 0.0;
    double gamma_prime = 0.0;
    double eta = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double eps3 = 0.0;  // = min(gamma, 1 - gamma_prime) / 2
    double eps4 = 0.0;  // = eta / 200
    int max_depth = 0;  // 0: use 2q - 2 at scan time
    int mc_samples = 4096;
    uint64_t seed = 1;

    static StopConfig defaults(double gamma, double gamma_prime, double eta);

    // Throws std::invalid_argument when a pinned relation or the ordering
    // 0 < gamma < 1 - gamma_prime < 1 is violated.
    void validate() const;
};

// The level-n piecewise stretch: every level-n box with a nonzero stretch
// factor, horizontal on odd levels and vertical on even ones.  Boxes with
// delta = 0 are omitted; the glued map is the identity there.
MapLevel level_map(const DensityTree& tree, int n);

struct ScanOutcome {
    MapStack stack;                // stretch levels over the internal boxes
    double predicted_image = 0.0;  // sum of area*rho*(applied factors), exact
    double mass[5] = {0.0, 0.0, 0.0, 0.0, 0.0};  // leaf measure by StopReason
    double mass_shallow = 0.0;     // leaves with 2*level < max_depth
    int depth_used = 0;
    int max_depth = 0;
};

// Depth-first descent from the root.  At each box the rules fire in the
// order tau1, tau2, tau3, tau4-guard, then the depth cutoff; the first hit
// makes the box an antichain leaf and prunes the branch.  Deterministic:
// no randomness enters the verdicts.
ScanOutcome stop_scan(const Profile& p, const DensityTree& tree,
                      const StopConfig& cfg);

struct MartingaleReport {
    double lambda = 0.0;
    double e_rho_sq = 0.0;             // E[rho_tau^2]
    double var_rho = 0.0;              // E[rho_tau^2] - lambda^2
    double sum_increments_sq = 0.0;    // E[sum of squared path increments]
    double identity_gap = 0.0;         // var_rho - sum_increments_sq
    double predicted_image = 0.0;      // E[rho_tau^2] / lambda
};

// Exact integer sums over the antichain (all terms are dyadic rationals on
// one common power-of-two scale, accumulated in 128-bit integers), so the
// variance identity is checked without rounding.  Throws
// std::invalid_argument when the antichain does not tile the square.
MartingaleReport martingale_diagnostics(const DensityTree& tree,
                                        const std::vector<StopVerdict>& antichain);

struct StepMetrics {
    double lambda = 0.0;
    double gain_antichain = 0.0;  // case-1/3 prediction
    double gain_threshold = 0.0;  // case-2 prediction
    double threshold_mass = 0.0;  // measure of the case-2 box family
    double gain = 0.0;            // prediction for the stack returned
    double mass[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
    double mass_shallow = 0.0;
    double jac_dev_sup = 0.0;  // sampled sup ||Phi' - I||_inf of the scan stack
    size_t pieces = 0;
    std::string chosen;  // "case13" or "case2"
};

// One expansion round: scan, evaluate both constructions, return the one
// with the larger predicted gain.  The prediction is exact for the raster
// set: each piece rescales its halves uniformly in measure.  Throws
// std::invalid_argument when lambda is outside [gamma, 1 - gamma_prime] and
// std::runtime_error (with diagnostics) when neither case makes progress.
std::pair<MapStack, StepMetrics> expansion_step(const Profile& p,
                                                const PixelSet& set,
                                                const StopConfig& cfg);

struct ExpandResult {
    std::vector<MapStack> stacks;  // step order; apply front() first
    PixelSet set;                  // final raster
    std::vector<StepMetrics> steps;
    std::vector<double> raster_trace;  // measure after each re-rasterization
    double c0_hat = 0.0;               // sampled bi-Lipschitz constant

    explicit ExpandResult(PixelSet s) : set(std::move(s)) {}
};

struct BudgetExhausted : std::runtime_error {
    std::vector<double> gains;
    explicit BudgetExhausted(const std::string& msg, std::vector<double> g)
        : std::runtime_error(msg), gains(std::move(g)) {}
};

// Iterates expansion_step, re-rasterizing the image between rounds by
// sampling the inverse at pixel centers inside the touched pieces, until
// the raster measure reaches 1 - gamma_prime.  The step budget is
// ceil((1 - gamma_prime - gamma) / step_floor) + 1; running past it throws
// BudgetExhausted carrying the per-step gain trace.
ExpandResult expand_to_target(const Profile& p, const PixelSet& set,
                              double gamma, double gamma_prime, double eta,
                              double step_floor = 4e-4);

// Same loop with the caller's thresholds; cfg must pass validate(), so only
// the free knobs (eps1, eps2, max_depth, mc_samples, seed) can differ from
// the pinned defaults.
ExpandResult expand_to_target(const Profile& p, const PixelSet& set,
                              const StopConfig& cfg, double step_floor = 4e-4);

}  // namespace multiscale
}  // namespace bilex
