#include "bilex/multiscale.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "bilex/rng.hpp"
#include "bilex/stretch.hpp"

namespace bilex {
namespace multiscale {

StopConfig StopConfig::defaults(double gamma, double gamma_prime, double eta) {
    StopConfig c;
    c.gamma = gamma;
    c.gamma_prime = gamma_prime;
    c.eta = eta;
    c.eps1 = eta / 100.0;
    c.eps2 = (eta / 200.0) * (eta / 200.0);
    c.eps3 = 0.5 * std::min(gamma, 1.0 - gamma_prime);
    c.eps4 = eta / 200.0;
    return c;
}

void StopConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0 - gamma_prime && gamma_prime > 0.0)) {
        throw std::invalid_argument("stop config: need 0 < gamma < 1 - gamma' < 1");
    }
    if (!(eta > 0.0)) throw std::invalid_argument("stop config: eta must be positive");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
        throw std::invalid_argument("stop config: eps1 and eps2 must be positive");
    }
    if (std::fabs(eps3 - 0.5 * std::min(gamma, 1.0 - gamma_prime)) > 1e-12) {
        throw std::invalid_argument("stop config: eps3 must be min(gamma, 1 - gamma')/2");
    }
    if (std::fabs(eps4 - eta / 200.0) > 1e-12) {
        throw std::invalid_argument("stop config: eps4 must be eta/200");
    }
    if (max_depth < 0) throw std::invalid_argument("stop config: negative max_depth");
    if (mc_samples <= 0) throw std::invalid_argument("stop config: mc_samples must be positive");
}

MapLevel level_map(const DensityTree& tree, int n) {
    MapLevel lvl;
    const int cols = DyadicBox::cols(n);
    const int rows = DyadicBox::rows(n);
    for (int ix = 0; ix < cols; ++ix) {
        for (int iy = 0; iy < rows; ++iy) {
            const DyadicBox b{n, ix, iy};
            const double d = tree.stretch_delta(b);
            if (d != 0.0) lvl.add({b, d});
        }
    }
    return lvl;
}

namespace {

// One ancestor of the box currently visited.  The seam polyline is built
// once per ancestor and shared across all branches below it.
struct PathLevel {
    DyadicBox box;
    RectFrame frame;
    double delta = 0.0;    // applied stretch, already clamped
    double inc_abs = 0.0;  // |rho(child 0) - rho(box)|, exact
    std::vector<std::vector<Vec2>> seam;
};

// Seam bookkeeping is per descent path, so it travels by value down the
// recursion.  alpha holds the last depth gap at which the seam event held;
// once it misses it stays frozen (the events shrink with depth), which
// overweights borderline sums toward stopping early.
struct SeamState {
    int alpha = 0;
    bool active = true;
};
using SeamStates = std::array<SeamState, 32>;

struct Scanner {
    const Profile& p;
    const DensityTree& tree;
    const StopConfig& cfg;
    int mdepth;
    double lambda;
    ScanOutcome out;
    std::vector<PathLevel> path;

    void leaf(const DyadicBox& box, StopReason reason, double stat, double rho,
              double prod) {
        out.stack.antichain.push_back({box, reason, stat});
        out.mass[static_cast<int>(reason)] += box.area();
        if (2 * box.level < mdepth) out.mass_shallow += box.area();
        out.predicted_image += box.area() * rho * prod;
        out.depth_used = std::max(out.depth_used, box.level);
    }

    // Composition of the stretches applied strictly between ancestor k and
    // the current box, deepest first; this is the map the current box has
    // already been through when ancestor k's chart applies.
    Vec2 partial_after(size_t k, Vec2 v) const {
        for (size_t j = path.size(); j-- > k + 1;) {
            if (path[j].delta != 0.0) {
                v = stretch::psi_rect(p, v, path[j].delta, path[j].frame);
            }
        }
        return v;
    }

    double tau1_exact(const DyadicBox& box, SeamStates& st) {
        double sum = 0.0;
        for (size_t k = 0; k < path.size(); ++k) {
            PathLevel& a = path[k];
            if (a.inc_abs == 0.0) continue;
            const int gap = box.level - a.box.level;
            SeamState& s = st[k];
            if (s.active) {
                if (a.seam.empty()) a.seam = dyadic::seam_polyline(p, a.frame);
                const auto through = [&](Vec2 v) { return partial_after(k, v); };
                if (dyadic::seam_hit(a.seam, box, through)) {
                    s.alpha = gap;
                } else {
                    s.active = false;
                }
            }
            const int jw = dyadic::twist_weight(a.box, box.center(), gap);
            const double rw = dyadic::reweighted(a.inc_abs, std::max(jw, s.alpha), gap);
            sum += rw * rw;
        }
        return sum;
    }

    double guard_deviation(const DyadicBox& box) const {
        static const double frac[3] = {1.0 / 6.0, 0.5, 5.0 / 6.0};
        const Vec2 lo = box.lo();
        const double len = box.len();
        const double ht = box.ht();
        double dev = 0.0;
        for (double fx : frac) {
            for (double fy : frac) {
                Vec2 y{lo.x + fx * len, lo.y + fy * ht};
                Mat2 j = Mat2::identity();
                for (size_t k = path.size(); k-- > 0;) {
                    if (path[k].delta == 0.0) continue;
                    j = stretch::psi_rect_jacobian(p, y, path[k].delta, path[k].frame) * j;
                    y = stretch::psi_rect(p, y, path[k].delta, path[k].frame);
                }
                dev = std::max(dev, (j - Mat2::identity()).norm_inf());
            }
        }
        return dev;
    }

    void visit(const DyadicBox& box, double prod, SeamStates st) {
        const int n = box.level;
        const double rho = tree.rho(box);

        // tau1: test the cheap all-weights-maximal bound first; the seam and
        // twist geometry only runs when the sum could actually cross eps1.
        double bound = 0.0;
        for (const PathLevel& a : path) {
            const double rw =
                dyadic::reweighted(a.inc_abs, n - a.box.level, n - a.box.level);
            bound += rw * rw;
        }
        if (bound > cfg.eps1) {
            const double t1 = tau1_exact(box, st);
            if (t1 > cfg.eps1) return leaf(box, StopReason::Tau1, t1, rho, prod);
        }

        const double inc = tree.increment(box);
        if (inc * inc > cfg.eps2) {
            return leaf(box, StopReason::Tau2, inc * inc, rho, prod);
        }
        if (std::fabs(rho - lambda) > cfg.eps3) {
            return leaf(box, StopReason::Tau3, std::fabs(rho - lambda), rho, prod);
        }
        bool any_delta = false;
        for (const PathLevel& a : path) any_delta = any_delta || a.delta != 0.0;
        if (any_delta) {
            const double dev = guard_deviation(box);
            if (dev > cfg.eps4) {
                return leaf(box, StopReason::Tau4Guard, dev, rho, prod);
            }
        }
        if (n >= mdepth) {
            return leaf(box, StopReason::Depth, static_cast<double>(n), rho, prod);
        }

        const double delta = tree.stretch_delta(box);
        if (delta != 0.0) out.stack.levels[n - 1].add({box, delta});
        path.push_back({box, box.frame(), delta, std::fabs(inc), {}});
        visit(box.child(0), prod * (1.0 + delta), st);
        visit(box.child(1), prod * (1.0 - delta), st);
        path.pop_back();
    }
};

}  // namespace

ScanOutcome stop_scan(const Profile& p, const DensityTree& tree, const StopConfig& cfg) {
    cfg.validate();
    const int q = tree.set().q();
    int mdepth = cfg.max_depth > 0 ? cfg.max_depth : 2 * q - 2;
    mdepth = std::clamp(mdepth, 1, 2 * q);

    Scanner sc{p, tree, cfg, mdepth, tree.lambda(), ScanOutcome{}, {}};
    sc.out.stack.profile = &p;
    sc.out.stack.provenance = "scan";
    sc.out.stack.levels.resize(mdepth);
    sc.out.max_depth = mdepth;
    sc.visit({1, 0, 0}, 1.0, SeamStates{});
    while (!sc.out.stack.levels.empty() && sc.out.stack.levels.back().empty()) {
        sc.out.stack.levels.pop_back();
    }
    return std::move(sc.out);
}

MartingaleReport martingale_diagnostics(const DensityTree& tree,
                                        const std::vector<StopVerdict>& antichain) {
    using i128 = __int128;
    const int q = tree.set().q();
    const int s_exp = 6 * q + 1;  // common denominator 2^(6q+1) for all terms

    std::unordered_map<uint64_t, uint64_t> counts;
    const auto count_of = [&](const DyadicBox& b) -> uint64_t {
        const uint64_t key = (static_cast<uint64_t>(b.level) << 52) |
                             (static_cast<uint64_t>(b.ix) << 26) |
                             static_cast<uint64_t>(b.iy);
        auto it = counts.find(key);
        if (it != counts.end()) return it->second;
        const uint64_t c = tree.count(b);
        counts.emplace(key, c);
        return c;
    };

    i128 tiled = 0;     // sum of leaf areas
    i128 e_rho2 = 0;    // E[rho_tau^2]
    i128 sum_d2 = 0;    // E[sum of squared increments along the path]
    for (const StopVerdict& v : antichain) {
        const int n = v.box.level;
        tiled += i128{1} << (s_exp + 1 - n);
        const i128 c = count_of(v.box);
        e_rho2 += c * c << (n + 2 * q);
        for (DyadicBox b = v.box; b.level > 1;) {
            b = b.parent();
            const i128 d = 2 * static_cast<i128>(count_of(b.child(0))) -
                           static_cast<i128>(count_of(b));
            sum_d2 += d * d << (2 * b.level - n + 2 * q);
        }
    }
    if (tiled != i128{1} << s_exp) {
        throw std::invalid_argument("martingale diagnostics: antichain does not tile the square");
    }

    const i128 total = count_of({1, 0, 0});
    const i128 var = e_rho2 - (total * total << (2 * q + 1));
    const auto to_double = [&](i128 v) {
        return static_cast<double>(std::ldexp(static_cast<long double>(v), -s_exp));
    };

    MartingaleReport r;
    r.lambda = tree.lambda();
    r.e_rho_sq = to_double(e_rho2);
    r.var_rho = to_double(var);
    r.sum_increments_sq = to_double(sum_d2);
    r.identity_gap = to_double(var - sum_d2);
    r.predicted_image = r.lambda == 0.0
                            ? 0.0
                            : static_cast<double>(static_cast<long double>(e_rho2) /
                                                  static_cast<long double>(total)) /
                                  std::ldexp(1.0, 4 * q + 1);
    return r;
}

namespace {

// Best sum of |increment| * area over antichains of boxes with
// |increment| >= sq, exploring down to `cap`.  Ties go to the parent, which
// covers more mass for the same gain.
double case2_best(const DensityTree& tree, const DyadicBox& b, double sq, int cap,
                  std::vector<MapPiece>& out) {
    if (tree.count(b) == 0) return 0.0;
    const double inc = tree.increment(b);
    const bool eligible = std::fabs(inc) >= sq;
    const double own = eligible ? std::fabs(inc) * b.area() : 0.0;
    if (b.level < cap) {
        std::vector<MapPiece> sub_out;
        const double sub = case2_best(tree, b.child(0), sq, cap, sub_out) +
                           case2_best(tree, b.child(1), sq, cap, sub_out);
        if (sub > own) {
            out.insert(out.end(), sub_out.begin(), sub_out.end());
            return sub;
        }
    }
    if (eligible) out.push_back({b, std::copysign(sq, inc)});
    return own;
}

}  // namespace

std::pair<MapStack, StepMetrics> expansion_step(const Profile& p, const PixelSet& set,
                                                const StopConfig& cfg) {
    cfg.validate();
    const DensityTree tree(set);
    const double lam = tree.lambda();
    StepMetrics met;
    met.lambda = lam;
    if (lam < cfg.gamma || lam > 1.0 - cfg.gamma_prime) {
        throw std::invalid_argument(
            "expansion step: lambda(A) outside [gamma, 1 - gamma']");
    }

    ScanOutcome scan = stop_scan(p, tree, cfg);
    for (int i = 0; i < 5; ++i) met.mass[i] = scan.mass[i];
    met.mass_shallow = scan.mass_shallow;
    met.gain_antichain = scan.predicted_image - lam;
    if (scan.stack.piece_count() > 0) {
        rng::Sequence seq(cfg.seed, rng::kGuardPoints);
        const int ns = std::min(cfg.mc_samples, 512);
        double dev = 0.0;
        for (int i = 0; i < ns; ++i) {
            const Vec2 x{seq.uniform(), seq.uniform()};
            dev = std::max(dev,
                           (scan.stack.jacobian(x) - Mat2::identity()).norm_inf());
        }
        met.jac_dev_sup = dev;
    }

    const int q = set.q();
    const double sq = std::sqrt(cfg.eps2);
    std::vector<MapPiece> picks;
    const double best = case2_best(tree, {1, 0, 0}, sq, 2 * q, picks);
    const double gain2 = sq * best;
    double mass2 = 0.0;
    for (const MapPiece& piece : picks) mass2 += piece.box.area();
    met.gain_threshold = gain2;
    met.threshold_mass = mass2;

    const bool ok13 = met.gain_antichain > 0.0 && scan.stack.piece_count() > 0;
    const bool ok2 = gain2 > 0.0 && mass2 >= 1.0 / 12.0;
    if (!ok13 && !ok2) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "expansion step: no case makes progress (lambda %.6g, "
                      "antichain gain %.3g, threshold gain %.3g over mass %.3g)",
                      lam, met.gain_antichain, gain2, mass2);
        throw std::runtime_error(buf);
    }

    MapStack stack(&p);
    if (ok2 && (!ok13 || gain2 >= met.gain_antichain)) {
        stack.levels.emplace_back();
        for (const MapPiece& piece : picks) stack.levels.back().add(piece);
        stack.antichain = scan.stack.antichain;
        stack.provenance = "case2";
        met.gain = gain2;
        met.chosen = "case2";
    } else {
        stack = std::move(scan.stack);
        stack.provenance = "case13";
        met.gain = met.gain_antichain;
        met.chosen = "case13";
    }
    met.pieces = stack.piece_count();
    return {std::move(stack), std::move(met)};
}

namespace {

void mark_pieces(const MapStack& stack, int side, std::vector<uint8_t>& touched) {
    for (const MapLevel& lvl : stack.levels) {
        for (const MapPiece& piece : lvl.pieces()) {
            const int px_w = side >> (piece.box.level / 2);
            const int px_h = side >> ((piece.box.level - 1) / 2);
            const int x0 = piece.box.ix * px_w;
            const int y0 = piece.box.iy * px_h;
            for (int iy = y0; iy < y0 + px_h; ++iy) {
                std::fill_n(touched.begin() + static_cast<size_t>(iy) * side + x0, px_w,
                            uint8_t{1});
            }
        }
    }
}

// Raster of the image of `base` under the composition of the pending
// stacks (applied in order): each touched pixel takes base's value at the
// inverse image of its center.  Re-rasterizing from the last promoted
// raster through the whole pending chain lets sub-pixel shifts compound
// until they cross a pixel center; per-step resampling would reset them.
void rerasterize(const PixelSet& base, PixelSet& out,
                 const std::vector<MapStack>& stacks,
                 const std::vector<size_t>& pending,
                 const std::vector<uint8_t>& touched) {
    const int side = base.side();
    const double inv_side = 1.0 / side;
    for (int iy = 0; iy < side; ++iy) {
        for (int ix = 0; ix < side; ++ix) {
            if (!touched[static_cast<size_t>(iy) * side + ix]) continue;
            Vec2 pre{(ix + 0.5) * inv_side, (iy + 0.5) * inv_side};
            for (size_t k = pending.size(); k-- > 0;) {
                pre = stacks[pending[k]].inverse(pre);
            }
            const int jx = std::clamp(static_cast<int>(pre.x * side), 0, side - 1);
            const int jy = std::clamp(static_cast<int>(pre.y * side), 0, side - 1);
            out.set(ix, iy, base.get(jx, jy));
        }
    }
}

double sampled_bilip(const std::vector<MapStack>& stacks, uint64_t seed) {
    if (stacks.empty()) return 1.0;
    const auto apply = [&](Vec2 v) {
        for (const MapStack& s : stacks) v = s.evaluate(v);
        return v;
    };
    rng::Sequence seq(seed, rng::kLipschitzPairs);
    double hi = 1.0;
    double lo = 1.0;
    for (int i = 0; i < 1000; ++i) {
        Vec2 x{seq.uniform(), seq.uniform()};
        const double scale = std::pow(10.0, -static_cast<double>(i % 5));
        const double ang = seq.uniform(0.0, 6.283185307179586);
        Vec2 y{std::clamp(x.x + scale * std::cos(ang), 0.0, 1.0),
               std::clamp(x.y + scale * std::sin(ang), 0.0, 1.0)};
        const double d0 = std::hypot(y.x - x.x, y.y - x.y);
        if (d0 == 0.0) continue;
        const Vec2 fx = apply(x);
        const Vec2 fy = apply(y);
        const double ratio = std::hypot(fy.x - fx.x, fy.y - fx.y) / d0;
        hi = std::max(hi, ratio);
        if (ratio > 0.0) lo = std::min(lo, ratio);
    }
    return std::max(hi, 1.0 / lo);
}

}  // namespace

ExpandResult expand_to_target(const Profile& p, const PixelSet& set,
                              const StopConfig& cfg, double step_floor) {
    if (!(step_floor > 0.0)) {
        throw std::invalid_argument("expand: step floor must be positive");
    }
    cfg.validate();

    ExpandResult res(set);
    const double target = 1.0 - cfg.gamma_prime;
    const int budget =
        static_cast<int>(std::ceil((target - cfg.gamma) / step_floor)) + 1;
    res.raster_trace.push_back(res.set.measure());
    std::vector<double> gains;

    PixelSet base = res.set;       // raster at the last visible change
    std::vector<size_t> pending;   // stacks applied since base
    const int side = base.side();
    std::vector<uint8_t> touched(static_cast<size_t>(side) * side, 0);
    while (res.set.measure() < target) {
        if (static_cast<int>(res.stacks.size()) >= budget) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "expand: step budget %d exhausted at measure %.6g",
                          budget, res.set.measure());
            throw BudgetExhausted(buf, std::move(gains));
        }
        // While the pending chain is open the raster equals the one the
        // previous step scanned, so that step repeats exactly; extend the
        // chain with a copy instead of rescanning.
        if (!pending.empty()) {
            res.stacks.push_back(res.stacks.back());
            res.steps.push_back(res.steps.back());
        } else {
            auto [stack, met] = expansion_step(p, res.set, cfg);
            res.steps.push_back(std::move(met));
            res.stacks.push_back(std::move(stack));
        }
        gains.push_back(res.steps.back().gain);
        mark_pieces(res.stacks.back(), side, touched);
        pending.push_back(res.stacks.size() - 1);
        rerasterize(base, res.set, res.stacks, pending, touched);
        res.raster_trace.push_back(res.set.measure());
        if (!(res.set == base)) {
            base = res.set;
            pending.clear();
            std::fill(touched.begin(), touched.end(), uint8_t{0});
        }
    }
    res.c0_hat = sampled_bilip(res.stacks, cfg.seed);
    return res;
}

ExpandResult expand_to_target(const Profile& p, const PixelSet& set, double gamma,
                              double gamma_prime, double eta, double step_floor) {
    return expand_to_target(p, set, StopConfig::defaults(gamma, gamma_prime, eta),
                            step_floor);
}

}  // namespace multiscale
}  // namespace bilex
