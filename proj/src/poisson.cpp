#include "bilex/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bilex/map_stack.hpp"
#include "bilex/pixel_set.hpp"
#include "bilex/rng.hpp"

namespace bilex {
namespace poisson {

namespace {

// log of the per-unit-area success probability at shortfall d':
// (1 - delta') * g + (-delta') with g = log(1 - e^{-k^2}) / k^2.
double log_rate(double kappa) {
    double t = kappa * kappa;
    // -expm1(-t) = 1 - e^{-t} without cancellation near t = 0
    return std::log(-std::expm1(-t)) / t;
}

}  // namespace

PointSample sample_poisson(int n, double intensity, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_poisson: n must be >= 1");
    if (!(intensity >= 0.0))
        throw std::invalid_argument("sample_poisson: intensity must be >= 0");
    PointSample s;
    s.n = n;
    s.occupancy.assign(static_cast<size_t>(n) * n, 0);

    // Exponential race: the count is the number of unit-rate arrivals
    // inside [0, lambda_total], so one stream fixes it exactly.
    double lambda_total = intensity * n * n;
    rng::Sequence race(seed, rng::kPoissonCounts);
    size_t count = 0;
    double t = -std::log1p(-race.uniform());
    while (t <= lambda_total) {
        ++count;
        t -= std::log1p(-race.uniform());
    }

    s.points.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        rng::Sequence pos(seed, rng::kPoissonPoints, i * 2);
        Vec2 p{pos.uniform(0.0, n), pos.uniform(0.0, n)};
        s.points.push_back(p);
        int sx = std::min(n - 1, static_cast<int>(p.x));
        int sy = std::min(n - 1, static_cast<int>(p.y));
        s.occupancy[static_cast<size_t>(sy) * n + sx] = 1;
    }
    for (uint8_t o : s.occupancy) s.k += o;
    return s;
}

double critical_kappa(double eps) {
    if (!(eps > 0.0))
        throw std::domain_error("critical_kappa: eps must be > 0");
    // log_rate is increasing from -inf to 0, so bisect on kappa.
    double lo = 1e-9, hi = 1.0;
    while (log_rate(hi) < -eps) hi *= 2.0;
    while (log_rate(lo) > -eps) lo *= 0.5;
    for (int i = 0; i < 200 && hi - lo > 1e-9 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (log_rate(mid) < -eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double minimal_delta_prime(double eps, double kappa) {
    if (!(eps > 0.0) || !(kappa > 0.0))
        throw std::domain_error("minimal_delta_prime: need eps > 0, kappa > 0");
    double g = log_rate(kappa);
    // Constraint: g - d' (g + 1) >= -eps with d' in [0, 1).
    if (g + 1.0 >= 0.0) {
        // Success log-rate decreases in d'; d' = 0 is best.
        if (g >= -eps) return 0.0;
        throw std::domain_error(
            "minimal_delta_prime: kappa below critical_kappa(eps)");
    }
    double d = (g + eps) / (g + 1.0);
    if (d >= 1.0)
        throw std::domain_error(
            "minimal_delta_prime: no delta' < 1 satisfies the rate bound");
    return std::max(0.0, d);
}

double minimal_eps(double kappa, double delta_prime) {
    if (!(kappa > 0.0) || !(delta_prime >= 0.0) || !(delta_prime < 1.0))
        throw std::domain_error(
            "minimal_eps: need kappa > 0 and delta' in [0, 1)");
    double g = log_rate(kappa);
    return (1.0 - delta_prime) * (-g) + delta_prime;
}

namespace {

struct Construction {
    PixelSet raster;
    PixelSet expanded;
    std::vector<MapStack> stacks;
    int steps = 0;
    double lambda_raster = 0.0;
    double lambda_expanded = 0.0;
    double c0_hat = 1.0;
    int m = 0;  // kappa-cells per side
    std::vector<uint8_t> b;
    int b_count = 0;

    explicit Construction(int q) : raster(q), expanded(q) {}

    Vec2 forward_unit(Vec2 u) const {
        for (const MapStack& s : stacks) u = s.evaluate(u);
        return u;
    }
};

void validate(const PointSample& x, const PointSample& y,
              const EmbedConfig& cfg) {
    if (x.n < 1 || x.n != y.n)
        throw std::invalid_argument("embed: samples must share n >= 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw std::invalid_argument("embed: delta must lie in (0, 1)");
    if (!(cfg.delta_prime > 0.0 && cfg.delta_prime < 1.0))
        throw std::invalid_argument("embed: delta' must lie in (0, 1)");
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("embed: eta must be > 0");
    if (cfg.q < 3 || cfg.q > 14)
        throw std::invalid_argument("embed: q must lie in [3, 14]");
    if (!(cfg.kappa > 0.0) || cfg.kappa > x.n)
        throw std::invalid_argument("embed: kappa must lie in (0, n]");
    double cells = x.n / cfg.kappa;
    if (std::fabs(cells - std::round(cells)) > 1e-9 * cells)
        throw std::invalid_argument("embed: n / kappa must be an integer");
    if (x.k < cfg.delta * x.n * x.n)
        throw std::invalid_argument(
            "embed: occupied squares fall short of delta * n^2");
}

Construction build(const Profile& p, const PointSample& x,
                   const EmbedConfig& cfg) {
    Construction c(cfg.q);
    int n = x.n;
    int side = c.raster.side();

    // A = union of occupied unit squares, scaled to the unit square and
    // rasterized through pixel centers.
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix) {
            double cx = (ix + 0.5) / side * n;
            double cy = (iy + 0.5) / side * n;
            int sx = std::min(n - 1, static_cast<int>(cx));
            int sy = std::min(n - 1, static_cast<int>(cy));
            if (x.occupied(sx, sy)) c.raster.set(ix, iy, true);
        }
    c.lambda_raster = c.raster.measure();

    double target = 1.0 - cfg.delta_prime;
    if (c.lambda_raster >= target) {
        c.expanded = c.raster;
    } else {
        double gamma = std::min(cfg.delta, c.lambda_raster);
        multiscale::ExpandResult res = multiscale::expand_to_target(
            p, c.raster, gamma, cfg.delta_prime, cfg.eta, cfg.step_floor);
        c.expanded = std::move(res.set);
        c.stacks = std::move(res.stacks);
        c.steps = static_cast<int>(res.steps.size());
        c.c0_hat = res.c0_hat;
    }
    c.lambda_expanded = c.expanded.measure();

    // B = kappa-cells whose area meets the expanded raster (witnessed by a
    // set pixel center).
    c.m = static_cast<int>(std::round(n / cfg.kappa));
    c.b.assign(static_cast<size_t>(c.m) * c.m, 0);
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix) {
            if (!c.expanded.get(ix, iy)) continue;
            double gx = (ix + 0.5) / side * c.m;
            double gy = (iy + 0.5) / side * c.m;
            int bx = std::min(c.m - 1, static_cast<int>(gx));
            int by = std::min(c.m - 1, static_cast<int>(gy));
            c.b[static_cast<size_t>(by) * c.m + bx] = 1;
        }
    for (uint8_t v : c.b) c.b_count += v;
    return c;
}

double boundary_distance(Vec2 p, int n) {
    return std::min(std::min(p.x, n - p.x), std::min(p.y, n - p.y));
}

// Perimeter point at arc-length parameter t in [0, 4n), counterclockwise
// from the origin corner.
Vec2 perimeter_point(double t, int n) {
    if (t < n) return {t, 0.0};
    if (t < 2.0 * n) return {static_cast<double>(n), t - n};
    if (t < 3.0 * n) return {3.0 * n - t, static_cast<double>(n)};
    return {0.0, 4.0 * n - t};
}

struct PairPoint {
    Vec2 x;        // location in the domain square
    bool boundary; // boundary points are pinned by T
    size_t index;  // X-point index when not boundary
};

// One pair-sample point: ~25% boundary, else a uniform X-point.
PairPoint draw_point(rng::Sequence& seq, const PointSample& x) {
    PairPoint pt;
    if (seq.uniform() < 0.25 || x.points.empty()) {
        pt.boundary = true;
        pt.index = 0;
        pt.x = perimeter_point(seq.uniform(0.0, 4.0 * x.n), x.n);
    } else {
        pt.boundary = false;
        pt.index = std::min(x.points.size() - 1,
                            static_cast<size_t>(seq.uniform() *
                                                static_cast<double>(
                                                    x.points.size())));
        pt.x = x.points[pt.index];
    }
    return pt;
}

}  // namespace

PointSample forced_event_y(const Profile& p, const PointSample& x,
                           const EmbedConfig& cfg) {
    PointSample dummy = x;  // same n; only the grid shape matters here
    validate(x, dummy, cfg);
    Construction c = build(p, x, cfg);
    PointSample y;
    y.n = x.n;
    y.occupancy.assign(static_cast<size_t>(x.n) * x.n, 0);
    double kappa = static_cast<double>(x.n) / c.m;
    for (int by = 0; by < c.m; ++by)
        for (int bx = 0; bx < c.m; ++bx) {
            if (!c.b[static_cast<size_t>(by) * c.m + bx]) continue;
            Vec2 pt{(bx + 0.5) * kappa, (by + 0.5) * kappa};
            y.points.push_back(pt);
            int sx = std::min(x.n - 1, static_cast<int>(pt.x));
            int sy = std::min(x.n - 1, static_cast<int>(pt.y));
            y.occupancy[static_cast<size_t>(sy) * x.n + sx] = 1;
        }
    for (uint8_t o : y.occupancy) y.k += o;
    return y;
}

RoughIsometryReport embed(const Profile& p, const PointSample& x,
                          const PointSample& y, const EmbedConfig& cfg) {
    validate(x, y, cfg);
    if (cfg.n_pairs < 2)
        throw std::invalid_argument("embed: n_pairs must be >= 2");

    RoughIsometryReport rep;
    rep.kappa = cfg.kappa;
    rep.delta_prime = cfg.delta_prime;
    rep.eps = cfg.eps > 0.0 ? cfg.eps
                            : minimal_eps(cfg.kappa, cfg.delta_prime);
    rep.worst_mult[0] = rep.worst_mult[1] = {0.0, 0.0};
    rep.worst_add[0] = rep.worst_add[1] = {0.0, 0.0};
    rep.worst_dense = {0.0, 0.0};

    Construction c = build(p, x, cfg);
    rep.steps = c.steps;
    rep.expanded_measure = c.lambda_expanded;
    rep.b_cells = c.b_count;

    int n = x.n;
    int m = c.m;
    double kappa = static_cast<double>(n) / m;

    // Y-points indexed by kappa-cell.
    std::vector<std::vector<size_t>> cell_points(
        static_cast<size_t>(m) * m);
    for (size_t i = 0; i < y.points.size(); ++i) {
        int gx = std::min(m - 1, static_cast<int>(y.points[i].x / kappa));
        int gy = std::min(m - 1, static_cast<int>(y.points[i].y / kappa));
        cell_points[static_cast<size_t>(gy) * m + gx].push_back(i);
        if (!c.b[static_cast<size_t>(gy) * m + gx]) ++rep.e_outside;
    }
    for (size_t cell = 0; cell < c.b.size(); ++cell)
        if (c.b[cell] && cell_points[cell].empty()) ++rep.e_missing;
    rep.event_e = rep.e_missing == 0 && rep.e_outside == 0;
    if (!rep.event_e) return rep;

    // phi scaled to [0, n]^2; the composed map fixes the square boundary,
    // so only the finitely many X-points ever need the stack evaluation.
    // An empty stack list is the identity exactly, not up to rescaling.
    auto phi = [&](Vec2 v) -> Vec2 {
        if (c.stacks.empty()) return v;
        Vec2 u = c.forward_unit({v.x / n, v.y / n});
        return {u.x * n, u.y * n};
    };
    std::vector<Vec2> zimg(x.points.size());
    for (size_t i = 0; i < x.points.size(); ++i) zimg[i] = phi(x.points[i]);

    // T on the X-points: nearest Y-point in the image's kappa-cell, widening
    // the search ring when rasterization left that cell outside B.
    std::vector<Vec2> timg(x.points.size());
    double max_snap = 0.0;
    for (size_t i = 0; i < x.points.size(); ++i) {
        Vec2 z = zimg[i];
        int gx = std::min(m - 1, static_cast<int>(z.x / kappa));
        int gy = std::min(m - 1, static_cast<int>(z.y / kappa));
        double best = std::numeric_limits<double>::infinity();
        Vec2 pick{0.0, 0.0};
        bool missed = false;
        for (int ring = 0; ring < m; ++ring) {
            for (int by = std::max(0, gy - ring);
                 by <= std::min(m - 1, gy + ring); ++by)
                for (int bx = std::max(0, gx - ring);
                     bx <= std::min(m - 1, gx + ring); ++bx) {
                    if (std::max(std::abs(bx - gx), std::abs(by - gy)) !=
                        ring)
                        continue;
                    for (size_t j :
                         cell_points[static_cast<size_t>(by) * m + bx]) {
                        double d = dist(z, y.points[j]);
                        if (d < best) {
                            best = d;
                            pick = y.points[j];
                        }
                    }
                }
            if (best < std::numeric_limits<double>::infinity()) break;
            missed = true;
        }
        if (missed) ++rep.cell_misses;
        timg[i] = pick;
        max_snap = std::max(max_snap, best);
    }

    // C: every Y-point must sit near the image of T, where the image
    // includes the pinned boundary.
    for (const Vec2& yp : y.points) {
        double d = boundary_distance(yp, n);
        for (const Vec2& t : timg) d = std::min(d, dist(yp, t));
        if (d > rep.c) {
            rep.c = d;
            rep.worst_dense = yp;
        }
    }

    auto t_of = [&](const PairPoint& pt) -> Vec2 {
        return pt.boundary ? pt.x : timg[pt.index];
    };
    auto phi_of = [&](const PairPoint& pt) -> Vec2 {
        return pt.boundary ? pt.x : zimg[pt.index];
    };

    // First half of the pair budget fits (M, D); the second half checks the
    // fitted constants verbatim on fresh pairs.
    size_t n_fit = static_cast<size_t>(cfg.n_pairs) / 2;
    size_t n_check = static_cast<size_t>(cfg.n_pairs) - n_fit;

    double d_needed = 0.0;
    for (size_t i = 0; i < n_fit; ++i) {
        rng::Sequence seq(cfg.seed, rng::kPairSampling, i * 8);
        PairPoint a = draw_point(seq, x);
        PairPoint b = draw_point(seq, x);
        double dx = dist(a.x, b.x);
        if (dx == 0.0) {
            ++rep.pairs_checked;  // counted, but carries no constraint
            continue;
        }
        double dz = dist(phi_of(a), phi_of(b));
        double ratio = std::max(dz / dx, dx / dz);
        if (ratio > rep.m) {
            rep.m = ratio;
            rep.worst_mult[0] = a.x;
            rep.worst_mult[1] = b.x;
        }
        ++rep.pairs_checked;
    }
    for (size_t i = 0; i < n_fit; ++i) {
        rng::Sequence seq(cfg.seed, rng::kPairSampling, i * 8);
        PairPoint a = draw_point(seq, x);
        PairPoint b = draw_point(seq, x);
        double dx = dist(a.x, b.x);
        if (dx == 0.0) continue;
        double dy = dist(t_of(a), t_of(b));
        double viol = std::max(dy - rep.m * dx, dx / rep.m - dy);
        if (viol > d_needed) {
            d_needed = viol;
            rep.worst_add[0] = a.x;
            rep.worst_add[1] = b.x;
        }
    }
    // Snapping moves each endpoint by at most max_snap, so 2 * max_snap is
    // always an admissible additive slack on top of the phi ratio bound.
    rep.d = std::max(d_needed, 2.0 * max_snap);

    rep.def11_ok = true;
    for (size_t i = 0; i < n_check; ++i) {
        rng::Sequence seq(cfg.seed, rng::kPairSampling, (n_fit + i) * 8);
        PairPoint a = draw_point(seq, x);
        PairPoint b = draw_point(seq, x);
        double dx = dist(a.x, b.x);
        ++rep.pairs_checked;
        if (dx == 0.0) continue;
        double dy = dist(t_of(a), t_of(b));
        if (dy > rep.m * dx + rep.d || dy < dx / rep.m - rep.d)
            rep.def11_ok = false;
    }
    return rep;
}

RoughIsometryReport embed(const Profile& p, const PointSample& x,
                          const PointSample& y, double delta, double eps,
                          uint64_t seed) {
    EmbedConfig cfg;
    cfg.delta = delta;
    cfg.eps = eps;
    cfg.seed = seed;
    // Coarsest grid-compatible kappa at or above critical: n / kappa must
    // be an integer, so take the largest cell count that keeps kappa >= kc.
    double kc = critical_kappa(eps);
    int cells = std::max(1, static_cast<int>(std::floor(x.n / kc)));
    cfg.kappa = x.n / static_cast<double>(cells);
    // Midpoint of the admissible delta' interval, kept inside (0, 1).
    double g = log_rate(cfg.kappa);
    double dmin = minimal_delta_prime(eps, cfg.kappa);
    double dmax = g + 1.0 > 0.0 ? std::min(1.0, (g + eps) / (g + 1.0)) : 1.0;
    cfg.delta_prime =
        std::min(1.0 - 1e-6, std::max(1e-6, 0.5 * (dmin + dmax)));
    return embed(p, x, y, cfg);
}

}  // namespace poisson
}  // namespace bilex
