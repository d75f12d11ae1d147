#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bilex/pixel_set.hpp"
#include "bilex/poisson.hpp"
#include "bilex/profile.hpp"
#include "doctest.h"

using namespace bilex;
using namespace bilex::poisson;

namespace {

const Profile& profile() {
    static Profile p;
    return p;
}

// One point per unit square, dead center: lambda(raster) = 1, and with
// kappa = 1 the snap map is the identity on the sample.
PointSample unit_grid_sample(int n) {
    PointSample s;
    s.n = n;
    s.occupancy.assign(static_cast<size_t>(n) * n, 1);
    s.k = n * n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            s.points.push_back({i + 0.5, j + 0.5});
    return s;
}

// Defining rate identity of the solvers, evaluated directly.
double success_log_rate(double kappa, double delta_prime) {
    double t = kappa * kappa;
    return (1.0 - delta_prime) * std::log(1.0 - std::exp(-t)) / t -
           delta_prime;
}

}  // namespace

TEST_CASE("poisson counts and occupancy match the sample") {
    const PointSample s = sample_poisson(6, 10.0, 7);

    // N ~ Poisson(360): three sigma around the mean.
    const double mean = 360.0, sd = std::sqrt(360.0);
    CHECK(s.points.size() > mean - 3.0 * sd);
    CHECK(s.points.size() < mean + 3.0 * sd);

    std::vector<uint8_t> occ(36, 0);
    int inside = 0;
    for (const Vec2& p : s.points) {
        if (p.x >= 0.0 && p.x < 6.0 && p.y >= 0.0 && p.y < 6.0) ++inside;
        occ[static_cast<size_t>(p.y) * 6 + static_cast<size_t>(p.x)] = 1;
    }
    CHECK(inside == static_cast<int>(s.points.size()));
    int k = 0;
    for (size_t i = 0; i < occ.size(); ++i) {
        CHECK(occ[i] == s.occupancy[i]);
        k += occ[i];
    }
    CHECK(k == s.k);

    // Same seed reproduces the sample; another seed moves it.
    const PointSample again = sample_poisson(6, 10.0, 7);
    REQUIRE(again.points.size() == s.points.size());
    CHECK(again.points[0].x == s.points[0].x);
    const PointSample other = sample_poisson(6, 10.0, 8);
    CHECK(other.points.size() != s.points.size());
}

TEST_CASE("zero intensity yields the empty sample") {
    const PointSample s = sample_poisson(4, 0.0, 1);
    CHECK(s.points.empty());
    CHECK(s.k == 0);
    CHECK(s.occupancy.size() == 16);
}

TEST_CASE("occupied square count matches the binomial oracle") {
    // Each unit square is occupied independently with p = 1 - e^{-1}, so
    // E[k] = 64 p and Var[k] = 64 p (1 - p) at n = 8, intensity 1.
    const double p = 1.0 - std::exp(-1.0);
    const int reps = 200;
    double sum_k = 0.0, sum_n = 0.0;
    for (int seed = 0; seed < reps; ++seed) {
        const PointSample s = sample_poisson(8, 1.0, 1000 + seed);
        sum_k += s.k;
        sum_n += static_cast<double>(s.points.size());
    }
    const double mean_k = sum_k / reps;
    const double sigma_k = std::sqrt(64.0 * p * (1.0 - p) / reps);
    CHECK(std::fabs(mean_k - 64.0 * p) <= 3.0 * sigma_k);

    const double mean_n = sum_n / reps;
    const double sigma_n = std::sqrt(64.0 / reps);
    CHECK(std::fabs(mean_n - 64.0) <= 3.0 * sigma_n);
}

TEST_CASE("occupancy fraction is stable across n") {
    const double p = 1.0 - std::exp(-1.0);
    for (int n : {4, 6, 8}) {
        double sum = 0.0;
        const int reps = 50;
        for (int seed = 0; seed < reps; ++seed)
            sum += sample_poisson(n, 1.0, 500 + seed).k /
                   static_cast<double>(n * n);
        const double sigma =
            std::sqrt(p * (1.0 - p) / (n * n)) / std::sqrt(reps);
        CHECK(std::fabs(sum / reps - p) <= 3.0 * sigma);
    }
}

TEST_CASE("rate solvers satisfy their defining identities") {
    // critical kappa: the delta' = 0 rate equals exactly -eps.
    for (double eps : {0.05, 0.1, 0.5, 2.0}) {
        const double kc = critical_kappa(eps);
        CHECK(std::fabs(success_log_rate(kc, 0.0) + eps) <= 1e-8);
    }
    CHECK(critical_kappa(0.5) < critical_kappa(0.1));

    // minimal delta': the rate bound is tight at the solution.
    const double d = minimal_delta_prime(5.1, 0.5);
    CHECK(d > 0.0);
    CHECK(d < 1.0);
    CHECK(std::fabs(success_log_rate(0.5, d) + 5.1) <= 1e-9);
    CHECK(std::fabs(minimal_eps(0.5, d) - 5.1) <= 1e-12);

    // Above critical the constraint already holds with no shortfall.
    CHECK(minimal_delta_prime(0.1, critical_kappa(0.1) + 0.01) == 0.0);

    // minimal eps: tight by definition, checked against the raw rate.
    const double eps = minimal_eps(0.5, 0.2);
    CHECK(std::fabs(success_log_rate(0.5, 0.2) + eps) <= 1e-12);
    CHECK(eps > 5.0);

    CHECK_THROWS_AS(minimal_delta_prime(0.1, 1.0), std::domain_error);
    CHECK_THROWS_AS(critical_kappa(0.0), std::domain_error);
    CHECK_THROWS_AS(minimal_eps(0.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(minimal_eps(-1.0, 0.2), std::domain_error);
}

TEST_CASE("self-embedding of the unit grid is an exact isometry") {
    const PointSample s = unit_grid_sample(4);
    EmbedConfig cfg;
    cfg.kappa = 1.0;
    cfg.delta = 0.5;
    cfg.delta_prime = 0.2;
    cfg.q = 5;
    cfg.n_pairs = 2000;
    const RoughIsometryReport r = embed(profile(), s, s, cfg);

    CHECK(r.event_e);
    CHECK(r.steps == 0);  // the raster is already full
    CHECK(r.expanded_measure == 1.0);
    CHECK(r.b_cells == 16);
    CHECK(r.cell_misses == 0);
    CHECK(r.m == 1.0);
    CHECK(r.d == 0.0);
    CHECK(r.c == 0.0);
    CHECK(r.def11_ok);
    CHECK(r.pairs_checked == 2000);

    // Deterministic: a second run reproduces the report bit for bit.
    const RoughIsometryReport r2 = embed(profile(), s, s, cfg);
    CHECK(r2.m == r.m);
    CHECK(r2.d == r.d);
    CHECK(r2.c == r.c);
    CHECK(r2.pairs_checked == r.pairs_checked);
}

TEST_CASE("forced event fixture validates the full construction") {
    // Seed 42 occupies 28 of 36 squares, so the raster already exceeds the
    // 1 - delta' target and phi is the identity.
    const PointSample x = sample_poisson(6, 1.0, 42);
    REQUIRE(x.k == 28);
    EmbedConfig cfg;
    cfg.kappa = 0.5;
    cfg.delta_prime = 0.3;
    cfg.q = 5;
    cfg.n_pairs = 4000;

    const PointSample y = forced_event_y(profile(), x, cfg);
    const RoughIsometryReport r = embed(profile(), x, y, cfg);

    CHECK(r.steps == 0);
    CHECK(r.event_e);
    CHECK(r.e_missing == 0);
    CHECK(r.e_outside == 0);
    CHECK(r.b_cells == static_cast<int>(y.points.size()));
    CHECK(r.cell_misses == 0);

    // Identity phi pins the multiplicative constant; the additive slack is
    // at most one cell diagonal (two half-diagonal snaps at kappa = 1/2).
    CHECK(r.m == 1.0);
    CHECK(r.d > 0.0);
    CHECK(r.d <= 0.5 * std::sqrt(2.0) + 1e-12);
    // Unoccupied squares leave image-free cells, but seed 42 has no hole
    // deeper than a couple of cells from an occupied square or the edge.
    CHECK(r.c > 0.0);
    CHECK(r.c <= 3.0);
    CHECK(r.def11_ok);
    CHECK(r.pairs_checked == 4000);
}

TEST_CASE("embedding runs the expansion when the raster falls short") {
    const PointSample x = sample_poisson(6, 1.0, 42);
    const PointSample y = sample_poisson(6, 10.0, 4242);
    EmbedConfig cfg;
    cfg.kappa = 0.5;
    cfg.delta_prime = 0.22;  // just above the seed-42 raster measure
    cfg.q = 5;
    cfg.n_pairs = 1000;

    const RoughIsometryReport r = embed(profile(), x, y, cfg);
    CHECK(r.steps > 0);
    CHECK(r.expanded_measure >= 1.0 - cfg.delta_prime);
    // At measure 0.78 about 225 of 1024 pixels are unset and the smallest
    // cell holds 4 pixel centers, so at most 56 of the 144 cells can miss.
    CHECK(r.b_cells >= 88);
    CHECK(r.b_cells <= 144);
    // Real Poisson noise outside the image square set breaks event E.
    CHECK((r.event_e || r.e_missing + r.e_outside > 0));
    CHECK(r.eps == minimal_eps(cfg.kappa, cfg.delta_prime));
}

TEST_CASE("embed rejects inconsistent inputs") {
    const PointSample x = sample_poisson(6, 1.0, 42);
    const PointSample y = sample_poisson(6, 10.0, 43);
    EmbedConfig cfg;
    cfg.kappa = 0.5;
    cfg.q = 5;

    EmbedConfig bad = cfg;
    bad.delta = 0.99;  // 28 occupied squares < 0.99 * 36
    CHECK_THROWS_AS(embed(profile(), x, y, bad), std::invalid_argument);

    bad = cfg;
    bad.kappa = 0.7;  // 6 / 0.7 is not an integer
    CHECK_THROWS_AS(embed(profile(), x, y, bad), std::invalid_argument);

    bad = cfg;
    bad.q = 2;
    CHECK_THROWS_AS(embed(profile(), x, y, bad), std::invalid_argument);

    bad = cfg;
    bad.n_pairs = 1;
    CHECK_THROWS_AS(embed(profile(), x, y, bad), std::invalid_argument);

    PointSample other = sample_poisson(5, 10.0, 43);
    CHECK_THROWS_AS(embed(profile(), x, other, cfg), std::invalid_argument);
}

TEST_CASE("five-argument embed derives an admissible configuration") {
    // One point dead center of the unit domain: every derived quantity is
    // pinned, and the snap map collapses to the identity.
    const PointSample s = unit_grid_sample(1);
    const RoughIsometryReport r = embed(profile(), s, s, 0.5, 5.1, 3);

    CHECK(r.eps == 5.1);
    CHECK(r.kappa == 1.0);  // critical kappa for eps = 5.1 lies in (1/2, 1)
    CHECK(r.delta_prime > 0.0);
    CHECK(r.delta_prime < 1.0);
    CHECK(r.event_e);
    CHECK(r.m == 1.0);
    CHECK(r.d == 0.0);
    CHECK(r.c == 0.0);
    CHECK(r.def11_ok);

    // The derived pair satisfies the rate bound it was solved from.
    CHECK(success_log_rate(r.kappa, r.delta_prime) >= -r.eps - 1e-12);
}

TEST_CASE("forced fixture geometry is one point per image cell") {
    const PointSample x = sample_poisson(6, 1.0, 42);
    EmbedConfig cfg;
    cfg.kappa = 0.5;
    cfg.delta_prime = 0.3;
    cfg.q = 5;
    const PointSample y = forced_event_y(profile(), x, cfg);

    CHECK(y.n == 6);
    CHECK(!y.points.empty());
    CHECK(y.points.size() <= 144);
    for (const Vec2& p : y.points) {
        // Cell centers sit at half-integer multiples of kappa.
        const double gx = p.x / 0.5 - 0.5;
        const double gy = p.y / 0.5 - 0.5;
        CHECK(std::fabs(gx - std::round(gx)) <= 1e-12);
        CHECK(std::fabs(gy - std::round(gy)) <= 1e-12);
    }
    // The occupied squares of X are inside the image, so their four cells
    // each carry a point.
    CHECK(y.points.size() >= static_cast<size_t>(x.k) * 4);
}

TEST_CASE("dense sampleY makes the grid event frequent at kappa = 1") {
    // Full grid, so B covers every cell and the outside clause is vacuous;
    // each unit cell misses all of an intensity-10 sample with probability
    // e^-10, so P(event) = (1 - e^-10)^36, about 0.9984 per seed.
    const PointSample grid = unit_grid_sample(6);
    EmbedConfig cfg;
    cfg.kappa = 1.0;
    cfg.delta = 0.5;
    cfg.delta_prime = 0.2;
    cfg.q = 5;
    cfg.n_pairs = 400;

    int events = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        const PointSample y = sample_poisson(6, 10.0, 7000 + seed);
        cfg.seed = seed;
        const RoughIsometryReport r = embed(profile(), grid, y, cfg);
        CHECK(r.steps == 0);
        CHECK(r.b_cells == 36);
        CHECK(r.e_outside == 0);
        if (!r.event_e) {
            CHECK(r.e_missing >= 1);
            continue;
        }
        ++events;
        CHECK(r.def11_ok);
        CHECK(r.m >= 1.0);
        // Every Y point shares a cell with the one its center snapped to.
        CHECK(r.c <= std::sqrt(2.0) + 1e-9);
    }
    CHECK(events >= 90);
}
