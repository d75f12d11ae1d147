#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "bilex/dyadic.hpp"
#include "bilex/map_stack.hpp"
#include "bilex/multiscale.hpp"
#include "bilex/pixel_set.hpp"
#include "bilex/poisson.hpp"
#include "bilex/polar.hpp"
#include "bilex/profile.hpp"
#include "bilex/report.hpp"
#include "bilex/stretch.hpp"
#include "bilex/verify.hpp"

namespace fs = std::filesystem;

namespace {

using namespace bilex;
using report::g17;
using report::Json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << body;
    if (!out) throw IoError("short write on " + path.string());
}

PixelSet load_input(const std::string& shape, const std::string& input, int q) {
    if (!shape.empty()) return PixelSet::from_shape(shape, q);
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open " + input);
    return PixelSet::read_pgm(in);
}

// Step maps compose with the first step innermost, and MapStack::evaluate
// runs levels back to front, so the flattened stack lists the last step's
// levels first.
MapStack combine(const Profile& p, const std::vector<MapStack>& stacks) {
    MapStack all(&p);
    for (auto it = stacks.rbegin(); it != stacks.rend(); ++it)
        for (const MapLevel& lv : it->levels) all.levels.push_back(lv);
    if (!stacks.empty()) all.antichain = stacks.back().antichain;
    return all;
}

uint64_t bitmap_hash(const PixelSet& s) {
    uint64_t h = 1469598103934665603ull;
    for (int iy = 0; iy < s.side(); ++iy)
        for (int ix = 0; ix < s.side(); ++ix) {
            h ^= s.get(ix, iy) ? 0x9Eu : 0x31u;
            h *= 1099511628211ull;
        }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Membership image of `set`: every pixel center pulled back through the
// stored chain and tested against the input raster.
PixelSet pushforward_raster(const MapStack& m, const PixelSet& set) {
    PixelSet img(set.q());
    const int side = set.side();
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix) {
            const Vec2 x = m.inverse({(ix + 0.5) / side, (iy + 0.5) / side});
            const int jx =
                std::clamp(static_cast<int>(x.x * side), 0, side - 1);
            const int jy =
                std::clamp(static_cast<int>(x.y * side), 0, side - 1);
            if (set.get(jx, jy)) img.set(ix, iy, true);
        }
    return img;
}

// Provenance is one whitespace-free token of ;-separated key=value fields.
std::string prov_token(const std::string& s) {
    std::string t = s;
    for (char& c : t) {
        if (c == ' ') c = '+';
        if (c == ';') c = '|';
    }
    return t;
}

std::string prov_field(const std::string& prov, const std::string& key) {
    const std::string want = key + "=";
    size_t at = 0;
    while (at < prov.size()) {
        size_t end = prov.find(';', at);
        if (end == std::string::npos) end = prov.size();
        if (prov.compare(at, want.size(), want) == 0)
            return prov.substr(at + want.size(), end - at - want.size());
        at = end + 1;
    }
    return "";
}

// ---------------------------------------------------------------- stretch

struct StretchArgs {
    std::string shape;
    std::string input;
    std::string out = "out";
    double gamma = 0.2;
    double gamma_prime = 0.2;
    double eta = 0.5;
    double step_floor = 4e-4;
    double eps1 = 0.0;  // 0: derived from eta
    double eps2 = 0.0;
    int q = 5;
    int max_depth = 0;
    int mc_samples = 0;
    uint64_t seed = 1;
    size_t lip_pairs = 400;
    size_t measure_samples = 20000;
    bool dry_run = false;
    bool svg = false;
};

int cmd_stretch(const StretchArgs& a) {
    Profile p;
    multiscale::StopConfig cfg =
        multiscale::StopConfig::defaults(a.gamma, a.gamma_prime, a.eta);
    if (a.eps1 > 0.0) cfg.eps1 = a.eps1;
    if (a.eps2 > 0.0) cfg.eps2 = a.eps2;
    if (a.max_depth > 0) cfg.max_depth = a.max_depth;
    if (a.mc_samples > 0) cfg.mc_samples = a.mc_samples;
    cfg.seed = a.seed;
    cfg.validate();

    const PixelSet set = load_input(a.shape, a.input, a.q);
    fs::create_directories(a.out);
    const fs::path out(a.out);

    Json mx;
    mx.put("schema", "bilex-metrics 1");
    mx.put("command", "stretch");
    if (!a.shape.empty())
        mx.put("shape", a.shape);
    else
        mx.put("input", a.input);
    mx.put("q", set.q());
    mx.put("gamma", a.gamma);
    mx.put("gamma_prime", a.gamma_prime);
    mx.put("eta", a.eta);
    mx.put("eps1", cfg.eps1);
    mx.put("eps2", cfg.eps2);
    mx.put("step_floor", a.step_floor);
    mx.put("seed", static_cast<long long>(a.seed));
    mx.put("initial_measure", set.measure());

    if (a.dry_run) {
        const DensityTree tree(set);
        std::vector<double> nonempty, max_inc, max_delta;
        // increment() needs children one level down, so stop one short
        const int top = std::min(tree.max_level() - 1, 11);
        for (int lvl = 1; lvl <= top; ++lvl) {
            int filled = 0;
            double inc = 0.0, del = 0.0;
            for (int ix = 0; ix < DyadicBox::cols(lvl); ++ix)
                for (int iy = 0; iy < DyadicBox::rows(lvl); ++iy) {
                    const DyadicBox b{lvl, ix, iy};
                    if (tree.count(b) == 0) continue;
                    ++filled;
                    inc = std::max(inc, std::fabs(tree.increment(b)));
                    del = std::max(del, std::fabs(tree.stretch_delta(b)));
                }
            nonempty.push_back(filled);
            max_inc.push_back(inc);
            max_delta.push_back(del);
        }
        mx.put("dry_run", true);
        mx.put("lambda", tree.lambda());
        mx.put("pixels", static_cast<long long>(set.count()));
        mx.put("tree_levels", tree.max_level());
        mx.put("tree_nonempty_boxes", nonempty);
        mx.put("tree_max_increment", max_inc);
        mx.put("tree_max_stretch_delta", max_delta);
        write_text(out / "metrics.json", mx.str(2) + "\n");
        return 0;
    }

    std::optional<multiscale::ExpandResult> res;
    try {
        res = multiscale::expand_to_target(p, set, cfg, a.step_floor);
    } catch (const multiscale::BudgetExhausted& e) {
        mx.put("status", "budget-exhausted");
        mx.put("error", e.what());
        mx.put("gains", e.gains);
        write_text(out / "metrics.json", mx.str(2) + "\n");
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }

    MapStack all = combine(p, res->stacks);
    const PixelSet warped = pushforward_raster(all, set);
    all.provenance =
        "v=1;cmd=stretch;shape=" +
        prov_token(a.shape.empty() ? a.input : a.shape) +
        ";q=" + std::to_string(set.q()) + ";seed=" + std::to_string(a.seed) +
        ";gamma=" + g17(a.gamma) + ";gamma_prime=" + g17(a.gamma_prime) +
        ";eta=" + g17(a.eta) + ";floor=" + g17(a.step_floor) +
        ";input_measure=" + g17(set.measure()) +
        ";expanded=" + g17(warped.measure()) +
        ";bits=" + hash_hex(bitmap_hash(warped));
    {
        std::ofstream os(out / "map.stack", std::ios::binary);
        if (!os) throw IoError("cannot open " + (out / "map.stack").string());
        all.save(os);
    }
    {
        std::ofstream os(out / "warped.pgm", std::ios::binary);
        if (!os) throw IoError("cannot open " + (out / "warped.pgm").string());
        warped.write_pgm(os, true);
    }

    const auto f = [&](Vec2 v) { return all.evaluate(v); };
    const auto fi = [&](Vec2 v) { return all.inverse(v); };
    const auto lip = verify::estimate_lipschitz(f, a.lip_pairs,
                                                {1.0, 1e-1, 1e-2, 1e-3, 1e-4},
                                                a.seed);
    const auto bd =
        verify::check_boundary_and_bijection(f, fi, 1000, 1000, a.seed);
    const auto pf = verify::estimate_pushforward_measure(
        fi, set, a.measure_samples, a.seed, true);

    double mass_mean[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
    int case2 = 0, case13 = 0;
    std::vector<double> gains;
    for (const auto& s : res->steps) {
        for (int k = 0; k < 5; ++k) mass_mean[k] += s.mass[k];
        (s.chosen == "case2" ? case2 : case13)++;
        gains.push_back(s.gain);
    }
    const double inv_steps = res->steps.empty()
                                 ? 0.0
                                 : 1.0 / static_cast<double>(res->steps.size());
    Json stop;
    for (int k = 0; k < 5; ++k)
        stop.put(to_string(static_cast<StopReason>(k)), mass_mean[k] * inv_steps);
    Json cases;
    cases.put("case13", case13);
    cases.put("case2", case2);
    Json jl;
    jl.put("forward", lip.max_forward);
    jl.put("inverse", lip.max_inverse);
    jl.put("pairs", static_cast<long long>(lip.n_pairs));
    Json jb;
    jb.put("pass", bd.pass);
    jb.put("max_boundary_displacement", bd.max_boundary_disp);
    jb.put("max_round_trip", bd.max_round_trip);
    Json jp;
    jp.put("mc", pf.mc_estimate);
    jp.put("std_error", pf.std_error);
    jp.put("pixel", pf.pixel_pushforward);

    mx.put("target", 1.0 - a.gamma_prime);
    mx.put("final_measure", warped.measure());
    mx.put("final_raster_measure", res->set.measure());
    mx.put("steps", static_cast<int>(res->steps.size()));
    mx.put("pieces", static_cast<long long>(all.piece_count()));
    mx.put("c0_hat", res->c0_hat);
    mx.put("lipschitz", jl);
    mx.put("boundary", jb);
    mx.put("pushforward", jp);
    mx.put("stop_mass_mean", stop);
    mx.put("cases", cases);
    mx.put("gains", gains);
    write_text(out / "metrics.json", mx.str(2) + "\n");

    if (a.svg) {
        const std::string caption =
            "gamma=" + g17(a.gamma) + " gamma'=" + g17(a.gamma_prime) +
            " eta=" + g17(a.eta) + " steps=" +
            std::to_string(res->steps.size());
        write_text(out / "grid.svg", report::svg_warped_grid(f, 16, 96, caption));
    }
    std::printf("stretch: measure %s -> %s in %zu steps, %zu pieces\n",
                g17(set.measure()).c_str(), g17(warped.measure()).c_str(),
                res->steps.size(), all.piece_count());
    return 0;
}

// ----------------------------------------------------------------- verify

struct VerifyArgs {
    std::string stack;
    std::string shape;
    std::string input;
    std::string out = "out";
    int q = 5;
    uint64_t seed = 1;
    size_t samples = 20000;
};

int cmd_verify(const VerifyArgs& a) {
    Profile p;
    MapStack m;
    {
        std::ifstream in(a.stack, std::ios::binary);
        if (!in) throw IoError("cannot open " + a.stack);
        try {
            m = MapStack::load(in, p);
        } catch (const std::exception& e) {
            throw IoError("stack parse: " + std::string(e.what()));
        }
    }
    int q = a.q;
    if (!a.shape.empty()) {
        const std::string pq = prov_field(m.provenance, "q");
        if (!pq.empty()) q = std::stoi(pq);
    }
    const PixelSet set = load_input(a.shape, a.input, q);
    fs::create_directories(a.out);

    const auto f = [&](Vec2 v) { return m.evaluate(v); };
    const auto fi = [&](Vec2 v) { return m.inverse(v); };

    struct Check {
        std::string name;
        bool pass;
        double value;
        double tol;
    };
    std::vector<Check> checks;

    const auto bd =
        verify::check_boundary_and_bijection(f, fi, 1000, 1000, a.seed);
    checks.push_back({"boundary-identity", bd.max_boundary_disp <= 1e-9,
                      bd.max_boundary_disp, 1e-9});
    checks.push_back(
        {"round-trip", bd.max_round_trip <= 1e-8, bd.max_round_trip, 1e-8});

    // MC in the codomain against the pixel-grid pushforward; the grid
    // quantizes at 2^-q, so the band carries a perimeter term.
    const auto pf =
        verify::estimate_pushforward_measure(fi, set, a.samples, a.seed, true);
    const double band = 3.0 * pf.std_error + 6.0 / set.side();
    checks.push_back({"pushforward-consistency",
                      std::fabs(pf.mc_estimate - pf.pixel_pushforward) <= band,
                      std::fabs(pf.mc_estimate - pf.pixel_pushforward), band});

    const std::string want = prov_field(m.provenance, "expanded");
    const std::string want_bits = prov_field(m.provenance, "bits");
    if (!want.empty()) {
        const PixelSet img = pushforward_raster(m, set);
        const double stored = std::strtod(want.c_str(), nullptr);
        bool ok = std::fabs(img.measure() - stored) <= 1e-15;
        if (!want_bits.empty())
            ok = ok && want_bits == hash_hex(bitmap_hash(img));
        checks.push_back({"raster-provenance", ok,
                          std::fabs(img.measure() - stored), 1e-15});
    }
    const std::string want_in = prov_field(m.provenance, "input_measure");
    if (!want_in.empty()) {
        const double stored = std::strtod(want_in.c_str(), nullptr);
        checks.push_back({"input-provenance",
                          std::fabs(set.measure() - stored) <= 1e-15,
                          std::fabs(set.measure() - stored), 1e-15});
    }

    bool all_pass = true;
    Json jc;
    for (const Check& c : checks) {
        all_pass = all_pass && c.pass;
        Json one;
        one.put("pass", c.pass);
        one.put("value", c.value);
        one.put("tolerance", c.tol);
        jc.put(c.name, one);
        if (!c.pass)
            std::printf("FAIL %s value=%s tolerance=%s\n", c.name.c_str(),
                        g17(c.value).c_str(), g17(c.tol).c_str());
    }
    Json mx;
    mx.put("schema", "bilex-metrics 1");
    mx.put("command", "verify");
    mx.put("stack", a.stack);
    mx.put("pieces", static_cast<long long>(m.piece_count()));
    mx.put("seed", static_cast<long long>(a.seed));
    mx.put("checks", jc);
    mx.put("pass", all_pass);
    write_text(fs::path(a.out) / "metrics.json", mx.str(2) + "\n");
    if (all_pass) std::printf("OK (%zu checks)\n", checks.size());
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------- poisson

struct PoissonArgs {
    int n = 6;
    int seeds = 100;
    int q = 4;
    uint64_t seed0 = 1;
    double intensity_x = 1.0;
    double intensity_y = 10.0;
    double kappa = 0.5;
    double delta = 0.3;
    double delta_prime = 0.4;
    double eta = 0.5;
    double eps = 0.0;  // 0: derived from (kappa, delta')
    double step_floor = 1e-4;
    size_t pairs = 10000;
    std::string out = "out";
};

std::string csv_row(const std::vector<std::string>& cells) {
    std::string row;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) row += ",";
        row += cells[i];
    }
    return row + "\n";
}

int cmd_poisson(const PoissonArgs& a) {
    Profile p;
    poisson::EmbedConfig cfg;
    cfg.delta = a.delta;
    cfg.delta_prime = a.delta_prime;
    cfg.kappa = a.kappa;
    cfg.eta = a.eta;
    cfg.eps = a.eps;
    cfg.q = a.q;
    cfg.n_pairs = a.pairs;
    cfg.step_floor = a.step_floor;

    const fs::path out(a.out);
    fs::create_directories(out / "poisson");

    std::string csv = csv_row({"seed", "points_x", "points_y", "k_x",
                               "outcome", "steps", "expanded_measure",
                               "b_cells", "e_missing", "e_outside", "event_e",
                               "m", "d", "c", "def11_ok"});
    int n_identity = 0, n_expanded = 0, n_exhausted = 0, n_event = 0,
        n_def_bad = 0;
    for (int i = 0; i < a.seeds; ++i) {
        const uint64_t seed = a.seed0 + static_cast<uint64_t>(i);
        const auto x = poisson::sample_poisson(a.n, a.intensity_x, seed);
        const auto y =
            poisson::sample_poisson(a.n, a.intensity_y, 50000 + seed);
        if (x.k < a.delta * a.n * a.n) {
            std::fprintf(stderr,
                         "precondition-failed: k_X(n) = %d < delta n^2 = %s "
                         "(seed %llu)\n",
                         x.k, g17(a.delta * a.n * a.n).c_str(),
                         static_cast<unsigned long long>(seed));
            return 2;
        }
        cfg.seed = seed;
        Json rj;
        rj.put("schema", "bilex-poisson 1");
        rj.put("seed", static_cast<long long>(seed));
        rj.put("n", a.n);
        rj.put("points_x", static_cast<long long>(x.points.size()));
        rj.put("points_y", static_cast<long long>(y.points.size()));
        rj.put("k_x", x.k);
        try {
            const auto r = poisson::embed(p, x, y, cfg);
            const std::string outcome = r.steps == 0 ? "identity" : "expanded";
            (r.steps == 0 ? n_identity : n_expanded)++;
            if (r.event_e) {
                ++n_event;
                if (!r.def11_ok) ++n_def_bad;
            }
            rj.put("outcome", outcome);
            rj.put("steps", r.steps);
            rj.put("expanded_measure", r.expanded_measure);
            rj.put("b_cells", r.b_cells);
            rj.put("e_missing", r.e_missing);
            rj.put("e_outside", r.e_outside);
            rj.put("event_e", r.event_e);
            rj.put("eps", r.eps);
            rj.put("kappa", r.kappa);
            rj.put("delta_prime", r.delta_prime);
            if (r.event_e) {
                rj.put("m", r.m);
                rj.put("d", r.d);
                rj.put("c", r.c);
                rj.put("def11_ok", r.def11_ok);
                rj.put("pairs_checked",
                       static_cast<long long>(r.pairs_checked));
                rj.put("cell_misses", static_cast<long long>(r.cell_misses));
            }
            csv += csv_row(
                {std::to_string(seed), std::to_string(x.points.size()),
                 std::to_string(y.points.size()), std::to_string(x.k),
                 outcome, std::to_string(r.steps), g17(r.expanded_measure),
                 std::to_string(r.b_cells), std::to_string(r.e_missing),
                 std::to_string(r.e_outside), r.event_e ? "1" : "0",
                 r.event_e ? g17(r.m) : "", r.event_e ? g17(r.d) : "",
                 r.event_e ? g17(r.c) : "",
                 r.event_e ? (r.def11_ok ? "1" : "0") : ""});
        } catch (const multiscale::BudgetExhausted& e) {
            ++n_exhausted;
            rj.put("outcome", "budget-exhausted");
            rj.put("error", e.what());
            csv += csv_row({std::to_string(seed),
                            std::to_string(x.points.size()),
                            std::to_string(y.points.size()),
                            std::to_string(x.k), "budget-exhausted", "", "",
                            "", "", "", "", "", "", "", ""});
        }
        write_text(out / "poisson" / ("seed_" + std::to_string(seed) + ".json"),
                   rj.str(2) + "\n");
    }
    write_text(out / "sweep.csv", csv);

    const double freq =
        a.seeds > 0 ? static_cast<double>(n_event) / a.seeds : 0.0;
    std::string agg = csv_row({"seeds", "identity", "expanded",
                               "budget_exhausted", "event_e_count",
                               "event_e_frequency", "def11_all_ok"});
    agg += csv_row({std::to_string(a.seeds), std::to_string(n_identity),
                    std::to_string(n_expanded), std::to_string(n_exhausted),
                    std::to_string(n_event), g17(freq),
                    n_def_bad == 0 ? "1" : "0"});
    write_text(out / "aggregate.csv", agg);
    std::printf(
        "poisson: %d seeds, %d identity, %d expanded, %d exhausted, "
        "event-E %d (frequency %s)\n",
        a.seeds, n_identity, n_expanded, n_exhausted, n_event,
        g17(freq).c_str());
    return n_def_bad == 0 ? 0 : 1;
}

// --------------------------------------------------------------- psi-demo

struct PsiDemoArgs {
    std::vector<double> deltas{0.1, 0.3, 0.5};
    std::string out = "out";
    int nlines = 16;
    int samples = 96;
};

int cmd_psi_demo(const PsiDemoArgs& a) {
    Profile p;
    for (double d : a.deltas)
        if (!(std::fabs(d) < kDeltaMax))
            throw std::invalid_argument("psi-demo: |delta| must be < 1");
    fs::create_directories(a.out);
    const fs::path out(a.out);

    const double r_lines[] = {0.12, 0.16, 0.20, p.r0(), 0.27, 0.34, 0.41, 0.47};

    std::vector<report::SvgPath> fibers;
    for (double r : r_lines)
        for (int half = 0; half < 2; ++half) {
            report::SvgPath path;
            path.cls = r == p.r0() ? "alt" : "grid";
            for (int s = 0; s <= 256; ++s) {
                Vec2 x = polar::inverse(p, {r, -1.0 + s / 128.0});
                if (half) x.y = 1.0 - x.y;
                path.pts.push_back(x);
            }
            fibers.push_back(std::move(path));
        }
    write_text(out / "level_lines.svg",
               report::svg_paths(fibers, "level lines of r (seam dashed)"));

    for (double d : a.deltas) {
        char name[64];
        std::snprintf(name, sizeof name, "psi_lattice_%g.svg", d);
        write_text(out / name,
                   report::svg_warped_grid(
                       [&](Vec2 v) { return stretch::psi(p, v, d); },
                       a.nlines, a.samples, "Psi_delta, delta=" + g17(d)));

        // Displacement whiskers: the stretch slides points along fibers, so
        // each segment [x, Psi_delta(x)] hugs its level line.
        std::vector<report::SvgPath> fig = fibers;
        for (double r : {0.14, 0.20, p.r0(), 0.30, 0.42})
            for (int half = 0; half < 2; ++half)
                for (int s = 0; s <= 32; ++s) {
                    Vec2 x = polar::inverse(p, {r, -1.0 + s / 16.0});
                    if (half) x.y = 1.0 - x.y;
                    report::SvgPath seg;
                    seg.cls = "line";
                    seg.pts = {x, stretch::psi(p, x, d)};
                    fig.push_back(std::move(seg));
                }
        std::snprintf(name, sizeof name, "fiber_stretch_%g.svg", d);
        write_text(out / name,
                   report::svg_paths(fig, "fiber transport under Psi_delta, "
                                          "delta=" + g17(d)));
    }
    std::printf("psi-demo: wrote %zu delta figures to %s\n",
                2 * a.deltas.size(), a.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-fixing bi-Lipschitz expansion of planar sets"};
    app.footer(
        "environment: BILEX_THREADS caps worker threads.\n"
        "exit codes: 0 ok, 1 check failure, 2 config error, 3 io error");
    app.require_subcommand(1);

    StretchArgs sa;
    VerifyArgs va;
    PoissonArgs pa;
    PsiDemoArgs da;

    CLI::App* st = app.add_subcommand(
        "stretch", "expand a set to measure 1 - gamma' and write the map");
    {
        auto* src = st->add_option_group("source", "input set (exactly one)");
        src->add_option("--shape", sa.shape,
                        "left-half | rect x0 y0 x1 y1 | disk cx cy r | "
                        "checkerboard k [fe fo] | union(a; b)");
        src->add_option("--input", sa.input, "PGM bitmap (q from the file)");
        src->require_option(1);
        st->add_option("--gamma", sa.gamma, "input measure lower bound")
            ->capture_default_str();
        st->add_option("--gamma-prime", sa.gamma_prime,
                       "target complement measure")
            ->capture_default_str();
        st->add_option("--eta", sa.eta, "per-step Lipschitz budget")
            ->capture_default_str();
        st->add_option("--q", sa.q, "raster resolution exponent")
            ->capture_default_str();
        st->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
        st->add_option("--step-floor", sa.step_floor,
                       "per-step gain floor fixing the step budget")
            ->capture_default_str();
        st->add_option("--eps1", sa.eps1, "override tau1 threshold");
        st->add_option("--eps2", sa.eps2, "override tau2 threshold");
        st->add_option("--max-depth", sa.max_depth, "override scan depth");
        st->add_option("--mc-samples", sa.mc_samples,
                       "override per-step guard samples");
        st->add_option("--lip-pairs", sa.lip_pairs,
                       "pairs for the Lipschitz report")
            ->capture_default_str();
        st->add_option("--measure-samples", sa.measure_samples,
                       "MC samples for the pushforward report")
            ->capture_default_str();
        st->add_option("--out", sa.out, "output directory")
            ->capture_default_str();
        st->add_flag("--dry-run", sa.dry_run,
                     "density-tree summary only, no map");
        st->add_flag("--svg", sa.svg, "also write grid.svg");
    }

    CLI::App* ve = app.add_subcommand(
        "verify", "re-check a stored map against its input set");
    {
        ve->add_option("--stack", va.stack, "map.stack path")->required();
        auto* src = ve->add_option_group("source", "input set (exactly one)");
        src->add_option("--shape", va.shape, "shape spec");
        src->add_option("--input", va.input, "PGM bitmap");
        src->require_option(1);
        ve->add_option("--q", va.q,
                       "raster resolution for --shape (provenance wins)")
            ->capture_default_str();
        ve->add_option("--seed", va.seed, "RNG seed")->capture_default_str();
        ve->add_option("--samples", va.samples, "MC sample count")
            ->capture_default_str();
        ve->add_option("--out", va.out, "output directory")
            ->capture_default_str();
    }

    CLI::App* po = app.add_subcommand(
        "poisson", "seed sweep of the rough-isometry construction");
    {
        po->add_option("--n", pa.n, "box side")->capture_default_str();
        po->add_option("--seeds", pa.seeds, "number of seeds")
            ->capture_default_str();
        po->add_option("--seed0", pa.seed0, "first seed")
            ->capture_default_str();
        po->add_option("--intensity-x", pa.intensity_x, "X process intensity")
            ->capture_default_str();
        po->add_option("--intensity-y", pa.intensity_y, "Y process intensity")
            ->capture_default_str();
        po->add_option("--kappa", pa.kappa, "cell side")
            ->capture_default_str();
        po->add_option("--delta", pa.delta, "occupied-square precondition")
            ->capture_default_str();
        po->add_option("--delta-prime", pa.delta_prime,
                       "target complement measure")
            ->capture_default_str();
        po->add_option("--eta", pa.eta, "per-step Lipschitz budget")
            ->capture_default_str();
        po->add_option("--eps", pa.eps, "epsilon (0: derived)")
            ->capture_default_str();
        po->add_option("--q", pa.q, "raster resolution exponent")
            ->capture_default_str();
        po->add_option("--pairs", pa.pairs, "pairs per event-E run")
            ->capture_default_str();
        po->add_option("--step-floor", pa.step_floor, "per-step gain floor")
            ->capture_default_str();
        po->add_option("--out", pa.out, "output directory")
            ->capture_default_str();
    }

    CLI::App* pd = app.add_subcommand(
        "psi-demo", "render level lines, fiber transport, and lattice warps");
    {
        pd->add_option("--deltas", da.deltas, "stretch parameters")
            ->delimiter(',')
            ->capture_default_str();
        pd->add_option("--nlines", da.nlines, "lattice lines per axis")
            ->capture_default_str();
        pd->add_option("--samples", da.samples, "samples per line")
            ->capture_default_str();
        pd->add_option("--out", da.out, "output directory")
            ->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (st->parsed()) return cmd_stretch(sa);
        if (ve->parsed()) return cmd_verify(va);
        if (po->parsed()) return cmd_poisson(pa);
        if (pd->parsed()) return cmd_psi_demo(da);
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
