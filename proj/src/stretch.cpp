#include "bilex/stretch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilex {
namespace stretch {

namespace {

// z - sin(z); series below 1/4 where the direct form cancels.
double z_minus_sin(double z) {
    if (std::fabs(z) >= 0.25) return z - std::sin(z);
    const double z2 = z * z;
    // z^3/6 (1 - z^2/20 (1 - z^2/42 (1 - z^2/72 (1 - z^2/110)))).
    double s = 1.0 - z2 / 110.0;
    s = 1.0 - z2 / 72.0 * s;
    s = 1.0 - z2 / 42.0 * s;
    s = 1.0 - z2 / 20.0 * s;
    return z * z2 / 6.0 * s;
}

double clamp_delta(double delta) { return std::clamp(delta, -kDeltaMax, kDeltaMax); }

struct Fiber {
    double h1;     // h'(r)
    double T;      // Theta(r)
    double ratio;  // h'/Theta
};

Fiber fiber_of(const Profile& p, double r) {
    const double h1 = p.h_eval(r, 1);
    const double T = p.theta(r);
    return {h1, T, h1 / T};
}

double antider(const Fiber& f, double ell) {
    return ell + f.ratio * z_minus_sin(ell * f.T);
}

double antider_deriv(const Fiber& f, double ell) {
    const double s = std::sin(0.5 * ell * f.T);
    return 1.0 + 2.0 * f.h1 * s * s;
}

// Monotone solve of H(g) = target on [-1, 1]: safeguarded Newton.  H' >= 1,
// so steps are well scaled; any step leaving the bracket falls back to
// bisection, which keeps the worst case at bisection speed.
double invert_antider(const Fiber& f, double target, double tol = 1e-13) {
    double lo = -1.0;
    double hi = 1.0;
    double g = std::fabs(target) < 1.0 ? target : 0.0;
    for (int it = 0; it < 80; ++it) {
        const double res = antider(f, g) - target;
        if (std::fabs(res) <= tol) return g;
        (res < 0.0 ? lo : hi) = g;
        if (hi - lo <= 1e-15) break;
        double next = g - res / antider_deriv(f, g);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == g) break;
        g = next;
    }
    return g;
}

// Fiber stretch with a precomputed fiber; ell <= 0 pushes H-measure toward 0
// with factor (1+delta), ell >= 0 mirrors it with (1-delta).
double solve_g_fiber(const Fiber& f, double ell, double delta) {
    if (ell <= -1.0) return -1.0;
    if (ell >= 1.0) return 1.0;
    if (delta == 0.0) return ell;
    if (f.h1 == 0.0) {
        return ell <= 0.0 ? -1.0 + (1.0 + delta) * (ell + 1.0)
                          : 1.0 - (1.0 - delta) * (1.0 - ell);
    }
    const double h1v = antider(f, 1.0);  // H(1) = -H(-1)
    double target;
    if (ell <= 0.0) {
        target = (1.0 + delta) * (antider(f, ell) + h1v) - h1v;
    } else {
        target = h1v - (1.0 - delta) * (h1v - antider(f, ell));
    }
    return invert_antider(f, target);
}

double solve_g_inverse_fiber(const Fiber& f, double y, double delta) {
    if (y <= -1.0) return -1.0;
    if (y >= 1.0) return 1.0;
    if (delta == 0.0) return y;
    if (f.h1 == 0.0) {
        const double mid = -1.0 + (1.0 + delta);  // image of 0
        return y <= mid ? (y + 1.0) / (1.0 + delta) - 1.0
                        : 1.0 - (1.0 - y) / (1.0 - delta);
    }
    const double h1v = antider(f, 1.0);
    const double hy = antider(f, y);
    double target;
    if (hy <= delta * h1v) {
        target = (hy + h1v) / (1.0 + delta) - h1v;
    } else {
        target = h1v - (h1v - hy) / (1.0 - delta);
    }
    return invert_antider(f, target);
}

constexpr double kNudge = 1e-9;
constexpr double kOnLocus = 1e-12;

}  // namespace

double antiderivative(const Profile& p, double r, double ell) {
    return antider(fiber_of(p, r), ell);
}

double antiderivative_deriv(const Profile& p, double r, double ell) {
    return antider_deriv(fiber_of(p, r), ell);
}

double solve_g(const Profile& p, double r, double ell, double delta) {
    return solve_g_fiber(fiber_of(p, r), ell, clamp_delta(delta));
}

double solve_g_inverse(const Profile& p, double r, double y, double delta) {
    return solve_g_inverse_fiber(fiber_of(p, r), y, clamp_delta(delta));
}

double g_prime_theta(const Profile& p, double r, double ell, double delta) {
    const Fiber f = fiber_of(p, r);
    const double d = clamp_delta(delta);
    const double g = solve_g_fiber(f, ell, d);
    const double factor = ell <= 0.0 ? 1.0 + d : 1.0 - d;
    return factor * antider_deriv(f, ell) / antider_deriv(f, g);
}

double g_prime_r(const Profile& p, double r, double ell, double delta) {
    const double d = clamp_delta(delta);
    const double s = 1e-6;
    double lo = r - s;
    double hi = r + s;
    // Keep both samples inside (0, 1/2) and on one side of the changeover
    // radius, where g has a kink in r.
    const double r0 = p.r0();
    if (r <= r0 && hi > r0) hi = r;
    if (r > r0 && lo <= r0) lo = r;
    lo = std::max(lo, 1e-9);
    hi = std::min(hi, 0.5 - 1e-9);
    const double glo = solve_g_fiber(fiber_of(p, lo), ell, d);
    const double ghi = solve_g_fiber(fiber_of(p, hi), ell, d);
    return (ghi - glo) / (hi - lo);
}

namespace {

bool on_boundary(Vec2 x) {
    return x.x == 0.0 || x.x == 1.0 || x.y == 0.0 || x.y == 1.0;
}

Vec2 psi_lower(const Profile& p, Vec2 x, double delta) {
    const PolarCoord c = polar::forward(p, x);
    const double g = solve_g(p, c.r, c.theta, delta);
    return polar::inverse(p, {c.r, g});
}

Vec2 psi_lower_inverse(const Profile& p, Vec2 y, double delta) {
    const PolarCoord c = polar::forward(p, y);
    const double ell = solve_g_inverse(p, c.r, c.theta, delta);
    return polar::inverse(p, {c.r, ell});
}

Vec2 midline(Vec2 x, double delta) {
    if (x.x <= 0.5) return {x.x * (1.0 + delta), 0.5};
    return {0.5 * (1.0 + delta) + (1.0 - delta) * (x.x - 0.5), 0.5};
}

Vec2 midline_inverse(Vec2 y, double delta) {
    const double split = 0.5 * (1.0 + delta);
    if (y.x <= split) return {y.x / (1.0 + delta), 0.5};
    return {0.5 + (y.x - split) / (1.0 - delta), 0.5};
}

}  // namespace

Vec2 psi(const Profile& p, Vec2 x, double delta) {
    delta = clamp_delta(delta);
    if (on_boundary(x)) return x;
    if (x.y == 0.5) return midline(x, delta);
    if (x.y < 0.5) return psi_lower(p, x, delta);
    const Vec2 w = psi_lower(p, {x.x, 1.0 - x.y}, delta);
    return {w.x, 1.0 - w.y};
}

Vec2 psi_inverse(const Profile& p, Vec2 y, double delta) {
    delta = clamp_delta(delta);
    if (on_boundary(y)) return y;
    if (y.y == 0.5) return midline_inverse(y, delta);
    if (y.y < 0.5) return psi_lower_inverse(p, y, delta);
    const Vec2 w = psi_lower_inverse(p, {y.x, 1.0 - y.y}, delta);
    return {w.x, 1.0 - w.y};
}

Mat2 psi_jacobian(const Profile& p, Vec2 x, double delta) {
    delta = clamp_delta(delta);
    // Nudge off the measure-zero loci where one-sided derivatives differ.
    if (std::fabs(x.y - 0.5) < kOnLocus) x.y = 0.5 - kNudge;
    if (std::fabs(x.x - 0.5) < kOnLocus) x.x = 0.5 + kNudge;
    const bool upper = x.y > 0.5;
    if (upper) x.y = 1.0 - x.y;

    PolarCoord c = polar::forward(p, x);
    if (std::fabs(c.r - p.r0()) < kOnLocus) {
        c.r += kNudge;
    }
    const double g = solve_g(p, c.r, c.theta, delta);
    const Mat2 jx = polar::jacobian_inverse(p, c);
    const Mat2 jg = polar::jacobian_inverse(p, {c.r, g});
    Mat2 jh = Mat2::identity();
    jh.a21 = g_prime_r(p, c.r, c.theta, delta);
    jh.a22 = g_prime_theta(p, c.r, c.theta, delta);
    Mat2 j = jg * jh * jx.inverse();
    if (upper) {
        j.a12 = -j.a12;
        j.a21 = -j.a21;
    }
    return j;
}

Vec2 psi_rect(const Profile& p, Vec2 y, double delta, const RectFrame& f) {
    return f.from_unit(psi(p, f.to_unit(y), delta));
}

Vec2 psi_rect_inverse(const Profile& p, Vec2 y, double delta, const RectFrame& f) {
    return f.from_unit(psi_inverse(p, f.to_unit(y), delta));
}

Mat2 psi_rect_jacobian(const Profile& p, Vec2 y, double delta, const RectFrame& f) {
    const Mat2 fj = f.unit_jacobian();
    return fj * psi_jacobian(p, f.to_unit(y), delta) * fj.inverse();
}

}  // namespace stretch
}  // namespace bilex
