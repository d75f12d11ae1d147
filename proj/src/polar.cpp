#include "bilex/polar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilex {
namespace polar {

namespace {
constexpr double kRadiusLo = 1e-9;
constexpr double kRadiusHi = 0.5 - 1e-9;

// tan(z) - z, evaluated by series for small z where the direct difference
// cancels to noise.
double tan_minus(double z) {
    if (std::fabs(z) < 0.05) {
        const double z2 = z * z;
        return z * z2 *
               (1.0 / 3.0 +
                z2 * (2.0 / 15.0 +
                      z2 * (17.0 / 315.0 +
                            z2 * (62.0 / 2835.0 + z2 * (1382.0 / 155925.0)))));
    }
    return std::tan(z) - z;
}
}  // namespace

Vec2 inverse(const Profile& p, PolarCoord c) {
    const double h = p.h_eval(c.r);
    const double ang = c.theta * p.theta(c.r);
    const double s = std::sin(0.5 * ang);
    const double x1 = 0.5 + (c.r + h) * std::sin(ang);
    const double x2 = c.r - (c.r + h) * (2.0 * s * s);
    return {x1, x2};
}

PolarCoord forward(const Profile& p, Vec2 x) {
    if (!(x.y < 0.5)) throw std::domain_error("polar: x2 must be below 1/2");
    const double dx = x.x - 0.5;
    if (dx * dx + x.y * x.y < 1e-24) {
        throw std::domain_error("polar: chart is singular at (1/2, 0)");
    }

    const double c2 = dx * dx;
    auto f = [&](double r) {
        return (r - x.y) * (r + x.y + 2.0 * p.h_eval(r)) - c2;
    };

    double lo = kRadiusLo;
    double hi = kRadiusHi;
    if (f(lo) >= 0.0) {
        // Point hugs (1/2, 0) closer than the bracket resolves.
        return {lo, std::atan2(dx, x.y) / p.theta(lo)};
    }
    // Safeguarded Newton on F(r) = (r - x2)(r + x2 + 2h) - dx^2, increasing
    // on the bracket (F' = 2(r+h) + 2h'(r - x2) > 0).  With h = 0 the root
    // is |x - (1/2, 0)|, a good starting point since h only shrinks it.
    double r = std::clamp(std::sqrt(c2 + x.y * x.y), kRadiusLo, kRadiusHi);
    for (int it = 0; it < 200; ++it) {
        const HJet jet = p.h_jet(r);
        const double fr = (r - x.y) * (r + x.y + 2.0 * jet.h) - c2;
        if (fr == 0.0) break;
        (fr < 0.0 ? lo : hi) = r;
        if (hi - lo <= 1e-17) break;
        const double fp = 2.0 * (r + jet.h) + 2.0 * jet.h1 * (r - x.y);
        double next = r - fr / fp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == r) break;
        r = next;
    }

    const double theta = std::atan2(dx, x.y + p.h_eval(r)) / p.theta(r);
    return {r, std::clamp(theta, -1.0, 1.0)};
}

Mat2 jacobian_inverse(const Profile& p, PolarCoord c) {
    const HJet jet = p.h_jet(c.r);
    const double T = p.theta(c.r);
    const double T1 = p.theta_prime(c.r);
    const double rh = c.r + jet.h;
    const double s = std::sin(c.theta * T);
    const double co = std::cos(c.theta * T);
    const double half = std::sin(0.5 * c.theta * T);
    Mat2 j;
    if (c.r <= p.r0()) {
        j.a11 = (1.0 + jet.h1) * s + rh * T1 * c.theta * co;
    } else {
        // Here (r+h) Theta' = -(1+h') tan(Theta), so the two terms of the
        // direct form cancel down to O(Theta^3); regroup before rounding:
        //   a11 = (1+h') cos(theta Theta) (tan(theta Theta) - theta tan(Theta))
        // and tan(z) - z carries the surviving cubic.
        j.a11 = (1.0 + jet.h1) * co *
                (tan_minus(c.theta * T) - c.theta * tan_minus(T));
    }
    j.a12 = rh * T * co;
    // (1+h') cos - h' cancels once h' dwarfs 1; fold to cos - h' (1 - cos).
    j.a21 = co - jet.h1 * (2.0 * half * half) - rh * T1 * c.theta * s;
    j.a22 = -rh * T * s;
    return j;
}

double abs_det_jacobian_inverse(const Profile& p, PolarCoord c) {
    const HJet jet = p.h_jet(c.r);
    const double T = p.theta(c.r);
    const double half = std::sin(0.5 * c.theta * T);
    // 1 + h' (1 - cos(theta T)) without forming the near-cancelling cosine.
    return T * (c.r + jet.h) * (1.0 + jet.h1 * (2.0 * half * half));
}

}  // namespace polar
}  // namespace bilex
