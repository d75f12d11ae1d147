#include "bilex/profile.hpp"

#include <cmath>
#include <stdexcept>

namespace bilex {

namespace {

// h = u * v with u = exp(-1/a), v = b^(-6), a = r - 1/10, b = 1/2 - r.
// Logarithmic derivatives stay products, which avoids the cancellation that
// the expanded forms would hit once h is large:
//   h'   = h * w,                 w  = a^(-2) + 6 b^(-1)
//   h''  = h * (w^2 + w')         w' = -2 a^(-3) + 6 b^(-2)
//   h''' = h * (w^3 + 3 w w' + w'')   w'' = 6 a^(-4) + 12 b^(-3)
HJet jet_inner(double r) {
    const double a = r - Profile::kR1;
    const double b = 0.5 - r;
    const double h = std::exp(-1.0 / a) * std::pow(b, -6.0);
    const double ia = 1.0 / a;
    const double ib = 1.0 / b;
    const double w = ia * ia + 6.0 * ib;
    const double w1 = -2.0 * ia * ia * ia + 6.0 * ib * ib;
    const double w2 = 6.0 * ia * ia * ia * ia + 12.0 * ib * ib * ib;
    HJet jet;
    jet.h = h;
    jet.h1 = h * w;
    jet.h2 = h * (w * w + w1);
    jet.h3 = h * (w * w * w + 3.0 * w * w1 + w2);
    return jet;
}

void check_domain(double r) {
    if (!(r >= 0.0) || r >= 0.5) {
        throw std::domain_error("profile: r outside [0, 1/2)");
    }
}

}  // namespace

Profile::Profile() {
    // Unique root of 2 r h(r) + r^2 - 1/4 in (1/10, 1/2); the left end is
    // negative (h = 0) and h's blowup makes the right end positive.
    double lo = kR1;
    double hi = 0.4;
    auto f = [](double r) {
        const double h = (r <= kR1) ? 0.0 : jet_inner(r).h;
        return 2.0 * r * h + r * r - 0.25;
    };
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    r0_ = 0.5 * (lo + hi);
}

HJet Profile::h_jet(double r) const {
    check_domain(r);
    if (r <= kR1) return HJet{};
    return jet_inner(r);
}

double Profile::h_eval(double r, int k) const {
    const HJet jet = h_jet(r);
    switch (k) {
        case 0: return jet.h;
        case 1: return jet.h1;
        case 2: return jet.h2;
        case 3: return jet.h3;
        default: throw std::domain_error("profile: derivative order must be 0..3");
    }
}

double Profile::theta(double r) const {
    check_domain(r);
    if (r <= kR1) return std::acos(0.0);
    const double h = jet_inner(r).h;
    if (r <= r0_) return std::acos(h / (h + r));
    return std::asin(0.5 / (h + r));
}

double Profile::theta_prime(double r) const {
    check_domain(r);
    if (r <= kR1) return 0.0;
    const HJet jet = jet_inner(r);
    const double hr = jet.h + r;
    if (r <= r0_) {
        // d/dr arccos(h/(h+r)) with sqrt((h+r)^2 - h^2) = sqrt(2rh + r^2).
        return (jet.h - r * jet.h1) / (hr * std::sqrt(2.0 * r * jet.h + r * r));
    }
    return -(1.0 + jet.h1) / (hr * std::sqrt(4.0 * hr * hr - 1.0));
}

}  // namespace bilex
