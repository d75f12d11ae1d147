#pragma once

namespace bilex {

// Value of the radial weight together with its first three derivatives.
struct HJet {
    double h = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double h3 = 0.0;
};

// Radial weight profile on [0, 1/2):
//
//   h(r) = 0                                     for r <= r1 = 1/10,
//   h(r) = exp(-1/(r - 1/10)) * (1/2 - r)^(-6)   for r in (1/10, 1/2).
//
// h is C^3, weakly increasing, and diverges at r -> 1/2.  The changeover
// radius r0 is the unique root of 2 r h(r) + r^2 = 1/4 in (1/10, 1/2); below
// it the angular extent is arccos-shaped, above it arcsin-shaped, and the two
// branches agree at r0 because (h + r0)^2 - h^2 = 1/4 there.
class Profile {
  public:
    static constexpr double kR1 = 0.1;

    Profile();

    // k-th derivative of h at r, k <= 3.  Throws std::domain_error outside
    // [0, 1/2).
    double h_eval(double r, int k = 0) const;

    HJet h_jet(double r) const;

    // Angular extent of the fiber through radius r (half-opening angle of the
    // level curve), pi/2 at r <= r1, strictly decreasing to 0 at r -> 1/2.
    double theta(double r) const;

    // One-sided derivative of theta; uses the r <= r0 branch at r0 itself.
    double theta_prime(double r) const;

    double r0() const { return r0_; }

  private:
    double r0_;
};

}  // namespace bilex
