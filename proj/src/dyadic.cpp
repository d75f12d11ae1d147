#include "bilex/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bilex/polar.hpp"

namespace bilex {

DyadicBox DyadicBox::from_j(int level, int64_t j) {
    const int64_t r = rows(level);
    const int64_t k = j - 1;
    return {level, static_cast<int>(k / r), static_cast<int>(k % r)};
}

DyadicBox DyadicBox::box_of(Vec2 x, int level) {
    const int c = cols(level), r = rows(level);
    const int ix = std::clamp(static_cast<int>(std::floor(x.x * c)), 0, c - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(x.y * r)), 0, r - 1);
    return {level, ix, iy};
}

DensityTree::DensityTree(const PixelSet& set) : set_(&set), total_(set.count()) {}

uint64_t DensityTree::count(const DyadicBox& box) const {
    if (box.level > max_level()) {
        throw std::runtime_error("box at level " + std::to_string(box.level) +
                                 " is below pixel resolution (max " +
                                 std::to_string(max_level()) + ")");
    }
    const int side = set_->side();
    const int pw = side / DyadicBox::cols(box.level);
    const int ph = side / DyadicBox::rows(box.level);
    return set_->count_rect(box.ix * pw, (box.ix + 1) * pw, box.iy * ph, (box.iy + 1) * ph);
}

uint64_t DensityTree::box_pixels(const DyadicBox& box) const {
    const int side = set_->side();
    return static_cast<uint64_t>(side / DyadicBox::cols(box.level)) *
           static_cast<uint64_t>(side / DyadicBox::rows(box.level));
}

double DensityTree::rho(const DyadicBox& box) const {
    return static_cast<double>(count(box)) / static_cast<double>(box_pixels(box));
}

double DensityTree::increment(const DyadicBox& box) const {
    return rho(box.child(0)) - rho(box);
}

double DensityTree::stretch_delta(const DyadicBox& box) const {
    if (count(box) == 0) return 0.0;
    return std::clamp(increment(box) / rho(box), -kDeltaMax, kDeltaMax);
}

double DensityTree::lambda() const {
    const double n = static_cast<double>(set_->side());
    return static_cast<double>(total_) / (n * n);
}

namespace dyadic {

std::vector<TwistEllipse> twist_regions(const DyadicBox& anc) {
    const RectFrame f = anc.frame();
    const double sa = Profile::kR1 * f.a;
    const double sb = Profile::kR1 * f.b;
    std::vector<TwistEllipse> out(2);
    out[0].sa = out[1].sa = sa;
    out[0].sb = out[1].sb = sb;
    if (f.axis == Axis::Lengthwise) {
        out[0].center = {f.u.x + 0.5 * f.a, f.u.y};
        out[1].center = {f.u.x + 0.5 * f.a, f.u.y + f.b};
    } else {
        out[0].center = {f.u.x, f.u.y + 0.5 * f.b};
        out[1].center = {f.u.x + f.a, f.u.y + 0.5 * f.b};
    }
    return out;
}

namespace {

bool ellipse_meets_rect(const TwistEllipse& e, Vec2 lo, Vec2 hi) {
    // Scaling the axes to unit radius maps the rectangle to a rectangle, so
    // the nearest point is still the coordinatewise clamp.
    const double px = std::clamp(e.center.x, lo.x, hi.x);
    const double py = std::clamp(e.center.y, lo.y, hi.y);
    const double nx = (px - e.center.x) / e.sa;
    const double ny = (py - e.center.y) / e.sb;
    return nx * nx + ny * ny <= 1.0;
}

double point_segment_dist(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double len2 = d.x * d.x + d.y * d.y;
    double t = len2 > 0.0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, {a.x + t * d.x, a.y + t * d.y});
}

}  // namespace

int twist_weight(const DyadicBox& anc, Vec2 x, int cap) {
    const std::vector<TwistEllipse> twists = twist_regions(anc);
    for (int l = 1; l <= cap; ++l) {
        const DyadicBox box = DyadicBox::box_of(x, anc.level + l);
        bool meets = false;
        for (const TwistEllipse& e : twists) {
            if (ellipse_meets_rect(e, box.lo(), box.hi())) {
                meets = true;
                break;
            }
        }
        if (!meets) return l - 1;
    }
    return cap;
}

std::vector<std::vector<Vec2>> seam_polyline(const Profile& p, const RectFrame& frame,
                                             int npts) {
    std::vector<std::vector<Vec2>> out(2);
    const double r0 = p.r0();
    for (int k = 0; k < npts; ++k) {
        const double theta = -1.0 + 2.0 * k / (npts - 1);
        Vec2 lower = polar::inverse(p, {r0, theta});
        // The endpoint fibers land on the walls up to rounding; keep samples
        // inside the square.
        lower.x = std::clamp(lower.x, 0.0, 1.0);
        lower.y = std::clamp(lower.y, 0.0, 1.0);
        out[0].push_back(frame.from_unit(lower));
        out[1].push_back(frame.from_unit({lower.x, 1.0 - lower.y}));
    }
    return out;
}

bool seam_hit(const std::vector<std::vector<Vec2>>& seam, const DyadicBox& box,
              const std::function<Vec2(Vec2)>& partial, int nsamples) {
    const Vec2 lo = box.lo(), hi = box.hi();
    const double w = hi.x - lo.x, h = hi.y - lo.y;
    const double perim = 2.0 * (w + h);
    const double spacing = perim / nsamples;
    for (int k = 0; k < nsamples; ++k) {
        double t = k * spacing;
        Vec2 pt;
        if (t < w) {
            pt = {lo.x + t, lo.y};
        } else if ((t -= w) < h) {
            pt = {hi.x, lo.y + t};
        } else if ((t -= h) < w) {
            pt = {hi.x - t, hi.y};
        } else {
            pt = {lo.x, hi.y - (t - w)};
        }
        const Vec2 img = partial(pt);
        for (const std::vector<Vec2>& curve : seam) {
            for (size_t i = 0; i + 1 < curve.size(); ++i) {
                if (point_segment_dist(img, curve[i], curve[i + 1]) <= spacing) {
                    return true;
                }
            }
        }
    }
    return false;
}

double reweighted(double delta_abs, int beta, int gap) {
    return delta_abs * std::exp2(std::min(beta, gap) / 10.0);
}

}  // namespace dyadic
}  // namespace bilex
