#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bilex/geometry.hpp"
#include "bilex/pixel_set.hpp"
#include "bilex/profile.hpp"
#include "bilex/stretch.hpp"

namespace bilex {

// One box of the halving hierarchy.  Level 1 is the unit square; a box at an
// odd level is a square and splits into left/right halves, a box at an even
// level is twice as tall as wide and splits into bottom/top halves.  The
// first child is always the one holding the parent's lower-left corner, so
// delta > 0 stretches toward it.
struct DyadicBox {
    int level = 1;
    int ix = 0;
    int iy = 0;

    static int cols(int level) { return 1 << (level / 2); }
    static int rows(int level) { return 1 << ((level - 1) / 2); }

    double len() const { return 1.0 / cols(level); }
    double ht() const { return 1.0 / rows(level); }
    double area() const { return len() * ht(); }
    bool square() const { return level % 2 == 1; }

    Vec2 lo() const { return {ix * len(), iy * ht()}; }
    Vec2 hi() const { return {(ix + 1) * len(), (iy + 1) * ht()}; }
    Vec2 center() const { return {(ix + 0.5) * len(), (iy + 0.5) * ht()}; }

    DyadicBox child(int k) const {
        if (square()) return {level + 1, 2 * ix + k, iy};
        return {level + 1, ix, 2 * iy + k};
    }
    DyadicBox parent() const {
        if (level % 2 == 0) return {level - 1, ix / 2, iy};
        return {level - 1, ix, iy / 2};
    }

    // 1-based position within the level, ordered by top-right corners
    // (lexicographically, first coordinate major).
    int64_t j() const { return static_cast<int64_t>(ix) * rows(level) + iy + 1; }
    static DyadicBox from_j(int level, int64_t j);

    // The box at `level` containing x; points on an interior edge go to the
    // box whose lower or left edge they lie on, and the top/right sides of
    // the square clamp inward.
    static DyadicBox box_of(Vec2 x, int level);

    bool contains(Vec2 x) const {
        return box_of(x, level).ix == ix && box_of(x, level).iy == iy;
    }

    // Chart for the stretch map on this box: squares split left/right, tall
    // rectangles bottom/top.
    RectFrame frame() const {
        return {lo(), len(), ht(), square() ? Axis::Lengthwise : Axis::Heightwise};
    }
};

// Exact occupation densities of a pixel set over the box hierarchy.  Boxes
// down to level 2q+1 are unions of pixels, so every count is an integer and
// every density a dyadic rational, held exactly in a double.
class DensityTree {
  public:
    explicit DensityTree(const PixelSet& set);

    int max_level() const { return 2 * set_->q() + 1; }

    // Pixels of the set inside the box; throws std::runtime_error past
    // max_level where boxes stop being pixel unions.
    uint64_t count(const DyadicBox& box) const;

    uint64_t box_pixels(const DyadicBox& box) const;

    double rho(const DyadicBox& box) const;

    // rho(first child) - rho(box); the other child mirrors to -delta.
    double increment(const DyadicBox& box) const;

    // Stretch parameter delta = increment / rho, clamped to +-kDeltaMax and
    // zero on empty boxes.
    double stretch_delta(const DyadicBox& box) const;

    double lambda() const;
    const PixelSet& set() const { return *set_; }

  private:
    const PixelSet* set_;
    uint64_t total_;
};

namespace dyadic {

// Twist regions of the stretch map on `anc`: two half-disks of radius
// Profile::kR1 in unit coordinates around the crack endpoints, which the
// frame carries to half-ellipses with semi-axes (r1 len, r1 ht).
struct TwistEllipse {
    Vec2 center;
    double sa = 0.0;  // semi-axis along x
    double sb = 0.0;
};
std::vector<TwistEllipse> twist_regions(const DyadicBox& anc);

// Depth weight J: the largest l <= cap such that the level anc.level + l
// box containing x still intersects a twist region of anc.  Descendant
// boxes are nested, so the intersecting l form a prefix.
int twist_weight(const DyadicBox& anc, Vec2 x, int cap);

// Seam fiber r = r0 of the stretch map on `frame`, sampled in domain
// coordinates as two polylines (lower and upper half), npts points each.
std::vector<std::vector<Vec2>> seam_polyline(const Profile& p, const RectFrame& frame,
                                             int npts = 512);

// Whether the image of `box`'s boundary under `partial` comes within one
// boundary-sample spacing of the seam polylines; nsamples points around the
// perimeter.
bool seam_hit(const std::vector<std::vector<Vec2>>& seam, const DyadicBox& box,
              const std::function<Vec2(Vec2)>& partial, int nsamples = 32);

// Reweighted increment |delta| 2^(min(beta, gap) / 10); gap truncates the
// weight at the depth separating box and ancestor.
double reweighted(double delta_abs, int beta, int gap);

}  // namespace dyadic
}  // namespace bilex
