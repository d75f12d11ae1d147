#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bilex {

// Occupancy grid over the unit square at resolution 2^q x 2^q.  Pixel
// (ix, iy) covers [ix, ix+1] x [iy, iy+1] scaled by 2^-q, with iy = 0 the
// bottom row; PGM IO flips rows so image row 0 is the top.  Counting
// queries run on per-row word-prefix popcounts built lazily after the last
// mutation, so reads are cheap and the mutation phase stays single-threaded.
class PixelSet {
  public:
    static constexpr int kMaxQ = 14;

    explicit PixelSet(int q);

    // Analytic shape descriptors rasterized by pixel-center sampling:
    //   left-half
    //   rect x0 y0 x1 y1
    //   disk cx cy r
    //   checkerboard k [fill_even fill_odd]
    //   union(shape; shape; ...)
    static PixelSet from_shape(const std::string& spec, int q);

    // PGM (P2 or P5, any maxval; value > maxval/2 means occupied) and
    // ASCII 0/1 rows.  Both expect a square 2^q x 2^q grid, q <= 14.
    static PixelSet read_pgm(std::istream& in);
    static PixelSet read_ascii(std::istream& in);

    void write_pgm(std::ostream& out, bool binary) const;
    void write_ascii(std::ostream& out) const;

    int q() const { return q_; }
    int side() const { return side_; }

    bool get(int ix, int iy) const;
    void set(int ix, int iy, bool value);

    uint64_t count() const;
    double measure() const;

    // Pixels set within columns [x0, x1) of rows [y0, y1).
    uint64_t count_rect(int x0, int x1, int y0, int y1) const;

    bool operator==(const PixelSet& o) const {
        return q_ == o.q_ && words_ == o.words_;
    }

  private:
    uint64_t count_row(int iy, int x0, int x1) const;
    void rebuild_prefix() const;

    int q_;
    int side_;
    size_t wpr_;  // words per row
    std::vector<uint64_t> words_;
    mutable std::vector<uint32_t> prefix_;  // per row: wpr_+1 running counts
    mutable bool dirty_ = true;
};

}  // namespace bilex
