#include "bilex/pixel_set.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bilex/geometry.hpp"

namespace bilex {

namespace {

int q_for_side(int side) {
    int q = 0;
    while ((1 << q) < side && q <= PixelSet::kMaxQ) ++q;
    if ((1 << q) != side) {
        throw std::runtime_error("pixel grid side must be a power of two <= 16384, got " +
                                 std::to_string(side));
    }
    return q;
}

// One alternative of a shape descriptor, evaluated at a pixel center.
struct Shape {
    enum Kind { LeftHalf, Rect, Disk, Checkerboard } kind;
    double p[4] = {0, 0, 0, 0};
    int k = 0;

    bool contains(Vec2 c) const {
        switch (kind) {
            case LeftHalf:
                return c.x < 0.5;
            case Rect:
                return c.x >= p[0] && c.x < p[2] && c.y >= p[1] && c.y < p[3];
            case Disk: {
                const double dx = c.x - p[0];
                const double dy = c.y - p[1];
                return dx * dx + dy * dy <= p[2] * p[2];
            }
            case Checkerboard: {
                const int cx = static_cast<int>(c.x * k);
                const int cy = static_cast<int>(c.y * k);
                const double fill = ((cx + cy) % 2 == 0) ? p[0] : p[1];
                const double frac = c.y * k - cy;
                return frac < fill;
            }
        }
        return false;
    }
};

Shape parse_one_shape(const std::string& text) {
    std::istringstream in(text);
    std::string name;
    in >> name;
    Shape s;
    if (name == "left-half") {
        s.kind = Shape::LeftHalf;
        return s;
    }
    if (name == "rect") {
        s.kind = Shape::Rect;
        if (!(in >> s.p[0] >> s.p[1] >> s.p[2] >> s.p[3])) {
            throw std::runtime_error("rect needs x0 y0 x1 y1: " + text);
        }
        return s;
    }
    if (name == "disk") {
        s.kind = Shape::Disk;
        if (!(in >> s.p[0] >> s.p[1] >> s.p[2])) {
            throw std::runtime_error("disk needs cx cy r: " + text);
        }
        return s;
    }
    if (name == "checkerboard") {
        s.kind = Shape::Checkerboard;
        if (!(in >> s.k) || s.k < 1) {
            throw std::runtime_error("checkerboard needs a cell count: " + text);
        }
        // Optional per-parity fill fractions; the plain board is 1 / 0.
        if (!(in >> s.p[0] >> s.p[1])) {
            s.p[0] = 1.0;
            s.p[1] = 0.0;
        }
        return s;
    }
    throw std::runtime_error("unknown shape: " + text);
}

std::vector<Shape> parse_shapes(const std::string& spec) {
    std::string text = spec;
    auto trim = [](std::string& t) {
        size_t a = t.find_first_not_of(" \t\r\n");
        size_t b = t.find_last_not_of(" \t\r\n");
        t = (a == std::string::npos) ? std::string() : t.substr(a, b - a + 1);
    };
    trim(text);
    std::vector<Shape> shapes;
    if (text.rfind("union(", 0) == 0 && text.back() == ')') {
        std::string inner = text.substr(6, text.size() - 7);
        std::string part;
        std::istringstream in(inner);
        while (std::getline(in, part, ';')) {
            trim(part);
            if (!part.empty()) shapes.push_back(parse_one_shape(part));
        }
        if (shapes.empty()) throw std::runtime_error("empty union: " + spec);
    } else {
        shapes.push_back(parse_one_shape(text));
    }
    return shapes;
}

void skip_pgm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

}  // namespace

PixelSet::PixelSet(int q) : q_(q), side_(1 << q) {
    if (q < 0 || q > kMaxQ) {
        throw std::runtime_error("pixel resolution q must lie in [0, 14], got " +
                                 std::to_string(q));
    }
    wpr_ = static_cast<size_t>((side_ + 63) / 64);
    words_.assign(static_cast<size_t>(side_) * wpr_, 0);
}

PixelSet PixelSet::from_shape(const std::string& spec, int q) {
    const std::vector<Shape> shapes = parse_shapes(spec);
    PixelSet set(q);
    const double s = 1.0 / set.side_;
    for (int iy = 0; iy < set.side_; ++iy) {
        for (int ix = 0; ix < set.side_; ++ix) {
            const Vec2 c{(ix + 0.5) * s, (iy + 0.5) * s};
            for (const Shape& sh : shapes) {
                if (sh.contains(c)) {
                    set.set(ix, iy, true);
                    break;
                }
            }
        }
    }
    return set;
}

PixelSet PixelSet::read_pgm(std::istream& in) {
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") {
        throw std::runtime_error("expected P2 or P5 PGM header, got " + magic);
    }
    skip_pgm_space(in);
    int w = 0, h = 0, maxval = 0;
    in >> w;
    skip_pgm_space(in);
    in >> h;
    skip_pgm_space(in);
    in >> maxval;
    if (!in || w != h || maxval < 1 || maxval > 65535) {
        throw std::runtime_error("bad PGM header");
    }
    PixelSet set(q_for_side(w));
    const int thresh = maxval / 2;
    if (magic == "P2") {
        for (int row = 0; row < h; ++row) {
            for (int ix = 0; ix < w; ++ix) {
                int v;
                if (!(in >> v)) throw std::runtime_error("truncated P2 data");
                set.set(ix, h - 1 - row, v > thresh);
            }
        }
    } else {
        in.get();  // single whitespace byte after maxval
        const int bpp = maxval > 255 ? 2 : 1;
        std::vector<char> row(static_cast<size_t>(w) * bpp);
        for (int r = 0; r < h; ++r) {
            if (!in.read(row.data(), static_cast<std::streamsize>(row.size()))) {
                throw std::runtime_error("truncated P5 data");
            }
            for (int ix = 0; ix < w; ++ix) {
                int v = static_cast<unsigned char>(row[static_cast<size_t>(ix) * bpp]);
                if (bpp == 2) {
                    v = (v << 8) | static_cast<unsigned char>(row[ix * 2 + 1]);
                }
                set.set(ix, h - 1 - r, v > thresh);
            }
        }
    }
    return set;
}

PixelSet PixelSet::read_ascii(std::istream& in) {
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    const int side = static_cast<int>(rows.size());
    PixelSet set(q_for_side(side));
    for (int r = 0; r < side; ++r) {
        if (static_cast<int>(rows[r].size()) != side) {
            throw std::runtime_error("ragged 0/1 grid at row " + std::to_string(r));
        }
        for (int ix = 0; ix < side; ++ix) {
            const char c = rows[r][ix];
            if (c != '0' && c != '1') {
                throw std::runtime_error("0/1 grid holds stray character");
            }
            set.set(ix, side - 1 - r, c == '1');
        }
    }
    return set;
}

void PixelSet::write_pgm(std::ostream& out, bool binary) const {
    out << (binary ? "P5\n" : "P2\n") << side_ << ' ' << side_ << "\n255\n";
    for (int row = 0; row < side_; ++row) {
        const int iy = side_ - 1 - row;
        if (binary) {
            std::vector<char> buf(static_cast<size_t>(side_));
            for (int ix = 0; ix < side_; ++ix) {
                buf[static_cast<size_t>(ix)] = get(ix, iy) ? static_cast<char>(255) : 0;
            }
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        } else {
            for (int ix = 0; ix < side_; ++ix) {
                out << (get(ix, iy) ? 255 : 0) << (ix + 1 == side_ ? '\n' : ' ');
            }
        }
    }
}

void PixelSet::write_ascii(std::ostream& out) const {
    for (int row = 0; row < side_; ++row) {
        const int iy = side_ - 1 - row;
        for (int ix = 0; ix < side_; ++ix) out << (get(ix, iy) ? '1' : '0');
        out << '\n';
    }
}

bool PixelSet::get(int ix, int iy) const {
    const uint64_t word = words_[static_cast<size_t>(iy) * wpr_ + (ix >> 6)];
    return (word >> (ix & 63)) & 1;
}

void PixelSet::set(int ix, int iy, bool value) {
    uint64_t& word = words_[static_cast<size_t>(iy) * wpr_ + (ix >> 6)];
    const uint64_t bit = uint64_t{1} << (ix & 63);
    if (value) {
        word |= bit;
    } else {
        word &= ~bit;
    }
    dirty_ = true;
}

void PixelSet::rebuild_prefix() const {
    prefix_.assign(static_cast<size_t>(side_) * (wpr_ + 1), 0);
    for (int iy = 0; iy < side_; ++iy) {
        uint32_t run = 0;
        const size_t base = static_cast<size_t>(iy) * (wpr_ + 1);
        for (size_t w = 0; w < wpr_; ++w) {
            prefix_[base + w] = run;
            run += static_cast<uint32_t>(__builtin_popcountll(words_[iy * wpr_ + w]));
        }
        prefix_[base + wpr_] = run;
    }
    dirty_ = false;
}

uint64_t PixelSet::count() const { return count_rect(0, side_, 0, side_); }

double PixelSet::measure() const {
    return static_cast<double>(count()) / (static_cast<double>(side_) * side_);
}

uint64_t PixelSet::count_row(int iy, int x0, int x1) const {
    const size_t pbase = static_cast<size_t>(iy) * (wpr_ + 1);
    const size_t wbase = static_cast<size_t>(iy) * wpr_;
    const int w0 = x0 >> 6, w1 = (x1 - 1) >> 6;
    auto masked = [&](int w, uint64_t mask) {
        return static_cast<uint64_t>(__builtin_popcountll(words_[wbase + w] & mask));
    };
    const uint64_t head_mask = ~uint64_t{0} << (x0 & 63);
    const uint64_t tail_mask = ~uint64_t{0} >> (63 - ((x1 - 1) & 63));
    if (w0 == w1) return masked(w0, head_mask & tail_mask);
    uint64_t total = masked(w0, head_mask) + masked(w1, tail_mask);
    total += prefix_[pbase + w1] - prefix_[pbase + w0 + 1];
    return total;
}

uint64_t PixelSet::count_rect(int x0, int x1, int y0, int y1) const {
    if (x0 >= x1 || y0 >= y1) return 0;
    if (dirty_) rebuild_prefix();
    uint64_t total = 0;
    for (int iy = y0; iy < y1; ++iy) total += count_row(iy, x0, x1);
    return total;
}

}  // namespace bilex
