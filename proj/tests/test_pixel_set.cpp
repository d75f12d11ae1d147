#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bilex/pixel_set.hpp"
#include "bilex/rng.hpp"
#include "doctest.h"

using bilex::PixelSet;

TEST_CASE("full and empty grids") {
    PixelSet empty(6);
    CHECK(empty.count() == 0);
    CHECK(empty.measure() == 0.0);

    PixelSet full = PixelSet::from_shape("rect 0 0 1 1", 6);
    CHECK(full.count() == 64ull * 64ull);
    CHECK(full.measure() == 1.0);
}

TEST_CASE("left half at q = 8 has measure exactly one half") {
    PixelSet set = PixelSet::from_shape("left-half", 8);
    CHECK(set.measure() == 0.5);
    CHECK(set.get(127, 0));
    CHECK(!set.get(128, 0));
}

TEST_CASE("disk of radius 1/4 approximates pi/16") {
    PixelSet set = PixelSet::from_shape("disk 0.5 0.5 0.25", 10);
    const double target = 3.14159265358979324 / 16.0;
    // Center sampling misses at most the pixels straddling the circle, a
    // band of length 2 pi r and width one pixel.
    CHECK(std::fabs(set.measure() - target) < 2.0 / 1024.0);
}

TEST_CASE("checkerboard measures") {
    PixelSet plain = PixelSet::from_shape("checkerboard 8", 8);
    CHECK(plain.measure() == 0.5);
    // Cell (0,0) has even parity and fill 1.
    CHECK(plain.get(0, 0));
    CHECK(!plain.get(32, 0));

    PixelSet biased = PixelSet::from_shape("checkerboard 8 0.6 0.0", 8);
    // Each even cell is 32 pixels wide and keeps floor-ish 0.6 * 32 rows;
    // 0.6 * 32 = 19.2 so center sampling keeps 19 of 32 rows.
    CHECK(biased.measure() == doctest::Approx(0.5 * 19.0 / 32.0).epsilon(1e-12));
}

TEST_CASE("union of shapes") {
    PixelSet set = PixelSet::from_shape("union(rect 0 0 0.5 0.5; rect 0.5 0.5 1 1)", 7);
    CHECK(set.measure() == 0.5);
    CHECK(set.get(0, 0));
    CHECK(set.get(127, 127));
    CHECK(!set.get(0, 127));
}

TEST_CASE("count_rect agrees with brute force") {
    PixelSet set(5);
    bilex::rng::Sequence seq(900, bilex::rng::kShapeSamples);
    for (int iy = 0; iy < 32; ++iy) {
        for (int ix = 0; ix < 32; ++ix) {
            set.set(ix, iy, seq.uniform(0.0, 1.0) < 0.37);
        }
    }
    for (int trial = 0; trial < 200; ++trial) {
        int x0 = static_cast<int>(seq.uniform(0.0, 32.0));
        int x1 = static_cast<int>(seq.uniform(0.0, 33.0));
        int y0 = static_cast<int>(seq.uniform(0.0, 32.0));
        int y1 = static_cast<int>(seq.uniform(0.0, 33.0));
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        uint64_t brute = 0;
        for (int iy = y0; iy < y1; ++iy) {
            for (int ix = x0; ix < x1; ++ix) brute += set.get(ix, iy) ? 1 : 0;
        }
        CHECK(set.count_rect(x0, x1, y0, y1) == brute);
    }
}

TEST_CASE("count_rect crosses word boundaries") {
    PixelSet set(8);
    for (int ix = 60; ix < 70; ++ix) set.set(ix, 3, true);
    CHECK(set.count_rect(60, 70, 3, 4) == 10);
    CHECK(set.count_rect(0, 256, 3, 4) == 10);
    CHECK(set.count_rect(63, 65, 3, 4) == 2);
    CHECK(set.count_rect(64, 64, 3, 4) == 0);
}

TEST_CASE("pgm round trips") {
    PixelSet set = PixelSet::from_shape("disk 0.3 0.6 0.2", 6);

    std::stringstream ascii;
    set.write_pgm(ascii, false);
    PixelSet back_ascii = PixelSet::read_pgm(ascii);
    CHECK(back_ascii.q() == 6);
    CHECK(back_ascii.count() == set.count());

    std::stringstream binary;
    set.write_pgm(binary, true);
    PixelSet back_binary = PixelSet::read_pgm(binary);
    CHECK(back_binary.count() == set.count());
    for (int iy = 0; iy < 64; ++iy) {
        for (int ix = 0; ix < 64; ++ix) {
            CHECK(back_binary.get(ix, iy) == set.get(ix, iy));
        }
    }
}

TEST_CASE("pgm reader tolerates comments and maxval scaling") {
    std::stringstream in("P2\n# a comment\n2 2\n# another\n7\n0 7\n7 0\n");
    PixelSet set = PixelSet::read_pgm(in);
    CHECK(set.q() == 1);
    // Image row 0 is the top of the square.
    CHECK(!set.get(0, 1));
    CHECK(set.get(1, 1));
    CHECK(set.get(0, 0));
    CHECK(!set.get(1, 0));
}

TEST_CASE("ascii grid round trips") {
    PixelSet set = PixelSet::from_shape("checkerboard 4", 4);
    std::stringstream buf;
    set.write_ascii(buf);
    PixelSet back = PixelSet::read_ascii(buf);
    CHECK(back.count() == set.count());
    CHECK(back.get(0, 0) == set.get(0, 0));
}

TEST_CASE("rejections") {
    CHECK_THROWS_AS(PixelSet(15), std::runtime_error);
    CHECK_THROWS_AS(PixelSet::from_shape("triangle 0 0 1", 4), std::runtime_error);
    CHECK_THROWS_AS(PixelSet::from_shape("disk 0.5 0.5", 4), std::runtime_error);

    std::stringstream bad_magic("P3\n2 2\n255\n0 0 0 0\n");
    CHECK_THROWS_AS(PixelSet::read_pgm(bad_magic), std::runtime_error);

    std::stringstream rect_pgm("P2\n4 2\n255\n0 0 0 0 0 0 0 0\n");
    CHECK_THROWS_AS(PixelSet::read_pgm(rect_pgm), std::runtime_error);

    std::stringstream ragged("10\n1\n");
    CHECK_THROWS_AS(PixelSet::read_ascii(ragged), std::runtime_error);

    std::stringstream huge("P2\n32768 32768\n255\n");
    CHECK_THROWS_AS(PixelSet::read_pgm(huge), std::runtime_error);
}
