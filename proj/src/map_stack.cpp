#include "bilex/map_stack.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bilex/stretch.hpp"

namespace bilex {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Tau1: return "tau1";
        case StopReason::Tau2: return "tau2";
        case StopReason::Tau3: return "tau3";
        case StopReason::Tau4Guard: return "tau4-guard";
        case StopReason::Depth: return "depth";
    }
    return "depth";
}

StopReason stop_reason_from(const std::string& name) {
    for (StopReason r : {StopReason::Tau1, StopReason::Tau2, StopReason::Tau3,
                         StopReason::Tau4Guard, StopReason::Depth}) {
        if (name == to_string(r)) return r;
    }
    throw std::runtime_error("unknown stop reason: " + name);
}

namespace {

uint64_t box_key(const DyadicBox& b) {
    return (static_cast<uint64_t>(b.level) << 52) | (static_cast<uint64_t>(b.ix) << 26) |
           static_cast<uint64_t>(b.iy);
}

}  // namespace

void MapLevel::add(const MapPiece& piece) {
    index_[box_key(piece.box)] = pieces_.size();
    pieces_.push_back(piece);
    if (std::find(dlevels_.begin(), dlevels_.end(), piece.box.level) == dlevels_.end()) {
        dlevels_.push_back(piece.box.level);
        std::sort(dlevels_.begin(), dlevels_.end());
    }
}

const MapPiece* MapLevel::find(Vec2 x) const {
    for (int d : dlevels_) {
        const auto it = index_.find(box_key(DyadicBox::box_of(x, d)));
        if (it != index_.end()) return &pieces_[it->second];
    }
    return nullptr;
}

Vec2 MapStack::evaluate(Vec2 x) const {
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        if (const MapPiece* piece = it->find(x)) {
            x = stretch::psi_rect(*profile, x, piece->delta, piece->box.frame());
        }
    }
    return x;
}

Vec2 MapStack::inverse(Vec2 y) const {
    for (const MapLevel& level : levels) {
        if (const MapPiece* piece = level.find(y)) {
            y = stretch::psi_rect_inverse(*profile, y, piece->delta, piece->box.frame());
        }
    }
    return y;
}

Mat2 MapStack::jacobian(Vec2 x) const {
    Mat2 j = Mat2::identity();
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        if (const MapPiece* piece = it->find(x)) {
            j = stretch::psi_rect_jacobian(*profile, x, piece->delta, piece->box.frame()) * j;
            x = stretch::psi_rect(*profile, x, piece->delta, piece->box.frame());
        }
    }
    return j;
}

size_t MapStack::piece_count() const {
    size_t n = 0;
    for (const MapLevel& level : levels) n += level.pieces().size();
    return n;
}

void MapStack::save(std::ostream& out) const {
    char buf[64];
    out << "bilexstack 1\n";
    out << "provenance " << (provenance.empty() ? "-" : provenance) << "\n";
    out << "levels " << levels.size() << "\n";
    for (size_t k = 0; k < levels.size(); ++k) {
        const auto& pieces = levels[k].pieces();
        out << "level " << k << " pieces " << pieces.size() << "\n";
        for (const MapPiece& piece : pieces) {
            std::snprintf(buf, sizeof buf, "%.17g", piece.delta);
            out << piece.box.level << ' ' << piece.box.ix << ' ' << piece.box.iy << ' '
                << buf << "\n";
        }
    }
    out << "antichain " << antichain.size() << "\n";
    for (const StopVerdict& v : antichain) {
        std::snprintf(buf, sizeof buf, "%.17g", v.stat);
        out << v.box.level << ' ' << v.box.ix << ' ' << v.box.iy << ' '
            << to_string(v.reason) << ' ' << buf << "\n";
    }
}

MapStack MapStack::load(std::istream& in, const Profile& p) {
    auto expect = [&](const std::string& want) {
        std::string got;
        if (!(in >> got) || got != want) {
            throw std::runtime_error("bad stack file: expected '" + want + "'");
        }
    };
    expect("bilexstack");
    int version = 0;
    in >> version;
    if (version != 1) {
        throw std::runtime_error("unsupported stack version " + std::to_string(version));
    }
    MapStack stack(&p);
    expect("provenance");
    in >> stack.provenance;
    if (stack.provenance == "-") stack.provenance.clear();
    expect("levels");
    size_t nlevels = 0;
    in >> nlevels;
    stack.levels.resize(nlevels);
    for (size_t k = 0; k < nlevels; ++k) {
        expect("level");
        size_t idx = 0, npieces = 0;
        in >> idx;
        expect("pieces");
        in >> npieces;
        if (idx != k) throw std::runtime_error("stack levels out of order");
        for (size_t i = 0; i < npieces; ++i) {
            MapPiece piece;
            in >> piece.box.level >> piece.box.ix >> piece.box.iy >> piece.delta;
            stack.levels[k].add(piece);
        }
    }
    expect("antichain");
    size_t nleaves = 0;
    in >> nleaves;
    for (size_t i = 0; i < nleaves; ++i) {
        StopVerdict v;
        std::string reason;
        in >> v.box.level >> v.box.ix >> v.box.iy >> reason >> v.stat;
        v.reason = stop_reason_from(reason);
        stack.antichain.push_back(v);
    }
    if (!in) throw std::runtime_error("truncated stack file");
    return stack;
}

}  // namespace bilex
