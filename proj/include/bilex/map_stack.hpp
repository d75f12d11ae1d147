#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "bilex/dyadic.hpp"
#include "bilex/geometry.hpp"
#include "bilex/profile.hpp"

namespace bilex {

enum class StopReason { Tau1, Tau2, Tau3, Tau4Guard, Depth };

const char* to_string(StopReason r);
StopReason stop_reason_from(const std::string& name);

// Leaf of the stopping antichain together with the statistic that fired.
struct StopVerdict {
    DyadicBox box;
    StopReason reason = StopReason::Depth;
    double stat = 0.0;
};

struct MapPiece {
    DyadicBox box;
    double delta = 0.0;
};

// One composition layer: stretch pieces on disjoint boxes, identity
// elsewhere.  Each piece fixes its box boundary, so the glued layer is a
// continuous bijection of the square.
class MapLevel {
  public:
    void add(const MapPiece& piece);
    const MapPiece* find(Vec2 x) const;
    const std::vector<MapPiece>& pieces() const { return pieces_; }
    bool empty() const { return pieces_.empty(); }

  private:
    std::vector<MapPiece> pieces_;
    std::vector<int> dlevels_;  // distinct dyadic levels present, ascending
    std::unordered_map<uint64_t, size_t> index_;
};

// The composed map.  levels[k] holds the k-th layer; evaluation applies the
// deepest layer first, so the front layer acts last.
struct MapStack {
    const Profile* profile = nullptr;
    std::vector<MapLevel> levels;
    std::vector<StopVerdict> antichain;
    std::string provenance;

    MapStack() = default;
    explicit MapStack(const Profile* p) : profile(p) {}

    Vec2 evaluate(Vec2 x) const;
    Vec2 inverse(Vec2 y) const;

    // Chain rule along the orbit; per-piece Jacobians nudge off singular
    // loci by 1e-9 internally.
    Mat2 jacobian(Vec2 x) const;

    size_t piece_count() const;

    // Versioned text format; deltas and statistics round-trip exactly.
    void save(std::ostream& out) const;
    static MapStack load(std::istream& in, const Profile& p);
};

}  // namespace bilex
