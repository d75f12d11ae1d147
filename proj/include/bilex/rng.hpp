#pragma once

#include <cstdint>

namespace bilex {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so results do not depend on evaluation order or thread count.
namespace rng {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash(uint64_t seed, uint64_t stream, uint64_t counter) {
    return splitmix64(seed ^ splitmix64(stream ^ splitmix64(counter)));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
    return static_cast<double>(hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Fixed stream ids; keeping them distinct keeps draws independent.
enum Stream : uint64_t {
    kLipschitzPairs = 1,
    kPushforward = 2,
    kBoundaryCheck = 3,
    kRoundTrip = 4,
    kPoissonCounts = 5,
    kPoissonPoints = 6,
    kPairSampling = 7,
    kShapeSamples = 8,
    kGuardPoints = 9,
};

// Small stateful view over one (seed, stream) pair; draws consume counters.
class Sequence {
  public:
    Sequence(uint64_t seed, uint64_t stream, uint64_t start = 0)
        : seed_(seed), stream_(stream), counter_(start) {}

    double uniform() { return rng::uniform(seed_, stream_, counter_++); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint64_t bits() { return hash(seed_, stream_, counter_++); }

  private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t counter_;
};

}  // namespace rng
}  // namespace bilex
