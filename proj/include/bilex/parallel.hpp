#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace bilex {
namespace parallel {

// Worker count: BILEX_THREADS when set (clamped to [1, 256]), otherwise the
// hardware concurrency, never zero.
int thread_count();

// Deterministic map-reduce over [0, n).  The range is cut into fixed-size
// blocks independent of the worker count and the per-block results are
// folded in block order, so the value is bit-identical for any thread
// count as long as `block` is a pure function of its index range.
template <class R, class BlockFn, class Reduce>
R map_reduce(size_t n, R init, BlockFn block, Reduce reduce,
             size_t block_size = 4096) {
    if (n == 0) return init;
    const size_t nblocks = (n + block_size - 1) / block_size;
    std::vector<R> partial(nblocks, init);
    const int workers =
        static_cast<int>(std::min<size_t>(thread_count(), nblocks));
    std::atomic<size_t> next{0};
    auto run = [&]() {
        for (size_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) {
            const size_t lo = b * block_size;
            const size_t hi = std::min(n, lo + block_size);
            partial[b] = block(lo, hi);
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(run);
        for (std::thread& t : pool) t.join();
    }
    R out = init;
    for (const R& p : partial) out = reduce(out, p);
    return out;
}

}  // namespace parallel
}  // namespace bilex
