#include "bilex/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace bilex {
namespace parallel {

int thread_count() {
    if (const char* env = std::getenv("BILEX_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return std::min(n, 256);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace parallel
}  // namespace bilex
