#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace linkforge {

// Worker cap: LINKFORGE_THREADS if set (>=1), else hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("LINKFORGE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// Static block partition of [0, n). Results must not depend on the partition:
// callers only write disjoint slices, so any thread count gives identical
// output bit-for-bit.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace linkforge
