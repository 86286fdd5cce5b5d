#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace carleson {

inline int worker_count() {
    if (const char* env = std::getenv("CARLESON_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static block partition of [0, n) over worker threads.
inline void parallel_for(long long n, const std::function<void(long long, long long)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 64) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    long long chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        long long lo = t * chunk, hi = std::min<long long>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace carleson
