#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sourcesink {

// requested > 0 wins; otherwise SOURCESINK_WORKERS; otherwise hardware.
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SOURCESINK_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static contiguous-chunk split: each index is computed by exactly one worker
// and written to a fixed slot, so results are identical for any worker count.
inline void parallel_for(int n, int workers, const std::function<void(int)>& body) {
    if (n <= 0) return;
    workers = std::min(std::max(workers, 1), n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    threads.reserve(workers);
    const int base = n / workers, extra = n % workers;
    int start = 0;
    for (int w = 0; w < workers; ++w) {
        const int count = base + (w < extra ? 1 : 0);
        threads.emplace_back([start, count, w, &body, &errors] {
            try {
                for (int i = start; i < start + count; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        start += count;
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace sourcesink
