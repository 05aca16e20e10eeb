#pragma once

#include <charconv>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace quenchmap {

// Worker count for data-parallel sections: QUENCHMAP_THREADS if set (min 1),
// otherwise whatever the hardware reports.
inline unsigned worker_count() {
    if (const char* env = std::getenv("QUENCHMAP_THREADS")) {
        unsigned parsed = 0;
        const auto* end = env;
        while (*end) ++end;
        const auto res = std::from_chars(env, end, parsed);
        if (res.ec == std::errc{} && res.ptr == end && parsed >= 1) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

// Runs fn(i) for i in [0, n) over a block partition. The partition only
// affects scheduling, never results; the first exception thrown by any
// worker is rethrown on the caller.
inline void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::mutex mtx;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(mtx);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace quenchmap
