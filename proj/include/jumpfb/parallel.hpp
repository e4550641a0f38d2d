// parallel.hpp: index-parallel loops with a fixed work partition.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace jumpfb {

/// Worker count: JUMPFB_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("JUMPFB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n). Each index is handled exactly once; callers
/// write results into slot i, so the outcome never depends on scheduling.
/// The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = thread_count()) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace jumpfb
