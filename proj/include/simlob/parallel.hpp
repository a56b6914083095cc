#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace simlob {

// Worker count from SIMLOB_WORKERS, else hardware concurrency (at least 1).
inline std::size_t worker_count() {
    if (const char* env = std::getenv("SIMLOB_WORKERS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<std::size_t>(n);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written by index so the outcome does not depend on scheduling. The first
// exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t k = std::min(workers, n);
    pool.reserve(k);
    for (std::size_t w = 0; w < k; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace simlob
