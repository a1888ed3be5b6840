#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace orbitkit {

/// Thread count from ORBITKIT_THREADS, or 1.
inline unsigned threads_from_env() {
    if (const char* s = std::getenv("ORBITKIT_THREADS")) {
        try {
            const int v = std::stoi(s);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; callers write results into slot i, so the outcome
/// does not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace orbitkit
