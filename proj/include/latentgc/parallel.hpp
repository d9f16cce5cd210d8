#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace latentgc {

/// Runs fn(i) for i in [0, n). Results must be written by index; ordering of
/// side effects across i is unspecified. Rethrows the first exception.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_threads = 0)
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned nthreads = max_threads ? std::min(max_threads, hw) : hw;
    nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, n));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace latentgc
