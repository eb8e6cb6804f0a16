#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

// Runs body(i) for i in [0, n) on up to `threads` workers.  Work is handed
// out in fixed-size chunks through an atomic counter; since each index owns
// its own output slot and its own RNG stream, results are identical for any
// thread count — only wall time changes.  The first worker exception is
// rethrown on the calling thread after all workers join.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    constexpr std::size_t kChunk = 64;
    if (threads == 0) threads = 1;
    if (threads == 1 || n <= kChunk) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::atomic<bool> failed{false};
    std::mutex error_mutex;

    auto work = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t lo = next.fetch_add(kChunk, std::memory_order_relaxed);
            if (lo >= n) return;
            const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace chaoslab
