#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaoslab {

// Deterministic reduction of a fixed-length array: a pairwise tree whose
// shape depends only on the length, never on thread count or visit order.
// All parallel estimators store per-replicate values into a preallocated
// buffer and reduce through this single code path, which is what makes the
// pipeline bit-reproducible at any --threads setting.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t mid = n / 2;
    return pairwise_sum(x.first(mid)) + pairwise_sum(x.subspan(mid));
}

inline double pairwise_mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return pairwise_sum(x) / static_cast<double>(x.size());
}

// Deterministic transform-then-reduce without materializing the transformed
// array: same tree shape as pairwise_sum over indices [lo, lo+n).
template <class F>
double pairwise_sum_indexed(std::size_t lo, std::size_t n, F&& f) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += f(lo + i);
        return s;
    }
    const std::size_t mid = n / 2;
    return pairwise_sum_indexed(lo, mid, f) +
           pairwise_sum_indexed(lo + mid, n - mid, std::forward<F>(f));
}

}  // namespace chaoslab
