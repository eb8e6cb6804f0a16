#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "chaoslab/summation.hpp"

namespace chaoslab {

// A point estimate together with its Monte Carlo standard error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

double sample_mean(std::span<const double> x);
// k-th central moment about the supplied mean (deterministic reduction).
double central_moment(std::span<const double> x, int k, double mean);

// Sample cumulants from central moments: k2 = m2, k3 = m3, k4 = m4 - 3 m2^2.
struct SampleCumulants {
    double k2 = 0.0;
    double k3 = 0.0;
    double k4 = 0.0;
};
SampleCumulants sample_cumulants(std::span<const double> x);

// Batch-means error bar: the estimator is applied to `num_batches`
// contiguous equal-size blocks (a trailing remainder is dropped from the
// batches, never from the full-sample value), and the spread of the batch
// values yields the standard error of the full-sample estimate.
template <class F>
Estimate batch_means(std::span<const double> x, std::size_t num_batches, F&& estimator) {
    Estimate out;
    out.value = estimator(x);
    if (num_batches < 2 || x.size() < 2 * num_batches) return out;
    const std::size_t batch = x.size() / num_batches;
    std::vector<double> b(num_batches);
    for (std::size_t i = 0; i < num_batches; ++i)
        b[i] = estimator(x.subspan(i * batch, batch));
    const double bm = pairwise_mean(b);
    const double var =
        pairwise_sum_indexed(0, num_batches, [&](std::size_t i) {
            const double d = b[i] - bm;
            return d * d;
        }) /
        static_cast<double>(num_batches - 1);
    out.se = var > 0.0 ? std::sqrt(var / static_cast<double>(num_batches)) : 0.0;
    return out;
}

Estimate mean_with_se(std::span<const double> x, std::size_t num_batches);

}  // namespace chaoslab
