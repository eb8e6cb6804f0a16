#include "chaoslab/stats.hpp"

#include <cmath>

namespace chaoslab {

double sample_mean(std::span<const double> x) { return pairwise_mean(x); }

double central_moment(std::span<const double> x, int k, double mean) {
    if (x.empty()) return 0.0;
    return pairwise_sum_indexed(0, x.size(), [&](std::size_t i) {
               double d = x[i] - mean;
               double p = d;
               for (int j = 1; j < k; ++j) p *= d;
               return p;
           }) /
           static_cast<double>(x.size());
}

SampleCumulants sample_cumulants(std::span<const double> x) {
    const double mean = sample_mean(x);
    SampleCumulants c;
    c.k2 = central_moment(x, 2, mean);
    c.k3 = central_moment(x, 3, mean);
    const double m4 = central_moment(x, 4, mean);
    c.k4 = m4 - 3.0 * c.k2 * c.k2;
    return c;
}

Estimate mean_with_se(std::span<const double> x, std::size_t num_batches) {
    return batch_means(x, num_batches,
                       [](std::span<const double> v) { return pairwise_mean(v); });
}

}  // namespace chaoslab
