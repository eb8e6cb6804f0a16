#include "chaoslab/distances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "chaoslab/errors.hpp"
#include "chaoslab/summation.hpp"

namespace chaoslab {

namespace {

// Simpson's rule over [a, b] with a fixed even subdivision count; plenty for
// the smooth densities these histograms are compared against.
double integrate_simpson(const std::function<double(double)>& f, double a,
                         double b, int subdivisions = 32) {
    const double h = (b - a) / subdivisions;
    double acc = f(a) + f(b);
    for (int i = 1; i < subdivisions; ++i) {
        acc += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

}  // namespace

EmpiricalSample::EmpiricalSample(std::vector<double> values)
    : values_(std::move(values)) {
    if (values_.empty()) {
        throw precondition_error("EmpiricalSample: empty sample");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw precondition_error("EmpiricalSample: non-finite value");
        }
    }
    std::sort(values_.begin(), values_.end());
}

double EmpiricalSample::quantile(double u) const {
    if (!(u > 0.0) || !(u <= 1.0)) {
        throw precondition_error("EmpiricalSample::quantile: u outside (0,1]");
    }
    const auto r = static_cast<std::size_t>(
        std::ceil(u * static_cast<double>(values_.size())));
    const std::size_t idx = (r == 0) ? 0 : r - 1;
    return values_[std::min(idx, values_.size() - 1)];
}

double kolmogorov(const EmpiricalSample& sample,
                  const std::function<double(double)>& cdf) {
    const auto& x = sample.values();
    const double r = static_cast<double>(x.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        // With ties, the empirical CDF jumps once per distinct value; using
        // the largest upper index and smallest lower index at each sample
        // point covers the full jump automatically.
        const double fx = cdf(x[i]);
        if (!std::isfinite(fx)) {
            throw precondition_error("kolmogorov: reference CDF not finite");
        }
        const double above = static_cast<double>(i + 1) / r - fx;
        const double below = fx - static_cast<double>(i) / r;
        sup = std::max({sup, above, below});
    }
    return sup;
}

double wasserstein1(const EmpiricalSample& a, const EmpiricalSample& b) {
    if (a.size() != b.size()) {
        throw precondition_error("wasserstein1: sample sizes differ");
    }
    const auto& xa = a.values();
    const auto& xb = b.values();
    return pairwise_sum_indexed(0, xa.size(),
                                [&](std::size_t i) {
                                    return std::abs(xa[i] - xb[i]);
                                }) /
           static_cast<double>(xa.size());
}

double wasserstein1(const EmpiricalSample& a,
                    const std::function<double(double)>& reference_quantile) {
    constexpr std::size_t grid = 10000;
    return pairwise_sum_indexed(0, grid,
                                [&](std::size_t g) {
                                    const double u =
                                        (static_cast<double>(g) + 0.5) /
                                        static_cast<double>(grid);
                                    const double q = reference_quantile(u);
                                    if (!std::isfinite(q)) {
                                        throw precondition_error(
                                            "wasserstein1: reference quantile "
                                            "not finite");
                                    }
                                    return std::abs(a.quantile(u) - q);
                                }) /
           static_cast<double>(grid);
}

int freedman_diaconis_bins(const EmpiricalSample& sample) {
    const auto& x = sample.values();
    const double r = static_cast<double>(x.size());
    const double iqr = sample.quantile(0.75) - sample.quantile(0.25);
    const double range = x.back() - x.front();
    if (!(iqr > 0.0) || !(range > 0.0)) {
        return 16;
    }
    const double h = 2.0 * iqr * std::pow(r, -1.0 / 3.0);
    const double raw = std::ceil(range / h);
    if (!(raw > 16.0)) {
        return 16;
    }
    return raw > 512.0 ? 512 : static_cast<int>(raw);
}

double tv_hist(const EmpiricalSample& sample,
               const std::function<double(double)>& density, int bins) {
    if (bins <= 0) {
        bins = freedman_diaconis_bins(sample);
    }
    const auto& x = sample.values();
    double lo = x.front();
    double hi = x.back();
    if (!(hi > lo)) {
        // Degenerate (constant) sample: widen to a fixed small window so the
        // bins have positive width.
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;
    const double r = static_cast<double>(x.size());

    double discrepancy = 0.0;
    double mass_inside = 0.0;
    std::size_t pos = 0;
    for (int b = 0; b < bins; ++b) {
        const double left = lo + b * width;
        const double right = (b == bins - 1) ? hi : lo + (b + 1) * width;
        // Count sample points in (left, right]; the first bin is closed on
        // the left so every point is assigned exactly once.
        std::size_t count = 0;
        while (pos < x.size() &&
               (x[pos] <= right || b == bins - 1)) {
            ++count;
            ++pos;
        }
        const double ref = integrate_simpson(density, left, right);
        if (!std::isfinite(ref) || ref < -1e-12) {
            throw precondition_error("tv_hist: invalid reference density");
        }
        mass_inside += ref;
        discrepancy += std::abs(static_cast<double>(count) / r - ref);
    }
    const double outside = std::max(0.0, 1.0 - mass_inside);
    return 0.5 * (discrepancy + outside);
}

double tv_discrete(const EmpiricalSample& sample,
                   const std::function<double(std::int64_t)>& pmf) {
    const auto& x = sample.values();
    const double r = static_cast<double>(x.size());
    std::map<std::int64_t, std::size_t> counts;
    for (double v : x) {
        counts[static_cast<std::int64_t>(std::llround(v))] += 1;
    }
    double discrepancy = 0.0;
    double mass_inside = 0.0;
    for (const auto& [k, c] : counts) {
        const double p = pmf(k);
        if (!std::isfinite(p) || p < -1e-12) {
            throw precondition_error("tv_discrete: invalid reference pmf");
        }
        mass_inside += p;
        discrepancy += std::abs(static_cast<double>(c) / r - p);
    }
    const double outside = std::max(0.0, 1.0 - mass_inside);
    return 0.5 * (discrepancy + outside);
}

}  // namespace chaoslab
