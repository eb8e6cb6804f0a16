#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace chaoslab {

// A sorted sample of finite real values; the common currency of all the
// empirical metrics below.
class EmpiricalSample {
  public:
    explicit EmpiricalSample(std::vector<double> values);  // sorts its copy
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    // Type-1 sample quantile: the order statistic at index ceil(u * R),
    // u in (0, 1].
    double quantile(double u) const;

  private:
    std::vector<double> values_;
};

// Kolmogorov distance sup_x |F_R(x) - F(x)| against a reference CDF,
// accounting for both one-sided jumps of the empirical CDF at every sample
// point.
double kolmogorov(const EmpiricalSample& sample,
                  const std::function<double(double)>& cdf);

// Wasserstein-1 between two equal-size samples: the mean absolute
// difference of paired order statistics.
double wasserstein1(const EmpiricalSample& a, const EmpiricalSample& b);

// Wasserstein-1 between a sample and a reference given by its quantile
// function, via a 10^4-point midpoint quantile grid.
double wasserstein1(const EmpiricalSample& a,
                    const std::function<double(double)>& reference_quantile);

// Histogram total-variation estimate against a reference density:
//   (1/2) [ sum_bins |empirical mass - integral of density over bin|
//           + reference mass outside the binning range ].
// bins <= 0 selects the Freedman-Diaconis count clamped to [16, 512].
double tv_hist(const EmpiricalSample& sample,
               const std::function<double(double)>& density, int bins = 0);

// Exact-mass total variation against a discrete reference supported on the
// integers: sample values are rounded to the nearest integer.
double tv_discrete(const EmpiricalSample& sample,
                   const std::function<double(std::int64_t)>& pmf);

// The bin count tv_hist would auto-select for this sample.
int freedman_diaconis_bins(const EmpiricalSample& sample);

}  // namespace chaoslab
