#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/gaussproc.hpp"
#include "chaoslab/hermite.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/report.hpp"

namespace chaoslab {

// A centered, unit-variance law with the moments the bounds need.
struct Law {
    std::string name;
    double abs_third_moment = 0.0;  // E|X|^3
    double fourth_moment = 0.0;     // E[X^4]
    double (*draw)(PhiloxStream&) = nullptr;
};

// Built-in laws: gaussian, rademacher, uniform, shifted_exponential.
// Throws precondition_error for an unknown name.
const Law& law_by_name(const std::string& name);
std::vector<std::string> law_names();

// Normalized partial sums V_n = n^{-1/2} sum_k phi(X_k) of a Hermite-series
// functional of a stationary Gaussian sequence with covariance rho.
// Reports the truncated limit variance sigma^2 = sum_q q! a_q^2 sum_k rho^q
// (tail estimate attached), the exact finite-n variance, sample moments of
// V_n over `reps` replicates, and the Kolmogorov distance to N(0, sigma^2).
// With two or more active Hermite components the empirical cross moment
// between the two lowest-order components is checked against its exact
// value zero.  Errors: phi not centered or all-zero -> precondition_error;
// covariance not summable at the Hermite rank -> divergence_error.
ExperimentReport breuer_major_run(const HermiteSeries& phi, const CovSeq& cov,
                                  std::int64_t n, std::int64_t reps,
                                  std::uint64_t seed, unsigned threads = 1,
                                  std::int64_t series_window = 100000);

// Quadratic variation of fractional Brownian motion on {k/n}: per replicate
// S_n = n^{-2H} sum X_k^2 (X = unit-variance increments), the plug-in
// estimate H_hat = 1/2 - log(S_n)/(2 log n), and the exactly normalized
// F_n = sum(X_k^2 - 1)/sigma_n.  Reports the applicable Gaussian-rate
// regime for H <= 3/4 and the asymptotic variance 1/2 sum rho^2 of
// sqrt(n) log(n) (H_hat - H) for H < 3/4.  Errors: H outside (0,1).
ExperimentReport qv_hurst_run(double hurst, std::int64_t n, std::int64_t reps,
                              std::uint64_t seed, unsigned threads = 1);

// Second-chaos exact rate of convergence: F_n = sum(X_k^2 - 1)/sigma_n for
// fBm increments with H < 1/2.  For each grid point x it estimates
// sqrt(n) (P(F_n <= x) - Phi(x)) and compares with the limit
// (alpha / (6 sqrt(2 pi))) (1 - x^2) exp(-x^2/2), where
// alpha = lim kappa_3/sqrt(kappa_4) is computed from convolution sums of
// rho.  Exact cumulants kappa_s (s = 2,3,4,8) come from traces of powers of
// the Toeplitz covariance matrix (dense route, n <= 4096).
// Errors: H >= 1/2 -> precondition_error; n > 4096 -> capacity_error.
ExperimentReport exact_rate_run(double hurst, const std::vector<double>& x_grid,
                                std::int64_t n, std::int64_t reps,
                                std::uint64_t seed, unsigned threads = 1);

// Universality of multilinear averages Q_d(g, X) = sum g(i_1..i_d)
// X_{i_1}..X_{i_d} for an off-diagonal symmetric kernel with d! ||g||^2 = 1:
// for each requested law it samples Q_d, reports second/fourth moments and
// the Kolmogorov distance to the standard normal, and checks the smooth
// test-function gap |E cos(Q(X)) - E cos(Q(G))| against the influence bound
// with tau = max_i sum_{k_2..k_d} g(i, k_2..k_d)^2.  The Gaussian samples
// are also checked against the Wiener-chaos sampler for the same kernel
// (two-sample Kolmogorov distance <= 3/sqrt(R)).
// Errors: kernel not symmetric / not vanishing on diagonals / not
// normalized -> precondition_error.
ExperimentReport universality_run(const Kernel& g,
                                  const std::vector<std::string>& laws,
                                  std::int64_t reps, std::uint64_t seed,
                                  unsigned threads = 1);

// Density recovery for F = sum_i lambda_i (X_i^2 - 1) (order = 2, unit
// variance required: 2 sum lambda^2 = 1) or F = sum_i lambda_i X_i
// (order = 1, Gaussian control).  Estimates the conditional response
// g(x) = E[||DF||^2 / q | F = x] by a rank-windowed local-linear fit,
// integrates y/g(y) by the trapezoid rule from 0, and evaluates
// rho(x) = E|F| / (2 g(x)) exp(-int_0^x y/g(y) dy) on the grid.  The
// variance of g(F) is reported as the normality score (zero iff Gaussian).
// Evaluation is restricted to the central 98% sample-quantile range;
// a grid point outside it raises coverage_error.
ExperimentReport density_run(const std::vector<double>& lambdas,
                             std::int64_t reps, const std::vector<double>& grid,
                             std::uint64_t seed, int order = 2,
                             unsigned threads = 1);

// Classical CLT with Berry-Esseen control: V_n = n^{-1/2} sum X_i for one of
// the built-in laws; Kolmogorov distance to Phi compared against the
// Berry-Esseen bound in both constant modes (proven constant 33 and sharp
// constant 0.4784, each times E|X|^3 / sqrt(n)), with a 3 / (2 sqrt(R))
// Monte Carlo allowance.  Errors: unknown law name -> precondition_error.
ExperimentReport clt_run(const std::string& law, std::int64_t n,
                         std::int64_t reps, std::uint64_t seed,
                         unsigned threads = 1);

}  // namespace chaoslab
