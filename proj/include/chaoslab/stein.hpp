#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace chaoslab {

// Solution of the normal Stein equation for the half-line test set
// (-inf, x]:  f'(u) = u f(u) + 1{u <= x} - Phi(x),  the bounded solution
//   f_x(u) = sqrt(2 pi) e^(u^2/2) Phi(min(u,x)) (1 - Phi(max(u,x))).
// Evaluation uses a product of scaled complementary error functions so no
// intermediate overflows for |u|, |x| up to several hundred.  fprime is
// f_x'(u) from the equation itself (at the kink u = x the left limit,
// i.e. the indicator evaluates to 1).
struct SteinSolution {
    double f = 0.0;
    double fprime = 0.0;
};

SteinSolution stein_eval(double x, double u);

// E[(N^2 - 1) f_x(N)] in closed form: (x^2 - 1) pdf(x) / 3.  This is the
// quantity whose population version drives the exact-rate profile.
double stein_inner(double x);

// Berry-Esseen bound sup_x |P(V_n <= x) - Phi(x)| <= c E|X_1|^3 / sqrt(n)
// for standardized sums of iid unit-variance X with E|X|^3 >= 1.
enum class BerryEsseenMode { proven_33, sharp_04784 };
double berry_esseen_bound(std::int64_t n, double third_abs_moment,
                          BerryEsseenMode mode);

// Invariance bound for a degree-d multilinear form with unit-variance input
// law of fourth moment m4, influence parameter tau, and a three-times
// differentiable test function with ||phi'''|| = phi_third_norm:
//   (gamma/3) (3 + 2 gamma)^{3(d-1)/2} d^{3/2} sqrt(d!) ||phi'''|| sqrt(tau),
// where gamma = max(3, m4).
double moo_bound(int d, double tau, double fourth_moment, double phi_third_norm);

// Hypercontractive fourth-moment bound for a multilinear polynomial of
// degree d in iid unit-variance entries with E[X^4] = m4 and E[P^2] = m2:
//   E[P^4] <= (3 + 2 m4)^(2d) m2^2.
double hypercontractivity_bound(int d, double fourth_moment, double second_moment);

// Solution of the Poisson Stein (Chen) equation on {0..K}:
//   lambda f(k+1) - k f(k) = 1_C(k) - P(Po(lambda) in C),  f(0) = 0,
// where K is the smallest cutoff with P(Po(lambda) > K) < 1e-12.  The
// forward recursion is used below lambda and the tail-sum representation
// above it, which keeps the residual at machine precision for all k.
struct ChenSolution {
    double lambda = 0.0;
    double prob_c = 0.0;            // P(Po(lambda) in C)
    std::vector<double> f;          // f(0..K+1)
    std::vector<std::uint8_t> in_c; // indicator of C on {0..K}
};

ChenSolution chen_solve(const std::vector<std::int64_t>& c_set, double lambda);

// Magic-factor constants for the Chen solution.
//
// chen_delta_bound returns (1 - e^-lambda)/lambda, a valid bound for
// sup_{k>=1} |f(k+1) - f(k)| of any indicator-set solution.
//
// chen_delta2_bound returns the chained constant
// (2/lambda) * chen_delta_bound(lambda).  Caution: this is NOT a valid
// bound for sup_{k>=1} |f(k+2) - 2f(k+1) + f(k)| once lambda > 2.  At a
// boundary point j of C the first difference f(j+1) - f(j) spikes to the
// order of the first-difference sup while its neighbours are small and of
// the opposite sign, so the second difference there is of the same order
// as the first-difference sup — larger than (2/lambda) times it.  The
// inequality that does hold for indicator sets is
//   sup_k |f(k+2) - 2f(k+1) + f(k)| <= (2/lambda) * sup_k |1_C(k+1) - 1_C(k)|
//                                   <= 2/lambda,
// i.e. the right-hand side carries the increment of the target function,
// not of the solution.  Both facts are pinned in the tests; the chained
// constant is kept because half of it is the second coefficient of the
// total-variation bound below.
double chen_delta_bound(double lambda);
double chen_delta2_bound(double lambda);

// Total-variation bound between a weighted sum F = sum_i c_i eta(B_i) of
// independent Poisson counts (eta(B_i) ~ Po(mu_i)) and Po(lambda) with
// lambda = sum_i c_i mu_i:
//   (1 - e^-lambda)/lambda |lambda - sum c_i^2 mu_i|
//     + (1 - e^-lambda)/lambda^2 sum c_i^2 |c_i - 1| mu_i.
double poisson_tv_bound(std::span<const double> c, std::span<const double> mu);

// Wasserstein bound between the standardized Poisson (eta(B) - lambda) /
// sqrt(lambda) and N(0,1): 1 / sqrt(lambda).
double poisson_wasserstein_bound(double lambda);

}  // namespace chaoslab
