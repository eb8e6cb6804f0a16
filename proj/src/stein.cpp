#include "chaoslab/stein.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "chaoslab/errors.hpp"
#include "chaoslab/special.hpp"

namespace chaoslab {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

SteinSolution stein_eval(double x, double u) {
    // f = (sqrt(2 pi)/4) e^(-x^2/2) erfcx(-lo/sqrt(2)) erfcx(hi/sqrt(2)),
    // equivalent to sqrt(2 pi) e^(u^2/2) Phi(lo) (1 - Phi(hi)).  erfcx at a
    // negative argument grows like 2 e^(s^2), so whichever factor would
    // explode is reflected and its exponential folded into e^(-x^2/2); the
    // folded exponent (lo or hi)^2/2 - x^2/2 is never positive because the
    // offending endpoint is closer to zero than x in each branch.
    const double lo = std::min(u, x);
    const double hi = std::max(u, x);
    const double a = lo / kSqrt2;
    const double b = hi / kSqrt2;
    double f;
    if (a > 0.0) {  // both endpoints positive: reflect the lo factor
        const double folded = std::exp(a * a - 0.5 * x * x);
        f = 0.25 * kSqrt2Pi * erfcx(b) *
            (2.0 * folded - erfcx(a) * std::exp(-0.5 * x * x));
    } else if (b < 0.0) {  // both endpoints negative: reflect the hi factor
        const double folded = std::exp(b * b - 0.5 * x * x);
        f = 0.25 * kSqrt2Pi * erfcx(-a) *
            (2.0 * folded - erfcx(-b) * std::exp(-0.5 * x * x));
    } else {  // lo <= 0 <= hi: both erfcx arguments are nonnegative
        f = 0.25 * kSqrt2Pi * std::exp(-0.5 * x * x) * erfcx(-a) * erfcx(b);
    }
    SteinSolution s;
    s.f = f;
    s.fprime = u * f + (u <= x ? 1.0 : 0.0) - normal_cdf(x);
    return s;
}

double stein_inner(double x) {
    return (x * x - 1.0) * normal_pdf(x) / 3.0;
}

double berry_esseen_bound(std::int64_t n, double third_abs_moment,
                          BerryEsseenMode mode) {
    if (n < 1) throw precondition_error("berry_esseen_bound: n must be >= 1");
    if (!(third_abs_moment >= 1.0))
        throw precondition_error(
            "berry_esseen_bound: E|X|^3 must be >= 1 for unit-variance X");
    const double c = mode == BerryEsseenMode::proven_33 ? 33.0 : 0.4784;
    return c * third_abs_moment / std::sqrt(static_cast<double>(n));
}

double moo_bound(int d, double tau, double fourth_moment, double phi_third_norm) {
    if (d < 1) throw precondition_error("moo_bound: d must be >= 1");
    if (!(tau >= 0.0)) throw precondition_error("moo_bound: tau must be >= 0");
    if (!(fourth_moment >= 1.0))
        throw precondition_error("moo_bound: E[X^4] must be >= 1");
    if (!(phi_third_norm >= 0.0))
        throw precondition_error("moo_bound: ||phi'''|| must be >= 0");
    const double gamma = std::max(3.0, fourth_moment);
    return gamma / 3.0 * std::pow(3.0 + 2.0 * gamma, 1.5 * (d - 1)) *
           std::pow(static_cast<double>(d), 1.5) * std::sqrt(factorial(d)) *
           phi_third_norm * std::sqrt(tau);
}

double hypercontractivity_bound(int d, double fourth_moment, double second_moment) {
    if (d < 1) throw precondition_error("hypercontractivity_bound: d must be >= 1");
    if (!(fourth_moment >= 1.0))
        throw precondition_error("hypercontractivity_bound: E[X^4] must be >= 1");
    if (!(second_moment >= 0.0))
        throw precondition_error("hypercontractivity_bound: E[P^2] must be >= 0");
    return std::pow(3.0 + 2.0 * fourth_moment, 2.0 * d) * second_moment *
           second_moment;
}

ChenSolution chen_solve(const std::vector<std::int64_t>& c_set, double lambda) {
    if (!(lambda > 0.0))
        throw precondition_error("chen_solve: lambda must be positive");
    const std::int64_t K = poisson_tail_cutoff(lambda, 1e-12);
    ChenSolution sol;
    sol.lambda = lambda;
    sol.in_c.assign(static_cast<std::size_t>(K) + 1, 0);
    for (std::int64_t k : c_set) {
        if (k < 0) throw precondition_error("chen_solve: set elements must be >= 0");
        if (k <= K) sol.in_c[static_cast<std::size_t>(k)] = 1;
    }
    double pc = 0.0;
    for (std::int64_t k = 0; k <= K; ++k)
        if (sol.in_c[static_cast<std::size_t>(k)]) pc += poisson_pmf(k, lambda);
    sol.prob_c = pc;

    sol.f.assign(static_cast<std::size_t>(K) + 2, 0.0);
    auto ind = [&](std::int64_t k) -> double {
        return (k <= K && sol.in_c[static_cast<std::size_t>(k)]) ? 1.0 : 0.0;
    };

    // Below lambda: the forward recursion is contracting (coefficient k /
    // lambda <= 1) and exact.
    const std::int64_t split = std::min<std::int64_t>(K, static_cast<std::int64_t>(lambda));
    for (std::int64_t k = 0; k <= split && k <= K; ++k)
        sol.f[static_cast<std::size_t>(k) + 1] =
            (k * sol.f[static_cast<std::size_t>(k)] + ind(k) - pc) / lambda;

    // Above lambda the forward form cancels catastrophically; use the
    // equivalent tail representation
    //   f(k+1) = -(k! / lambda^(k+1)) sum_{j > k} lambda^j / j! (1_C(j) - pc),
    // whose weights w_j start at 1/(k+1) and decay by lambda/(j+1) < 1.
    for (std::int64_t k = split + 1; k <= K; ++k) {
        double w = 1.0 / static_cast<double>(k + 1);  // j = k+1 term weight
        double s = 0.0;
        std::int64_t j = k + 1;
        while (true) {
            s += w * (ind(j) - pc);
            w *= lambda / static_cast<double>(j + 1);
            ++j;
            // j > k >= lambda, so the weight ratio lambda/(j+1) < 1 and w
            // decays geometrically; stopping at 1e-22 keeps the truncation
            // far below the 1e-12 residual target.
            if (w < 1e-22 || j > K + 1000000) break;
        }
        sol.f[static_cast<std::size_t>(k) + 1] = -s;
    }
    return sol;
}

double chen_delta_bound(double lambda) {
    if (!(lambda > 0.0))
        throw precondition_error("chen_delta_bound: lambda must be positive");
    return (1.0 - std::exp(-lambda)) / lambda;
}

double chen_delta2_bound(double lambda) {
    return 2.0 / lambda * chen_delta_bound(lambda);
}

double poisson_tv_bound(std::span<const double> c, std::span<const double> mu) {
    if (c.size() != mu.size() || c.empty())
        throw precondition_error("poisson_tv_bound: c and mu must match and be nonempty");
    double lambda = 0.0, c2mu = 0.0, defect = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(mu[i] > 0.0))
            throw precondition_error("poisson_tv_bound: intensities must be positive");
        lambda += c[i] * mu[i];
        c2mu += c[i] * c[i] * mu[i];
        defect += c[i] * c[i] * std::abs(c[i] - 1.0) * mu[i];
    }
    if (!(lambda > 0.0))
        throw precondition_error("poisson_tv_bound: lambda must be positive");
    const double m = 1.0 - std::exp(-lambda);
    return m / lambda * std::abs(lambda - c2mu) + m / (lambda * lambda) * defect;
}

double poisson_wasserstein_bound(double lambda) {
    if (!(lambda > 0.0))
        throw precondition_error("poisson_wasserstein_bound: lambda must be positive");
    return 1.0 / std::sqrt(lambda);
}

}  // namespace chaoslab
