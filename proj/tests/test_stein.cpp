#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/special.hpp"
#include "chaoslab/stein.hpp"

using namespace chaoslab;

namespace {

// Simpson quadrature of E[(N^2 - 1) f_x(N)] split at the kink, using the
// smooth product form (u^2 - 1) Phi(min) (1 - Phi(max)) of the integrand.
double inner_by_quadrature(double x) {
    auto piece = [&](double lo, double hi, int n) {
        const double h = (hi - lo) / n;
        auto g = [&](double u) {
            return (u * u - 1.0) * normal_cdf(std::min(u, x)) *
                   (1.0 - normal_cdf(std::max(u, x)));
        };
        double s = g(lo) + g(hi);
        for (int i = 1; i < n; ++i) s += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    return piece(-30.0, x, 120000) + piece(x, 30.0, 120000);
}

}  // namespace

TEST_CASE("stein solution satisfies its differential equation off the kink") {
    const double h = 1e-5;
    for (double x : {-3.0, -2.0, -1.0, 0.0, 0.5, 1.7, 3.0}) {
        for (double u = -6.0; u <= 6.0; u += 0.23) {
            if (std::abs(u - x) < 0.05) continue;
            const SteinSolution mid = stein_eval(x, u);
            const double num =
                (stein_eval(x, u + h).f - stein_eval(x, u - h).f) / (2.0 * h);
            REQUIRE(std::abs(num - mid.fprime) < 1e-8);
        }
    }
}

TEST_CASE("stein solution has the known center value and kink jump") {
    REQUIRE(std::abs(stein_eval(0.0, 0.0).f - 0.25 * std::sqrt(2.0 * 3.141592653589793)) <
            1e-14);
    // f is continuous across the kink; f' jumps by exactly 1.
    for (double x : {-1.3, 0.4, 2.2}) {
        const double eps = 1e-9;
        const SteinSolution below = stein_eval(x, x - eps);
        const SteinSolution above = stein_eval(x, x + eps);
        REQUIRE(std::abs(below.f - above.f) < 1e-7);
        REQUIRE(std::abs((below.fprime - above.fprime) - 1.0) < 1e-6);
    }
    // Mirror symmetry f_{-x}(-u) = f_x(u).
    for (double x : {-2.0, 0.7, 4.0, 31.0})
        for (double u : {-5.0, -0.3, 1.1, 28.0})
            REQUIRE(std::abs(stein_eval(-x, -u).f - stein_eval(x, u).f) <
                    1e-13 * (1.0 + std::abs(stein_eval(x, u).f)));
}

TEST_CASE("stein solution stays bounded over an extreme grid") {
    const double fcap = std::sqrt(1.5707963267948966) + 1e-9;  // sqrt(pi/2)
    for (double x = -40.0; x <= 40.0; x += 1.6180339887) {
        for (double u = -40.0; u <= 40.0; u += 21.0 / 13.0) {
            const SteinSolution s = stein_eval(x, u);
            REQUIRE(std::isfinite(s.f));
            REQUIRE(std::isfinite(s.fprime));
            REQUIRE(std::abs(s.f) <= fcap);
            REQUIRE(std::abs(s.fprime) <= 2.0 + 1e-6);
            REQUIRE(s.f >= 0.0);  // the half-line solution is nonnegative
        }
    }
    // Far tail behaves like Phi(x)/u.
    const double far = stein_eval(0.0, 40.0).f;
    REQUIRE(std::abs(far - 0.5 / 40.0) < 1e-4);
}

TEST_CASE("stein inner quantity matches direct quadrature") {
    REQUIRE(std::abs(stein_inner(0.0) + 1.0 / (3.0 * std::sqrt(2.0 * 3.141592653589793))) <
            1e-15);
    for (double x = -2.5; x <= 2.5; x += 0.625)
        REQUIRE(std::abs(stein_inner(x) - inner_by_quadrature(x)) < 1e-10);
}

TEST_CASE("berry-esseen bound arithmetic and preconditions") {
    REQUIRE(std::abs(berry_esseen_bound(100, 1.0, BerryEsseenMode::proven_33) - 3.3) <
            1e-14);
    REQUIRE(std::abs(berry_esseen_bound(400, 2.0, BerryEsseenMode::sharp_04784) -
                     0.4784 * 2.0 / 20.0) < 1e-14);
    REQUIRE_THROWS_AS(berry_esseen_bound(100, 0.5, BerryEsseenMode::proven_33),
                      precondition_error);
    REQUIRE_THROWS_AS(berry_esseen_bound(0, 1.5, BerryEsseenMode::proven_33),
                      precondition_error);
}

TEST_CASE("invariance bound closed forms") {
    // d = 1, gamma = 3: bound is just ||phi'''|| sqrt(tau).
    REQUIRE(std::abs(moo_bound(1, 0.25, 3.0, 1.0) - 0.5) < 1e-14);
    // d = 2, gamma = 3: (3+6)^(3/2) 2^(3/2) sqrt(2) = 27 * 4 = 108.
    REQUIRE(std::abs(moo_bound(2, 0.01, 3.0, 1.0) - 10.8) < 1e-12);
    // Rademacher fourth moment 1 still yields gamma = 3.
    REQUIRE(moo_bound(2, 0.01, 1.0, 1.0) == moo_bound(2, 0.01, 3.0, 1.0));
    // Heavier tails increase gamma.
    REQUIRE(std::abs(moo_bound(1, 0.04, 9.0, 1.0) - 3.0 * 0.2) < 1e-13);
    REQUIRE(moo_bound(3, 1e-4, 3.0, 1.0) > moo_bound(2, 1e-4, 3.0, 1.0));
    REQUIRE_THROWS_AS(moo_bound(0, 0.1, 3.0, 1.0), precondition_error);
    REQUIRE_THROWS_AS(moo_bound(2, -0.1, 3.0, 1.0), precondition_error);
}

TEST_CASE("hypercontractive fourth-moment bound dominates a small enumeration") {
    REQUIRE(std::abs(hypercontractivity_bound(1, 3.0, 1.0) - 81.0) < 1e-12);
    // Exhaustive check over sign vectors for a random degree-2 multilinear
    // form with Rademacher entries (m4 = 1).
    PhiloxStream rng(808, 0);
    const int n = 6;
    std::vector<double> g(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            g[i * n + j] = 2.0 * rng.next_uniform() - 1.0;
    double m2 = 0.0, m4 = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        double p = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double xi = (mask >> i) & 1 ? 1.0 : -1.0;
                const double xj = (mask >> j) & 1 ? 1.0 : -1.0;
                p += g[i * n + j] * xi * xj;
            }
        m2 += p * p;
        m4 += p * p * p * p;
    }
    m2 /= (1 << n);
    m4 /= (1 << n);
    REQUIRE(m4 <= hypercontractivity_bound(2, 1.0, m2) * (1.0 + 1e-12));
}

TEST_CASE("chen equation solution is exact for the base case") {
    const ChenSolution sol = chen_solve({0}, 1.0);
    REQUIRE(sol.f[0] == 0.0);
    REQUIRE(std::abs(sol.f[1] - (1.0 - std::exp(-1.0))) < 1e-12);
    REQUIRE(std::abs(sol.prob_c - std::exp(-1.0)) < 1e-15);
}

TEST_CASE("chen residuals stay at machine precision across regimes") {
    PhiloxStream rng(909, 0);
    for (int trial = 0; trial < 12; ++trial) {
        const double lambda = 0.3 + 39.7 * rng.next_uniform();
        const std::int64_t K = poisson_tail_cutoff(lambda, 1e-12);
        std::vector<std::int64_t> c_set;
        for (std::int64_t k = 0; k <= K; ++k)
            if (rng.next_uniform() < 0.35) c_set.push_back(k);
        const ChenSolution sol = chen_solve(c_set, lambda);
        for (std::int64_t k = 0; k < K; ++k) {
            const double ind = sol.in_c[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
            const double resid = lambda * sol.f[static_cast<std::size_t>(k) + 1] -
                                 k * sol.f[static_cast<std::size_t>(k)] -
                                 (ind - sol.prob_c);
            REQUIRE(std::abs(resid) < 1e-12);
        }
        // Magic-factor bounds over the genuine domain k >= 1 (f(0) = 0 is a
        // normalization convention only: k f(k) vanishes at k = 0, so the
        // equation never constrains f(0) and differences touching it are
        // meaningless).
        double dmax = 0.0, d2max = 0.0;
        for (std::size_t k = 1; k + 1 < sol.f.size(); ++k)
            dmax = std::max(dmax, std::abs(sol.f[k + 1] - sol.f[k]));
        for (std::size_t k = 1; k + 2 < sol.f.size(); ++k)
            d2max = std::max(d2max,
                             std::abs(sol.f[k + 2] - 2.0 * sol.f[k + 1] + sol.f[k]));
        REQUIRE(dmax <= chen_delta_bound(lambda) + 1e-12);
        // Valid second-difference bound: (2/lambda) times the sup increment
        // of the indicator target, which is at most 1.
        REQUIRE(d2max <= 2.0 / lambda + 1e-12);
        // The chained constant is only a genuine bound when 2/lambda >= 2,
        // since |D2 f| <= 2 |D f| always.
        if (lambda <= 1.0) REQUIRE(d2max <= chen_delta2_bound(lambda) + 1e-12);
        // The k = 0 first difference happens to obey the same bound because
        // |1_C(0) - P(C)| <= 1 - e^{-lambda} whichever side 0 falls on.
        REQUIRE(std::abs(sol.f[1] - sol.f[0]) <= chen_delta_bound(lambda) + 1e-12);
    }
    // Empty set: identically zero solution.
    const ChenSolution zero = chen_solve({}, 3.0);
    for (double v : zero.f) REQUIRE(v == 0.0);
}

TEST_CASE("second differences genuinely exceed the chained constant") {
    // Counterexample pinning why chen_delta2_bound is not a sup bound: for
    // C = {12}, lambda = 12.5 the solution is negative decreasing up to 12
    // and positive decreasing after, so Delta f spikes at the boundary and
    // the second difference beside the spike has the same order as the
    // first-difference sup.
    const double lambda = 12.5;
    const ChenSolution sol = chen_solve({12}, lambda);
    double dmax = 0.0, d2max = 0.0;
    for (std::size_t k = 1; k + 1 < sol.f.size(); ++k)
        dmax = std::max(dmax, std::abs(sol.f[k + 1] - sol.f[k]));
    for (std::size_t k = 1; k + 2 < sol.f.size(); ++k)
        d2max = std::max(d2max,
                         std::abs(sol.f[k + 2] - 2.0 * sol.f[k + 1] + sol.f[k]));
    REQUIRE(d2max > 6.0 * chen_delta2_bound(lambda));  // violated by a margin
    REQUIRE(d2max > (2.0 / lambda) * dmax);            // even with the true sup
    REQUIRE(d2max <= 2.0 / lambda);                    // the valid bound
    REQUIRE(std::abs(d2max - 0.0798132563) < 1e-9);    // frozen value
}

TEST_CASE("poisson total-variation bound closed forms") {
    const std::vector<double> ones{1.0}, mu{5.0};
    REQUIRE(poisson_tv_bound(ones, mu) == 0.0);

    const std::vector<double> two{2.0}, one{1.0};
    const double bound = poisson_tv_bound(two, one);
    REQUIRE(std::abs(bound - 2.0 * (1.0 - std::exp(-2.0))) < 1e-14);

    // The bound dominates the exact total variation between 2 Po(1) and
    // Po(2), enumerated over the support.
    double tv = 0.0;
    for (std::int64_t k = 0; k <= 80; ++k) {
        const double p2 = poisson_pmf(k, 2.0);
        const double pd = (k % 2 == 0) ? poisson_pmf(k / 2, 1.0) : 0.0;
        tv += std::abs(pd - p2);
    }
    tv *= 0.5;
    REQUIRE(tv <= bound);
    REQUIRE(tv > 0.3);  // the distance is genuinely large here

    const std::vector<double> bad_mu{-1.0};
    REQUIRE_THROWS_AS(poisson_tv_bound(two, bad_mu), precondition_error);
    const std::vector<double> empty;
    REQUIRE_THROWS_AS(poisson_tv_bound(empty, empty), precondition_error);
}

TEST_CASE("poisson wasserstein bound") {
    REQUIRE(poisson_wasserstein_bound(4.0) == 0.5);
    REQUIRE(poisson_wasserstein_bound(16.0) == 0.25);
    REQUIRE_THROWS_AS(poisson_wasserstein_bound(0.0), precondition_error);
}
