#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chaoslab/errors.hpp"
#include "chaoslab/hermite.hpp"
#include "chaoslab/special.hpp"

using namespace chaoslab;

TEST_CASE("low-order Hermite polynomials match their explicit forms") {
    for (double x = -3.0; x <= 3.0; x += 0.37) {
        REQUIRE(hermite_eval(0, x) == 1.0);
        REQUIRE(hermite_eval(1, x) == x);
        REQUIRE(std::abs(hermite_eval(2, x) - (x * x - 1.0)) < 1e-14);
        REQUIRE(std::abs(hermite_eval(3, x) - (x * x * x - 3.0 * x)) < 1e-13);
        REQUIRE(std::abs(hermite_eval(4, x) - (x * x * x * x - 6.0 * x * x + 3.0)) <
                1e-13);
        // Three-term recurrence as an identity.
        for (int q = 1; q <= 12; ++q)
            REQUIRE(std::abs(x * hermite_eval(q, x) - hermite_eval(q + 1, x) -
                             q * hermite_eval(q - 1, x)) <
                    1e-10 * (1.0 + std::abs(hermite_eval(q + 1, x))));
    }
    REQUIRE_THROWS_AS(hermite_eval(-1, 0.0), precondition_error);
}

TEST_CASE("low-order tchebycheff polynomials match their explicit forms") {
    for (double x = -2.0; x <= 2.0; x += 0.29) {
        REQUIRE(tchebycheff_eval(0, x) == 1.0);
        REQUIRE(tchebycheff_eval(1, x) == x);
        REQUIRE(std::abs(tchebycheff_eval(2, x) - (x * x - 1.0)) < 1e-14);
        REQUIRE(std::abs(tchebycheff_eval(3, x) - (x * x * x - 2.0 * x)) < 1e-13);
        REQUIRE(std::abs(tchebycheff_eval(4, x) - (x * x * x * x - 3.0 * x * x + 1.0)) <
                1e-13);
    }
}

TEST_CASE("tchebycheff polynomials are orthonormal under the semicircle law") {
    // Simpson integration of U_j U_k against the unit-variance semicircle
    // density on [-2, 2].
    auto dens = [](double t) {
        return std::sqrt(std::max(0.0, 4.0 - t * t)) / (2.0 * 3.141592653589793);
    };
    const int n = 400000;
    const double h = 4.0 / n;
    for (int j = 0; j <= 5; ++j)
        for (int k = j; k <= 5; ++k) {
            double s = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double x = -2.0 + i * h;
                const double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                s += c * dens(x) * tchebycheff_eval(j, x) * tchebycheff_eval(k, x);
            }
            s *= h / 3.0;
            REQUIRE(std::abs(s - (j == k ? 1.0 : 0.0)) < 1e-6);
        }
}

TEST_CASE("gauss-hermite rule reproduces normal moments and orthogonality") {
    const auto rule = gauss_hermite_rule(40);
    double mass = 0.0;
    for (const auto& [x, w] : rule) mass += w;
    REQUIRE(std::abs(mass - 1.0) < 1e-13);
    // E[N^2] = 1, E[N^4] = 3, E[N^6] = 15.
    double m2 = 0.0, m4 = 0.0, m6 = 0.0;
    for (const auto& [x, w] : rule) {
        m2 += w * x * x;
        m4 += w * x * x * x * x;
        m6 += w * std::pow(x, 6);
    }
    REQUIRE(std::abs(m2 - 1.0) < 1e-12);
    REQUIRE(std::abs(m4 - 3.0) < 1e-11);
    REQUIRE(std::abs(m6 - 15.0) < 1e-10);
    // E[H_p H_q] = delta_pq q! for p, q <= 10 (degree 20 < 2*40).
    for (int p = 0; p <= 10; ++p)
        for (int q = p; q <= 10; ++q) {
            double ip = 0.0;
            for (const auto& [x, w] : rule)
                ip += w * hermite_eval(p, x) * hermite_eval(q, x);
            const double expect = (p == q) ? factorial(q) : 0.0;
            // Cancellation noise scales with sqrt(p! q!), the natural size
            // of the summands.
            const double scale = std::sqrt(factorial(p) * factorial(q));
            REQUIRE(std::abs(ip - expect) < 2e-11 * scale + 1e-12);
        }
}

TEST_CASE("hermite_expand recovers polynomial coefficients exactly") {
    // x^2 = H_2 + H_0.
    auto sq = [](double x) { return x * x; };
    const HermiteSeries s = hermite_expand(sq, 6);
    REQUIRE(std::abs(s.a[0] - 1.0) < 1e-12);
    REQUIRE(std::abs(s.a[2] - 1.0) < 1e-12);
    for (int q : {1, 3, 4, 5, 6}) REQUIRE(std::abs(s.a[q]) < 1e-12);

    // phi = H_3 projects onto itself.
    auto h3 = [](double x) { return hermite_eval(3, x); };
    const HermiteSeries t = hermite_expand(h3, 8);
    for (int q = 0; q <= 8; ++q)
        REQUIRE(std::abs(t.a[q] - (q == 3 ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("hermite_expand of cosine matches the closed-form coefficients") {
    // E[exp(i N) H_q(N)] = i^q exp(-1/2), so for phi = cos the odd
    // coefficients vanish and a_{2k} = (-1)^k exp(-1/2) / (2k)!.
    const HermiteSeries s = hermite_expand([](double x) { return std::cos(x); }, 14);
    const double e = std::exp(-0.5);
    for (int q = 0; q <= 14; ++q) {
        const double expect = (q % 2 == 0) ? ((q / 2) % 2 ? -1.0 : 1.0) * e / factorial(q)
                                           : 0.0;
        REQUIRE(std::abs(s.a[q] - expect) < 1e-12);
    }
    // Parseval: sum q! a_q^2 = E[cos^2 N] = (1 + exp(-2)) / 2.
    REQUIRE(std::abs(l2_norm_sq(s) - 0.5 * (1.0 + std::exp(-2.0))) < 1e-12);
}

TEST_CASE("series evaluation inverts the expansion") {
    auto phi = [](double x) { return std::exp(0.3 * x) * std::cos(x); };
    const HermiteSeries s = hermite_expand(phi, 24, 80);
    for (double x = -2.0; x <= 2.0; x += 0.31)
        REQUIRE(std::abs(s.eval(x) - phi(x)) < 1e-8);
}

TEST_CASE("hermite_rank finds the first active coefficient") {
    auto h2 = [](double x) { return hermite_eval(2, x); };
    REQUIRE(hermite_rank(hermite_expand(h2, 8)) == 2);
    auto lin = [](double x) { return 3.0 * x; };
    REQUIRE(hermite_rank(hermite_expand(lin, 8)) == 1);
    auto shifted = [](double x) { return x * x; };
    REQUIRE(hermite_rank(hermite_expand(shifted, 8)) == 0);
    auto absx = [](double x) { return std::abs(x); };
    REQUIRE(hermite_rank(hermite_expand(absx, 8)) == 0);  // E|N| > 0
    HermiteSeries zero;
    zero.a = {0.0, 0.0, 0.0};
    REQUIRE(hermite_rank(zero) == -1);
}

TEST_CASE("ou_apply matches the gaussian smoothing identity for cosine") {
    // P_t cos(x) = exp(-(1 - exp(-2t))/2) cos(exp(-t) x).
    const HermiteSeries s = hermite_expand([](double x) { return std::cos(x); }, 20);
    for (double t : {0.0, 0.15, 0.6, 2.0}) {
        const HermiteSeries st = ou_apply(s, t);
        const double r = std::exp(-t);
        for (double x = -2.5; x <= 2.5; x += 0.43) {
            const double expect =
                std::exp(-0.5 * (1.0 - r * r)) * std::cos(r * x);
            REQUIRE(std::abs(st.eval(x) - expect) < 1e-10);
        }
    }
    REQUIRE_THROWS_AS(ou_apply(HermiteSeries{{1.0}}, -0.1), precondition_error);
}

TEST_CASE("expansion preconditions are enforced") {
    auto id = [](double x) { return x; };
    REQUIRE_THROWS_AS(hermite_expand(id, 31), precondition_error);
    REQUIRE_THROWS_AS(hermite_expand(id, -1), precondition_error);
    REQUIRE_THROWS_AS(gauss_hermite_rule(0), precondition_error);
}
