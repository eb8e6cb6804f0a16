#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "chaoslab/kernels.hpp"

namespace chaoslab {

// One monomial of the Wick representation of I_q(f): a sorted coordinate
// multiset with multiplicities, entering as
//   coeff * prod_d H_{mult[d]}(x[coord[d]]),
// where coeff = f~(sorted tuple) * q! / prod mult!.
struct ChaosTerm {
    double coeff = 0.0;
    std::array<int, 4> coord{};
    std::array<int, 4> mult{};
    int distinct = 0;
};

// A single Wiener-chaos component F = I_q(f~) over n independent standard
// Gaussians, with the symmetrized kernel and its Wick monomials cached.
// Orders up to q = 4 are supported.
struct ChaosVar {
    Kernel f;             // symmetrized
    double sigma_sq = 0;  // E[F^2] = q! ||f~||^2
    std::vector<ChaosTerm> terms;
};

// Builds the chaos variable, symmetrizing the kernel if necessary.
ChaosVar make_chaos(const Kernel& f);

// Pointwise evaluation F(x); x must have n entries.
double sample_chaos(const ChaosVar& F, std::span<const double> x);

// Gradient dF/dx_i at x (n entries written to grad).
void gradient_eval(const ChaosVar& F, std::span<const double> x,
                   std::span<double> grad);

// E[F^2] = q! ||f~||^2.
double second_moment_exact(const ChaosVar& F);

// Fourth cumulant E[F^4] - 3 (E[F^2])^2 via the contraction identity
// (3/q) sum_{r=1}^{q-1} r (r!)^2 C(q,r)^4 (2q-2r)! ||f~ (x)~_r f~||^2 >= 0.
double kappa4_exact(const ChaosVar& F);

// s-th cumulant (1 <= s <= 8) by exact enumeration of admissible
// contraction chains.  Intermediate chain kernels can reach order
// (j+1)q - 2j, so large n with q >= 3 may exceed the dense-storage cap,
// reported as capacity_error.
double cumulant_exact(const ChaosVar& F, int s);

// For q = 2 only: cumulants via the eigenvalues of the kernel matrix,
// kappa_s = 2^(s-1) (s-1)! sum_i lambda_i^s (s >= 2).  Returns kappa[1..smax]
// in a vector indexed by s (kappa[0] unused, kappa[1] = 0).
std::vector<double> spectral_cumulants_q2(const ChaosVar& F, int smax);

// Exact variance of the quadratic-gradient proxy:
// E[(sigma^2 - ||DF||^2 / q)^2]
//   = sum_{r=1}^{q-1} (r/q)^2 (r!)^2 C(q,r)^4 (2q-2r)! ||f~ (x)~_r f~||^2.
double gradient_variance_exact(const ChaosVar& F);

// Total-variation bound against N(0,1) for the normalized variable F/sigma:
// 2 sqrt((q-1)/(3q) * |kappa_4| / sigma^4).
double fourth_moment_bound(const ChaosVar& F);

// Ornstein-Uhlenbeck semigroup action (P_t F)(x); on a fixed chaos order
// this is exp(-q t) F(x).
double mehler_apply(const ChaosVar& F, std::span<const double> x, double t);

// R x n matrix of standard normals, one RNG stream per row, so the content
// is a pure function of (seed, purpose, row count, n).
struct GaussianBatch {
    std::size_t rows = 0;
    int n = 0;
    std::vector<double> data;  // row-major

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * static_cast<std::size_t>(n),
                static_cast<std::size_t>(n)};
    }
};

GaussianBatch sample_gaussian_batch(std::uint64_t seed, std::uint64_t purpose,
                                    std::size_t rows, int n, unsigned threads);

}  // namespace chaoslab
