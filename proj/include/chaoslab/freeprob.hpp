#pragma once

#include <cstdint>
#include <vector>

#include "chaoslab/distances.hpp"
#include "chaoslab/kernels.hpp"

namespace chaoslab {

// A self-adjoint Wigner-integral variable.  The kernel must equal its
// mirror adjoint exactly (entrywise), which is what makes the integral a
// genuine random variable; its second moment is ||f||^2 — no q! factor,
// unlike the classical isometry.
class FreeChaosVar {
  public:
    explicit FreeChaosVar(Kernel kernel);
    const Kernel& kernel() const { return kernel_; }
    int order() const { return kernel_.q; }
    double second_moment() const;

  private:
    Kernel kernel_;
};

// Catalan number C_k = binom(2k, k) / (k + 1), exact for 0 <= k <= 30.
std::int64_t catalan(int k);

// Raw k-th moment of the semicircular law with mean m and variance sigma2:
// centered odd moments vanish, centered even moments are C_{k/2} sigma^k,
// and raw moments follow by the binomial shift around the mean.
double semicircular_moment(double m, double sigma2, int k);

// R inverse-CDF draws of the semicircular law (support [m-2s, m+2s]).
EmpiricalSample semicircular_sample(double m, double sigma2, std::size_t reps,
                                    std::uint64_t seed);

// phi(F^k): the sum over admissible contraction chains
// (..((f ~_{r1} f) ~_{r2} f)..) ~_{r_{k-1}} f whose running order stays
// within reach of zero and ends at zero.  Caps: 1 <= k <= 10, order <= 3.
double free_moment(const FreeChaosVar& F, int k);

// Number of admissible chains for the given order and power (kernel
// independent).  For order 1 and even k this is the Catalan number C_{k/2}.
std::int64_t free_chain_count(int q, int k);

// phi(F^4) = 2 ||f||^4 + sum_{r=1}^{q-1} ||f ~_r f||^2.
double free_fourth(const FreeChaosVar& F);

// Classical-vs-free fourth-moment diagnostics for one kernel.
struct TransferRow {
    double classical_variance = 0.0;    // q! ||f||^2
    double free_variance = 0.0;         // ||f||^2
    double classical_kappa4 = 0.0;      // fourth cumulant of the chaos var
    double free_excess = 0.0;           // free_fourth - 2 ||f||^4
    double max_contraction_norm = 0.0;  // max_{1<=r<q} ||f (x)_r f||
};

struct TransferReport {
    std::vector<TransferRow> rows;
    // True when the sequence shows both normalized fourth-moment gaps
    // (classical kappa4 / variance^2 and free excess / variance^2)
    // decaying together: the final row at or below one tenth of the first,
    // for both sides.  A single-kernel "sequence" never sets this.
    bool both_excesses_vanish = false;
};

// Runs the diagnostics above on a sequence of symmetric kernels of common
// order q; symmetric kernels are automatically mirror-symmetric, so both
// the classical and the free side are well defined.
TransferReport transfer_check(const std::vector<Kernel>& kernels, int q);

}  // namespace chaoslab
