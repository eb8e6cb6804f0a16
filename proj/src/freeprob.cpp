#include "chaoslab/freeprob.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/special.hpp"
#include "chaoslab/summation.hpp"

namespace chaoslab {

namespace {

// Depth-first walk over admissible contraction chains.  `acc` is the chain
// prefix (order o), `steps_left` the number of copies of f still to be
// contracted in.  A branch r is admissible when r <= min(q, o) and the
// resulting order o + q - 2r can still be brought to zero by the remaining
// steps (at most q of order is shed per step).  Leaves are emitted in
// lexicographic (r_1, r_2, ...) order, so the summation order is
// deterministic.
void chain_dfs(const Kernel& f, const Kernel& acc, int steps_left,
               std::vector<double>& leaves) {
    if (steps_left == 0) {
        if (acc.q == 0) {
            leaves.push_back(acc.values[0]);
        }
        return;
    }
    const int q = f.q;
    const int o = acc.q;
    const int reachable = (steps_left - 1) * q;
    // Smallest r keeping the new order o + q - 2r within reach of zero;
    // parity is fixed at the root, so the division below is exact on every
    // admissible branch.
    const int r_lo = std::max(0, (o + q - reachable + 1) / 2);
    const int r_hi = std::min(q, o);
    for (int r = r_lo; r <= r_hi; ++r) {
        chain_dfs(f, free_contract(acc, f, r), steps_left - 1, leaves);
    }
}

// Chain counting by the same walk, without materializing kernels.
void count_dfs(int q, int o, int steps_left, std::int64_t& count) {
    if (steps_left == 0) {
        if (o == 0) ++count;
        return;
    }
    const int reachable = (steps_left - 1) * q;
    const int r_lo = std::max(0, (o + q - reachable + 1) / 2);
    const int r_hi = std::min(q, o);
    for (int r = r_lo; r <= r_hi; ++r) {
        count_dfs(q, o + q - 2 * r, steps_left - 1, count);
    }
}

void check_moment_caps(int q, int k) {
    if (k < 1) {
        throw precondition_error("free moment: power must be >= 1");
    }
    if (k > 10) {
        throw precondition_error("free moment: power exceeds enumeration cap 10");
    }
    if (q < 0 || q > 3) {
        throw precondition_error("free moment: order exceeds enumeration cap 3");
    }
}

}  // namespace

FreeChaosVar::FreeChaosVar(Kernel kernel) : kernel_(std::move(kernel)) {
    const Kernel mirrored = mirror_adjoint(kernel_);
    for (std::size_t i = 0; i < kernel_.values.size(); ++i) {
        if (!(kernel_.values[i] == mirrored.values[i])) {
            throw precondition_error(
                "FreeChaosVar: kernel is not mirror-symmetric");
        }
    }
}

double FreeChaosVar::second_moment() const { return l2_norm_sq(kernel_); }

std::int64_t catalan(int k) {
    if (k < 0) {
        throw precondition_error("catalan: k must be >= 0");
    }
    if (k > 30) {
        throw precondition_error("catalan: k exceeds exact integer cap 30");
    }
    std::int64_t c = 1;
    for (int i = 0; i < k; ++i) {
        // C_{i+1} = C_i * 2(2i+1) / (i+2); the division is exact.
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    return c;
}

double semicircular_moment(double m, double sigma2, int k) {
    if (!(sigma2 > 0.0)) {
        throw precondition_error("semicircular_moment: variance must be > 0");
    }
    if (k < 0 || k > 60) {
        throw precondition_error("semicircular_moment: k outside [0, 60]");
    }
    auto centered = [&](int j) {
        if (j % 2 != 0) return 0.0;
        return static_cast<double>(catalan(j / 2)) *
               std::pow(sigma2, static_cast<double>(j) / 2.0);
    };
    if (m == 0.0) {
        return centered(k);
    }
    double raw = 0.0;
    for (int j = 0; j <= k; ++j) {
        raw += binomial(k, j) * std::pow(m, static_cast<double>(k - j)) *
               centered(j);
    }
    return raw;
}

EmpiricalSample semicircular_sample(double m, double sigma2, std::size_t reps,
                                    std::uint64_t seed) {
    if (!(sigma2 > 0.0)) {
        throw precondition_error("semicircular_sample: variance must be > 0");
    }
    if (reps == 0) {
        throw precondition_error("semicircular_sample: need at least one draw");
    }
    const double sigma = std::sqrt(sigma2);
    PhiloxStream rng(seed, 0);
    std::vector<double> xs(reps);
    for (auto& v : xs) {
        v = m + sigma * semicircle_quantile(rng.next_uniform());
    }
    return EmpiricalSample(std::move(xs));
}

double free_moment(const FreeChaosVar& F, int k) {
    const Kernel& f = F.kernel();
    check_moment_caps(f.q, k);
    if (k == 1) {
        return f.q == 0 ? f.values[0] : 0.0;
    }
    if ((static_cast<std::int64_t>(k) * f.q) % 2 != 0) {
        return 0.0;  // no chain can close an odd total order
    }
    std::vector<double> leaves;
    chain_dfs(f, f, k - 1, leaves);
    if (leaves.empty()) {
        return 0.0;
    }
    return pairwise_sum_indexed(0, leaves.size(),
                                [&](std::size_t i) { return leaves[i]; });
}

std::int64_t free_chain_count(int q, int k) {
    check_moment_caps(q, k);
    if (k == 1) {
        return q == 0 ? 1 : 0;
    }
    if ((static_cast<std::int64_t>(k) * q) % 2 != 0) {
        return 0;
    }
    std::int64_t count = 0;
    count_dfs(q, q, k - 1, count);
    return count;
}

double free_fourth(const FreeChaosVar& F) {
    const Kernel& f = F.kernel();
    const double norm_sq = l2_norm_sq(f);
    double middle = 0.0;
    for (int r = 1; r < f.q; ++r) {
        middle += l2_norm_sq(free_contract(f, f, r));
    }
    return 2.0 * norm_sq * norm_sq + middle;
}

TransferReport transfer_check(const std::vector<Kernel>& kernels, int q) {
    if (q < 1 || q > 4) {
        throw precondition_error("transfer_check: order must lie in [1, 4]");
    }
    if (kernels.empty()) {
        throw precondition_error("transfer_check: empty kernel sequence");
    }
    TransferReport report;
    report.rows.reserve(kernels.size());
    for (const Kernel& raw : kernels) {
        if (raw.q != q) {
            throw precondition_error("transfer_check: kernel order mismatch");
        }
        Kernel probe = raw;
        recompute_flags(probe);
        if (!probe.is_symmetric) {
            throw precondition_error("transfer_check: kernel not symmetric");
        }
        // Scrub representation roundoff so the mirror-symmetry check in
        // FreeChaosVar sees exactly equal entries.
        const Kernel f = symmetrize(raw);
        const double norm_sq = l2_norm_sq(f);

        TransferRow row;
        row.classical_variance = factorial(q) * norm_sq;
        row.free_variance = norm_sq;
        row.classical_kappa4 = kappa4_exact(make_chaos(f));
        row.free_excess =
            free_fourth(FreeChaosVar(f)) - 2.0 * norm_sq * norm_sq;
        for (int r = 1; r < q; ++r) {
            row.max_contraction_norm =
                std::max(row.max_contraction_norm,
                         std::sqrt(l2_norm_sq(contract(f, f, r))));
        }
        report.rows.push_back(row);
    }

    auto normalized_gap = [](double gap, double variance) {
        return variance > 0.0 ? gap / (variance * variance) : 0.0;
    };
    if (report.rows.size() >= 2) {
        const TransferRow& first = report.rows.front();
        const TransferRow& last = report.rows.back();
        const double cg0 =
            normalized_gap(first.classical_kappa4, first.classical_variance);
        const double cg1 =
            normalized_gap(last.classical_kappa4, last.classical_variance);
        const double fg0 =
            normalized_gap(first.free_excess, first.free_variance);
        const double fg1 = normalized_gap(last.free_excess, last.free_variance);
        report.both_excesses_vanish =
            cg1 <= 0.1 * cg0 + 1e-15 && fg1 <= 0.1 * fg0 + 1e-15;
    }
    return report;
}

}  // namespace chaoslab
