#include "chaoslab/chaos.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "chaoslab/errors.hpp"
#include "chaoslab/hermite.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/special.hpp"

namespace chaoslab {

namespace {

// Advances a non-decreasing multi-index over {0..n-1}^q; returns false once
// exhausted.
bool next_sorted_tuple(std::vector<int>& t, int n) {
    const int q = static_cast<int>(t.size());
    for (int a = q - 1; a >= 0; --a) {
        if (t[a] < n - 1) {
            const int v = t[a] + 1;
            for (int b = a; b < q; ++b) t[b] = v;
            return true;
        }
    }
    return false;
}

double hermite_small(int m, double x) {
    switch (m) {
        case 0: return 1.0;
        case 1: return x;
        case 2: return x * x - 1.0;
        case 3: return x * (x * x - 3.0);
        default: return hermite_eval(m, x);
    }
}

}  // namespace

ChaosVar make_chaos(const Kernel& f) {
    if (f.q < 1 || f.q > 4)
        throw precondition_error("make_chaos: order must lie in [1, 4]");
    ChaosVar F;
    F.f = f.is_symmetric ? f : symmetrize(f);
    F.sigma_sq = factorial(f.q) * l2_norm_sq(F.f);

    std::vector<int> t(f.q, 0);
    do {
        const double v = F.f.values[flat_index(F.f, t)];
        if (v == 0.0) continue;
        ChaosTerm term;
        term.distinct = 0;
        double mult_fact = 1.0;
        for (int a = 0; a < f.q; ++a) {
            if (term.distinct > 0 && t[a] == term.coord[term.distinct - 1]) {
                ++term.mult[term.distinct - 1];
            } else {
                term.coord[term.distinct] = t[a];
                term.mult[term.distinct] = 1;
                ++term.distinct;
            }
        }
        for (int d = 0; d < term.distinct; ++d) mult_fact *= factorial(term.mult[d]);
        term.coeff = v * factorial(f.q) / mult_fact;
        F.terms.push_back(term);
    } while (next_sorted_tuple(t, f.n));
    return F;
}

double sample_chaos(const ChaosVar& F, std::span<const double> x) {
    if (static_cast<int>(x.size()) != F.f.n)
        throw precondition_error("sample_chaos: x must have n entries");
    double s = 0.0;
    for (const ChaosTerm& term : F.terms) {
        double p = term.coeff;
        for (int d = 0; d < term.distinct; ++d)
            p *= hermite_small(term.mult[d], x[term.coord[d]]);
        s += p;
    }
    return s;
}

void gradient_eval(const ChaosVar& F, std::span<const double> x,
                   std::span<double> grad) {
    if (static_cast<int>(x.size()) != F.f.n || grad.size() != x.size())
        throw precondition_error("gradient_eval: x and grad must have n entries");
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const ChaosTerm& term : F.terms) {
        // d/dx_j applied to the product: H'_m = m H_{m-1}.
        for (int d = 0; d < term.distinct; ++d) {
            double p = term.coeff * term.mult[d] *
                       hermite_small(term.mult[d] - 1, x[term.coord[d]]);
            for (int e = 0; e < term.distinct; ++e)
                if (e != d) p *= hermite_small(term.mult[e], x[term.coord[e]]);
            grad[term.coord[d]] += p;
        }
    }
}

double second_moment_exact(const ChaosVar& F) { return F.sigma_sq; }

double kappa4_exact(const ChaosVar& F) {
    const int q = F.f.q;
    double s = 0.0;
    for (int r = 1; r <= q - 1; ++r) {
        const Kernel c = symmetrize_full(contract(F.f, F.f, r));
        const double b2 = binomial(q, r) * binomial(q, r);
        const double w = r * factorial(r) * factorial(r) * b2 * b2 *
                         factorial(2 * q - 2 * r);
        s += w * l2_norm_sq(c);
    }
    return 3.0 / q * s;
}

double gradient_variance_exact(const ChaosVar& F) {
    const int q = F.f.q;
    double s = 0.0;
    for (int r = 1; r <= q - 1; ++r) {
        const Kernel c = symmetrize_full(contract(F.f, F.f, r));
        const double rq = static_cast<double>(r) / q;
        const double b2 = binomial(q, r) * binomial(q, r);
        const double w = rq * rq * factorial(r) * factorial(r) * b2 * b2 *
                         factorial(2 * q - 2 * r);
        s += w * l2_norm_sq(c);
    }
    return s;
}

namespace {

// Depth-first enumeration of admissible contraction chains for the s-th
// cumulant.  `chain` has order `order`; `steps_left` contractions with f
// remain before the closing inner product.
double cumulant_chains(const Kernel& chain, int order, const Kernel& f, int q,
                       int steps_left, double coeff) {
    if (steps_left == 0)
        return order == q ? coeff * inner(chain, f) : 0.0;
    double acc = 0.0;
    const int rmax = std::min(q, order);
    for (int r = 1; r <= rmax; ++r) {
        const int next_order = order + q - 2 * r;
        if (next_order < 1) continue;
        // Reachability: remaining steps must be able to land exactly on q.
        const int m = steps_left - 1;
        const int deficit = next_order + m * q - q;  // total order to remove = 2 * sum r
        if (deficit < 2 * m || deficit > 2 * m * q || deficit % 2 != 0) continue;
        const double step = coeff * q * factorial(r - 1) *
                            binomial(order - 1, r - 1) * binomial(q - 1, r - 1);
        const Kernel next = symmetrize_full(contract(chain, f, r));
        acc += cumulant_chains(next, next_order, f, q, m, step);
    }
    return acc;
}

}  // namespace

double cumulant_exact(const ChaosVar& F, int s) {
    if (s < 1 || s > 8)
        throw precondition_error("cumulant_exact: s must lie in [1, 8]");
    if (s == 1) return 0.0;
    if (s == 2) return F.sigma_sq;
    const int q = F.f.q;
    const double total =
        cumulant_chains(F.f, q, F.f, q, s - 2, 1.0);
    return factorial(q) * factorial(s - 1) * total;
}

std::vector<double> spectral_cumulants_q2(const ChaosVar& F, int smax) {
    if (F.f.q != 2)
        throw precondition_error("spectral_cumulants_q2: kernel order must be 2");
    if (smax < 1 || smax > 30)
        throw precondition_error("spectral_cumulants_q2: smax must lie in [1, 30]");
    const int n = F.f.n;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A(i, j) = F.f.values[static_cast<std::size_t>(i) * n + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    std::vector<double> kappa(static_cast<std::size_t>(smax) + 1, 0.0);
    for (int s = 2; s <= smax; ++s) {
        double pw = 0.0;
        for (int i = 0; i < n; ++i) pw += std::pow(es.eigenvalues()(i), s);
        kappa[s] = std::pow(2.0, s - 1) * factorial(s - 1) * pw;
    }
    return kappa;
}

double fourth_moment_bound(const ChaosVar& F) {
    if (!(F.sigma_sq > 0.0))
        throw precondition_error("fourth_moment_bound: variance must be positive");
    const int q = F.f.q;
    if (q < 2) return 0.0;
    const double excess = kappa4_exact(F) / (F.sigma_sq * F.sigma_sq);
    return 2.0 * std::sqrt((q - 1.0) / (3.0 * q) * std::abs(excess));
}

double mehler_apply(const ChaosVar& F, std::span<const double> x, double t) {
    if (t < 0.0) throw precondition_error("mehler_apply: t must be >= 0");
    return std::exp(-F.f.q * t) * sample_chaos(F, x);
}

GaussianBatch sample_gaussian_batch(std::uint64_t seed, std::uint64_t purpose,
                                    std::size_t rows, int n, unsigned threads) {
    if (n < 1) throw precondition_error("sample_gaussian_batch: n must be >= 1");
    GaussianBatch b;
    b.rows = rows;
    b.n = n;
    b.data.assign(rows * static_cast<std::size_t>(n), 0.0);
    parallel_for(rows, threads, [&](std::size_t r) {
        PhiloxStream rng(seed, make_stream(purpose, r));
        double* out = b.data.data() + r * static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) out[i] = rng.next_normal();
    });
    return b;
}

}  // namespace chaoslab
