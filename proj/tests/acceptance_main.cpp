// Acceptance suite: sixteen numbered criteria, one per invocation
// (--criterion k), each printing its sub-checks and one final
// "criterion k (<name>): PASS|FAIL" line.  Exit code 0 iff the criterion
// passed.  Seeds are pinned so every run is bit-reproducible; tolerances
// are pinned in the code below.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/distances.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/experiments.hpp"
#include "chaoslab/freeprob.hpp"
#include "chaoslab/gaussproc.hpp"
#include "chaoslab/hermite.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/report.hpp"
#include "chaoslab/special.hpp"
#include "chaoslab/stats.hpp"
#include "chaoslab/stein.hpp"

using namespace chaoslab;

namespace {

// ------------------------------------------------------------- utilities

struct Checker {
    bool all_ok = true;
    void note(bool ok, const std::string& what) {
        std::printf("  [%s] %s\n", ok ? "ok  " : "FAIL", what.c_str());
        if (!ok) all_ok = false;
    }
    void info(const std::string& what) {
        std::printf("  [note] %s\n", what.c_str());
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double req_exact(const ExperimentReport& r, const std::string& k) {
    for (const auto& [key, v] : r.exact)
        if (key == k) return v;
    throw std::runtime_error("missing exact: " + k);
}
Estimate req_estimate(const ExperimentReport& r, const std::string& k) {
    for (const auto& [key, e] : r.estimates)
        if (key == k) return e;
    throw std::runtime_error("missing estimate: " + k);
}
double req_distance(const ExperimentReport& r, const std::string& k) {
    for (const auto& [key, v] : r.distances)
        if (key == k) return v;
    throw std::runtime_error("missing distance: " + k);
}
bool req_flag(const ExperimentReport& r, const std::string& k) {
    for (const auto& [key, v] : r.pass_flags)
        if (key == k) return v;
    throw std::runtime_error("missing flag: " + k);
}

void set_entry(Kernel& k, std::initializer_list<int> idx, double v) {
    std::vector<int> ii(idx);
    k.values[flat_index(k, std::span<const int>(ii.data(), ii.size()))] = v;
}

// Random kernel with entries uniform on [-1,1], then symmetrized.
Kernel random_symmetric_kernel(int q, int n, std::uint64_t seed,
                               std::uint64_t stream) {
    PhiloxStream g(seed, stream);
    Kernel k = make_kernel(q, n);
    for (double& v : k.values) v = 2.0 * g.next_uniform() - 1.0;
    symmetrize(k);
    recompute_flags(k);
    return k;
}

unsigned acc_threads() { return default_threads(); }

// ------------------------------------------------------------ criterion 1

bool crit01() {
    Checker c;
    const std::uint64_t seed = 9001;
    const std::size_t reps = 1000000;
    double worst_rel = 0.0;
    double worst_z = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int n = 2 + (i % 5);
        const Kernel k = random_symmetric_kernel(
            2, n, seed, make_stream(300, static_cast<std::uint64_t>(i)));
        const ChaosVar F = make_chaos(k);
        const std::vector<double> spec = spectral_cumulants_q2(F, 6);
        for (int s = 2; s <= 6; ++s) {
            const double a = cumulant_exact(F, s);
            const double b = spec[static_cast<std::size_t>(s)];
            const double rel =
                std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
            worst_rel = std::max(worst_rel, rel);
        }
        // Monte Carlo cross-check of kappa_1..kappa_4 on every kernel.
        std::vector<double> vals(reps);
        parallel_for(reps, acc_threads(), [&](std::size_t r) {
            PhiloxStream gen(seed, make_stream(310 + static_cast<std::uint64_t>(i), r));
            std::array<double, 6> x{};
            for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = gen.next_normal();
            vals[r] = sample_chaos(
                F, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
        });
        const Estimate m = mean_with_se(vals, 100);
        const Estimate c2 = batch_means(vals, 100, [](std::span<const double> v) {
            return sample_cumulants(v).k2;
        });
        const Estimate c3 = batch_means(vals, 100, [](std::span<const double> v) {
            return sample_cumulants(v).k3;
        });
        const Estimate c4 = batch_means(vals, 100, [](std::span<const double> v) {
            return sample_cumulants(v).k4;
        });
        const Estimate est[4] = {m, c2, c3, c4};
        const double exact[4] = {0.0, cumulant_exact(F, 2), cumulant_exact(F, 3),
                                 cumulant_exact(F, 4)};
        for (int s = 0; s < 4; ++s)
            worst_z = std::max(worst_z,
                               std::abs(est[s].value - exact[s]) /
                                   std::max(est[s].se, 1e-300));
    }
    c.note(worst_rel <= 1e-9,
           fmt("enumeration vs spectral route, s in 2..6 on 50 kernels: worst "
               "relative gap %.3e (tolerance 1e-9)",
               worst_rel));
    c.note(worst_z <= 5.0,
           fmt("sampled kappa_1..kappa_4 at R=10^6 on all 50 kernels: worst "
               "|z| = %.2f (tolerance 5 SE)",
               worst_z));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 2

bool crit02() {
    Checker c;
    const std::uint64_t seed = 9002;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + (i % 7);
        PhiloxStream g(seed, make_stream(300, static_cast<std::uint64_t>(i)));
        std::vector<double> A(static_cast<std::size_t>(n) * n);
        for (int r = 0; r < n; ++r)
            for (int s = r; s < n; ++s) {
                const double v = 2.0 * g.next_uniform() - 1.0;
                A[static_cast<std::size_t>(r) * n + s] = v;
                A[static_cast<std::size_t>(s) * n + r] = v;
            }
        // tr(A^4) = ||A^2||_F^2 for symmetric A, computed independently.
        std::vector<double> B(static_cast<std::size_t>(n) * n, 0.0);
        for (int r = 0; r < n; ++r)
            for (int t = 0; t < n; ++t) {
                double acc = 0.0;
                for (int u = 0; u < n; ++u)
                    acc += A[static_cast<std::size_t>(r) * n + u] *
                           A[static_cast<std::size_t>(u) * n + t];
                B[static_cast<std::size_t>(r) * n + t] = acc;
            }
        double tr4 = 0.0;
        for (double v : B) tr4 += v * v;

        Kernel k = make_kernel(2, n);
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s)
                set_entry(k, {r, s}, A[static_cast<std::size_t>(r) * n + s]);
        recompute_flags(k);
        const ChaosVar F = make_chaos(k);
        const double lhs = 8.0 * tr4;
        const double rhs = gradient_variance_exact(F);
        worst = std::max(worst,
                         std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    c.note(worst <= 1e-10,
           fmt("8 tr(A^4) vs the gradient-variance oracle on 100 random "
               "symmetric matrices (n up to 8): worst relative gap %.3e "
               "(tolerance 1e-10)",
               worst));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 3

bool crit03() {
    Checker c;
    const std::uint64_t seed = 9003;
    double worst_kappa4 = std::numeric_limits<double>::infinity();
    bool nonneg = true;
    for (int i = 0; i < 100; ++i) {
        const int q = 2 + (i % 2);
        const int n = 2 + (i % 5);
        const Kernel k = random_symmetric_kernel(
            q, n, seed, make_stream(300, static_cast<std::uint64_t>(i)));
        const ChaosVar F = make_chaos(k);
        const double sigma_sq = cumulant_exact(F, 2);
        const double kappa4 = kappa4_exact(F);
        const double floor = -1e-12 * std::max(1.0, sigma_sq * sigma_sq);
        if (kappa4 < floor) nonneg = false;
        worst_kappa4 = std::min(worst_kappa4, kappa4);
    }
    c.note(nonneg,
           fmt("kappa_4 >= 0 with exact quantities on 100 random kernels, "
               "q in {2,3}: smallest kappa_4 = %.6e",
               worst_kappa4));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 4

bool crit04() {
    Checker c;
    const std::uint64_t seed = 9004;
    HermiteSeries phi;
    phi.a = {0.0, 0.0, 1.0};
    const ExperimentReport r1 =
        breuer_major_run(phi, CovSeq::fbm(0.3), 16384, 2000, seed,
                         acc_threads(), 100000);
    const ExperimentReport r2 =
        breuer_major_run(phi, CovSeq::fbm(0.3), 16384, 2000, seed,
                         acc_threads(), 200000);
    const double dk = req_distance(r1, "kolmogorov_to_limit");
    const double s1 = req_exact(r1, "sigma_sq");
    const double s2 = req_exact(r2, "sigma_sq");
    c.note(dk <= 0.05,
           fmt("Kolmogorov distance to N(0, sigma^2) at H=0.3, n=2^14, "
               "R=2000: %.4f (tolerance 0.05)",
               dk));
    c.note(std::abs(s1 - s2) <= 1e-6,
           fmt("sigma^2 stability under doubling the truncation window "
               "10^5 -> 2*10^5: |%.10f - %.10f| = %.3e (tolerance 1e-6)",
               s1, s2, std::abs(s1 - s2)));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 5

bool crit05() {
    Checker c;
    const std::uint64_t seed = 9005;
    for (const double H : {0.3, 0.5, 0.7}) {
        const ExperimentReport r = qv_hurst_run(H, 16384, 500, seed,
                                                acc_threads());
        double mae = 0.0;  // table columns: replicate, s_n, h_hat, f_n
        for (const auto& row : r.table.rows) mae += std::abs(row[2] - H);
        mae /= static_cast<double>(r.table.rows.size());
        c.note(mae <= 0.01,
               fmt("H=%.1f: mean |H_hat - H| = %.5f (tolerance 0.01)", H, mae));
        const double sv = req_estimate(r, "scaled_hhat_variance").value;
        const double cv = req_exact(r, "hhat_asymptotic_variance");
        const bool within = std::abs(sv / cv - 1.0) <= 0.25;
        c.note(within && req_flag(r, "hhat_variance_within_25pct"),
               fmt("H=%.1f: Var(sqrt(n) log n (H_hat - H)) = %.4f vs "
                   "(1/2) sum rho^2 = %.4f, ratio %.3f (tolerance 25%%)",
                   H, sv, cv, sv / cv));
    }
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 6

bool crit06() {
    Checker c;
    const std::uint64_t seed = 9006;
    std::vector<double> dks;
    std::string shown;
    for (int n = 256; n <= 8192; n *= 2) {
        const ExperimentReport r = qv_hurst_run(0.3, n, 10000, seed,
                                                acc_threads());
        dks.push_back(req_distance(r, "kolmogorov_fn"));
        shown += fmt(" %.5f", dks.back());
    }
    double lg = 0.0;
    for (std::size_t i = 1; i < dks.size(); ++i)
        lg += std::log(dks[i] / dks[i - 1]);
    const double geo = std::exp(lg / static_cast<double>(dks.size() - 1));
    c.info("d_Kol at n = 256..8192:" + shown);
    c.note(geo >= 0.55 && geo <= 0.90,
           fmt("geometric-mean ratio d_Kol(2n)/d_Kol(n) = %.4f (window "
               "[0.55, 0.90], n^{-1/2} gives 0.707)",
               geo));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 7

bool crit07() {
    Checker c;
    const double f_cap = std::sqrt(1.5707963267948966);
    const auto inner_by_quadrature = [](double x) {
        const auto piece = [&](double lo, double hi, int n) {
            const double h = (hi - lo) / n;
            const auto g = [&](double u) {
                return (u * u - 1.0) * normal_cdf(std::min(u, x)) *
                       (1.0 - normal_cdf(std::max(u, x)));
            };
            double s = g(lo) + g(hi);
            for (int i = 1; i < n; ++i)
                s += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
            return s * h / 3.0;
        };
        return piece(-30.0, x, 120000) + piece(x, 30.0, 120000);
    };

    double worst_res = 0.0, worst_f = 0.0, worst_fp = 0.0, worst_inner = 0.0;
    for (int ix = 0; ix < 41; ++ix) {
        const double x = -4.0 + 8.0 * ix / 40.0;
        const double h = 1e-5;
        for (double u = -8.0; u <= 8.0 + 1e-12; u += 1.0 / 64.0) {
            const SteinSolution s = stein_eval(x, u);
            worst_f = std::max(worst_f, std::abs(s.f));
            worst_fp = std::max(worst_fp, std::abs(s.fprime));
            if (std::abs(u - x) < 0.05) continue;
            const double num =
                (stein_eval(x, u + h).f - stein_eval(x, u - h).f) / (2.0 * h);
            worst_res = std::max(worst_res, std::abs(num - s.fprime));
        }
        for (double u : {x - 1e-9, x, x + 1e-9}) {
            const SteinSolution s = stein_eval(x, u);
            worst_f = std::max(worst_f, std::abs(s.f));
            worst_fp = std::max(worst_fp, std::abs(s.fprime));
        }
        for (double u = -40.0; u <= 40.0 + 1e-12; u += 0.25) {
            const SteinSolution s = stein_eval(x, u);
            worst_f = std::max(worst_f, std::abs(s.f));
            worst_fp = std::max(worst_fp, std::abs(s.fprime));
        }
        worst_inner = std::max(
            worst_inner, std::abs(stein_inner(x) - inner_by_quadrature(x)));
    }
    c.note(worst_res <= 1e-8,
           fmt("differential-equation residual off the kink: worst %.3e "
               "(tolerance 1e-8)",
               worst_res));
    c.note(worst_f <= f_cap + 1e-9,
           fmt("sup |f_x| = %.9f vs sqrt(pi/2) = %.9f (+1e-9)", worst_f, f_cap));
    c.note(worst_fp <= 2.0 + 1e-6,
           fmt("sup |f_x'| = %.9f vs 2 (+1e-6)", worst_fp));
    c.note(worst_inner <= 1e-10,
           fmt("closed-form inner product vs Simpson quadrature on 41 "
               "x-values: worst gap %.3e (tolerance 1e-10)",
               worst_inner));
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 8

bool crit08() {
    Checker c;
    const std::uint64_t seed = 9008;
    const std::int64_t reps = 100000;
    for (const std::int64_t n : {100, 400, 1600}) {
        const ExperimentReport r = clt_run("rademacher", n, reps, seed,
                                           acc_threads());
        const double dk = req_distance(r, "kolmogorov");
        const double bound = 0.4784 * 1.0 / std::sqrt(static_cast<double>(n));
        const double mc = 0.5 / std::sqrt(static_cast<double>(reps));
        c.note(dk <= bound + 3.0 * mc && req_flag(r, "dominated_sharp"),
               fmt("n=%lld: d_Kol = %.5f vs 0.4784 E|X|^3/sqrt(n) + 3 MC = "
                   "%.5f + %.5f",
                   static_cast<long long>(n), dk, bound, 3.0 * mc));
    }
    return c.all_ok;
}

// ------------------------------------------------------------ criterion 9

bool crit09() {
    Checker c;
    const std::uint64_t seed = 9009;
    double worst_res = 0.0;
    double worst_d1_excess = -std::numeric_limits<double>::infinity();
    double worst_d2_excess = -std::numeric_limits<double>::infinity();
    double worst_d2_corrected = -std::numeric_limits<double>::infinity();
    double bad_lambda = 0.0, bad_d2 = 0.0, bad_bound = 0.0;
    std::size_t bad_csize = 0;
    for (int i = 0; i < 100; ++i) {
        PhiloxStream g(seed, make_stream(300, static_cast<std::uint64_t>(i)));
        const double lambda =
            0.3 * std::pow(40.0 / 0.3, g.next_uniform());  // log-uniform
        const std::int64_t cutoff = poisson_tail_cutoff(lambda, 1e-12);
        std::vector<std::int64_t> c_set;
        for (std::int64_t k = 0; k <= cutoff; ++k)
            if (g.next_uniform() < 0.5) c_set.push_back(k);
        const ChenSolution sol = chen_solve(c_set, lambda);
        const std::size_t K = sol.in_c.size();  // f has K+2 entries: 0..K+1
        double res = 0.0, d1 = 0.0, d2 = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double lhs = lambda * sol.f[k + 1] -
                               static_cast<double>(k) * sol.f[k];
            const double rhs =
                (sol.in_c[k] ? 1.0 : 0.0) - sol.prob_c;
            res = std::max(res, std::abs(lhs - rhs));
            d1 = std::max(d1, std::abs(sol.f[k + 1] - sol.f[k]));
            if (k + 2 < sol.f.size())
                d2 = std::max(d2, std::abs(sol.f[k + 2] - 2.0 * sol.f[k + 1] +
                                           sol.f[k]));
        }
        worst_res = std::max(worst_res, res);
        const double b1 = chen_delta_bound(lambda);
        const double b2 = chen_delta2_bound(lambda);
        worst_d1_excess = std::max(worst_d1_excess, d1 - b1);
        if (d2 - b2 > worst_d2_excess) {
            worst_d2_excess = d2 - b2;
            bad_lambda = lambda;
            bad_d2 = d2;
            bad_bound = b2;
            bad_csize = c_set.size();
        }
        worst_d2_corrected =
            std::max(worst_d2_corrected, d2 - 2.0 / lambda);
    }
    c.note(worst_res <= 1e-12,
           fmt("functional-equation residual on 100 random (C, lambda): "
               "worst %.3e (tolerance 1e-12)",
               worst_res));
    c.note(worst_d1_excess <= 1e-12,
           fmt("first-difference bound ||Df|| <= (1-e^-lambda)/lambda: worst "
               "excess %.3e",
               worst_d1_excess));
    const bool d2_ok = worst_d2_excess <= 1e-12;
    c.note(d2_ok,
           fmt("second-difference bound ||D^2 f|| <= (2/lambda)(1-e^-lambda)"
               "/lambda: worst excess %.3e",
               worst_d2_excess));
    if (!d2_ok) {
        c.info(fmt("counterexample: lambda = %.4f, |C| = %zu, ||D^2 f|| = "
                   "%.6f > stated bound %.6f",
                   bad_lambda, bad_csize, bad_d2, bad_bound));
        c.info(fmt("the stated second-difference constant is too small for "
                   "lambda > 2; the same data satisfy ||D^2 f|| <= 2/lambda "
                   "(worst excess %.3e), so the solver is sound and the "
                   "stated lemma constant itself is unattainable",
                   worst_d2_corrected));
    }
    const ChenSolution s0 = chen_solve({0}, 1.0);
    const double f1 = s0.f[1];
    const double want = 1.0 - std::exp(-1.0);
    c.note(std::abs(f1 - want) <= 1e-12,
           fmt("f_{{0}}(1) at lambda=1: %.15f vs 1 - e^-1 = %.15f "
               "(tolerance 1e-12)",
               f1, want));
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 10

bool crit10() {
    Checker c;
    const std::uint64_t seed = 9010;
    const std::size_t reps = 100000;

    const std::vector<double> one_c = {1.0}, one_mu = {1.0};
    const double tv_id = poisson_tv_bound(one_c, one_mu);
    c.note(tv_id == 0.0,
           fmt("poisson_tv_bound(eta(B)) = %.17g (must be exactly 0)", tv_id));

    const std::vector<double> two_c = {2.0}, two_mu = {1.0};
    const double tv_bound = poisson_tv_bound(two_c, two_mu);
    const std::int64_t hi =
        std::max(poisson_tail_cutoff(2.0, 1e-16) + 2,
                 2 * poisson_tail_cutoff(1.0, 1e-16) + 2);
    double acc = 0.0;
    for (std::int64_t i = 0; i <= hi; ++i) {
        const double p_scaled = (i % 2 == 0) ? poisson_pmf(i / 2, 1.0) : 0.0;
        acc += std::abs(p_scaled - poisson_pmf(i, 2.0));
    }
    const double tv_enum = 0.5 * acc;
    c.note(tv_bound >= tv_enum - 1e-12,
           fmt("bound for F = 2 eta(B), mu(B)=1: %.6f >= enumerated "
               "d_TV(2 Po(1), Po(2)) = %.6f",
               tv_bound, tv_enum));

    std::size_t il = 0;
    for (const double lam : {4.0, 16.0, 64.0}) {
        std::vector<double> vals(reps);
        const double scale = 1.0 / std::sqrt(lam);
        parallel_for(reps, acc_threads(), [&](std::size_t r) {
            PhiloxStream gen(seed, make_stream(320 + il, r));
            vals[r] =
                (static_cast<double>(poisson_draw(lam, gen)) - lam) * scale;
        });
        const EmpiricalSample s(std::move(vals));
        const double w1 =
            wasserstein1(s, [](double u) { return normal_quantile(u); });
        const double bound = poisson_wasserstein_bound(lam);
        const double mc = 1.0 / std::sqrt(static_cast<double>(reps));
        c.note(w1 <= bound + 3.0 * mc,
               fmt("lambda=%g: d_W(standardized Po, N(0,1)) = %.5f vs "
                   "1/sqrt(lambda) + 3 MC = %.5f + %.5f",
                   lam, w1, bound, 3.0 * mc));
        ++il;
    }
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 11

bool crit11() {
    Checker c;
    const std::uint64_t seed = 9011;
    const std::size_t m = 10000;  // kernel size n = m + 1 index values
    const std::size_t reps = 100000;

    // First-row counterexample kernel evaluated through its product form
    // Q_2 = X_0 * (X_1 + ... + X_m)/sqrt(m) (the dense kernel at n = 10^4
    // would need gigabytes; the product form is the same random variable).
    const auto fourth_moment_of = [&](bool gaussian, std::uint64_t purpose) {
        std::vector<double> f4(reps);
        parallel_for(reps, acc_threads(), [&](std::size_t r) {
            PhiloxStream gen(seed, make_stream(purpose, r));
            const auto draw = [&]() {
                return gaussian ? gen.next_normal()
                                : (gen.next_uniform() < 0.5 ? -1.0 : 1.0);
            };
            const double x0 = draw();
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += draw();
            const double q = x0 * s / std::sqrt(static_cast<double>(m));
            f4[r] = q * q * q * q;
        });
        return mean_with_se(f4, 100);
    };
    const Estimate m4g = fourth_moment_of(true, 330);
    const Estimate m4r = fourth_moment_of(false, 331);
    c.note(std::abs(m4g.value - 9.0) <= 5.0 * m4g.se,
           fmt("E Q_2(g, Gaussian)^4 = %.4f (se %.4f) within 5 SE of 9",
               m4g.value, m4g.se));
    c.note(std::abs(m4r.value - 3.0) <= 5.0 * m4r.se,
           fmt("E Q_2(g, Rademacher)^4 = %.4f (se %.4f) within 5 SE of 3",
               m4r.value, m4r.se));
    c.info(fmt("observed fourth-moment gap %.3f: the same kernel is "
               "asymptotically normal for Rademacher inputs but not for "
               "Gaussian ones",
               std::abs(m4g.value - m4r.value)));

    // Invariance bound dominates the smooth-function gap on 20 random
    // admissible (symmetric, off-diagonal, unit-variance) kernels.
    bool all_moo = true;
    for (int i = 0; i < 20; ++i) {
        const int n = 4 + (i % 5);
        PhiloxStream g(seed, make_stream(340, static_cast<std::uint64_t>(i)));
        Kernel k = make_kernel(2, n);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                const double v = 2.0 * g.next_uniform() - 1.0;
                set_entry(k, {a, b}, v);
                set_entry(k, {b, a}, v);
            }
        recompute_flags(k);
        const double norm = std::sqrt(2.0 * l2_norm_sq(k));
        for (double& v : k.values) v /= norm;
        recompute_flags(k);
        const ExperimentReport r = universality_run(
            k, {"gaussian", "rademacher"}, 20000, seed, acc_threads());
        if (!req_flag(r, "moo_bound_holds_gaussian") ||
            !req_flag(r, "moo_bound_holds_rademacher") ||
            !req_flag(r, "chaos_route_consistent"))
            all_moo = false;
    }
    c.note(all_moo,
           "invariance bound dominates the observed smooth-function gap on "
           "20 random admissible kernels (and the chaos route agrees)");
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 12

bool crit12() {
    Checker c;
    const std::uint64_t seed = 9012;
    double worst_ratio = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int d = 1 + (i % 3);
        const int n = 4 + (i % 9);  // 4..12
        PhiloxStream g(seed, make_stream(300, static_cast<std::uint64_t>(i)));
        // Random sparse multilinear coefficients on d-subsets of {0..n-1}.
        struct Mono {
            std::array<int, 3> idx;
            double coef;
        };
        std::vector<Mono> monos;
        const auto consider = [&](int a, int b, int e) {
            double total = 1.0;
            for (int t = 0; t < d; ++t) total *= static_cast<double>(n - t) /
                                                 static_cast<double>(t + 1);
            const double p = std::min(1.0, 24.0 / total);
            if (g.next_uniform() < p)
                monos.push_back({{a, b, e}, 2.0 * g.next_uniform() - 1.0});
        };
        if (d == 1)
            for (int a = 0; a < n; ++a) consider(a, -1, -1);
        if (d == 2)
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) consider(a, b, -1);
        if (d == 3)
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b)
                    for (int e = b + 1; e < n; ++e) consider(a, b, e);
        if (monos.empty()) monos.push_back({{0, std::min(1, n - 1), 2}, 1.0});

        double m2 = 0.0, m4 = 0.0;
        const std::int64_t total = std::int64_t{1} << n;
        for (std::int64_t mask = 0; mask < total; ++mask) {
            double p = 0.0;
            for (const Mono& mo : monos) {
                double term = mo.coef;
                for (int t = 0; t < d; ++t)
                    if (mask >> mo.idx[static_cast<std::size_t>(t)] & 1)
                        term = -term;
                p += term;
            }
            m2 += p * p;
            m4 += p * p * p * p;
        }
        m2 /= static_cast<double>(total);
        m4 /= static_cast<double>(total);
        const double bound = hypercontractivity_bound(d, 1.0, m2);
        worst_ratio = std::max(worst_ratio, m4 / bound);
    }
    c.note(worst_ratio <= 1.0 + 1e-12,
           fmt("exhaustive 2^n Rademacher enumeration, d <= 3, n <= 12, 200 "
               "coefficient sets: worst E P^4 / [(3+2)^{2d} (E P^2)^2] = "
               "%.6f (must be <= 1)",
               worst_ratio));
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 13

bool crit13() {
    Checker c;
    const std::uint64_t seed = 9013;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int q = 1 + (i % 3);
        const int n = 2 + (i % 4);
        Kernel k = random_symmetric_kernel(
            q, n, seed, make_stream(300, static_cast<std::uint64_t>(i)));
        const Kernel adj = mirror_adjoint(k);
        for (std::size_t j = 0; j < k.values.size(); ++j)
            k.values[j] = 0.5 * (k.values[j] + adj.values[j]);
        recompute_flags(k);
        const FreeChaosVar F(k);
        const double a = free_moment(F, 4);
        const double b = free_fourth(F);
        worst = std::max(worst,
                         std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
    c.note(worst <= 1e-10,
           fmt("free_moment(4) vs the closed fourth-moment formula on 100 "
               "random mirror-symmetric kernels: worst relative gap %.3e "
               "(tolerance 1e-10)",
               worst));

    Kernel unit = make_kernel(1, 1);
    unit.values[0] = 1.0;
    recompute_flags(unit);
    const FreeChaosVar U(unit);
    bool catalan_ok = true;
    for (int k2 = 1; k2 <= 10; ++k2) {
        const double mk = free_moment(U, k2);
        const double want =
            (k2 % 2 == 0) ? static_cast<double>(catalan(k2 / 2)) : 0.0;
        if (mk != want) catalan_ok = false;
    }
    c.note(catalan_ok,
           "unit q=1 kernel moments equal the Catalan numbers exactly for "
           "k <= 10");

    const std::size_t reps = 1000000;
    const EmpiricalSample s = semicircular_sample(0.0, 1.0, reps, seed);
    double m4 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const double v = s.values()[r];
        m4 += v * v * v * v;
    }
    m4 /= static_cast<double>(reps);
    // Var(X^4) = m8 - m4^2 = 14 sigma^8 - 4 sigma^8 = 10 in closed form.
    const double se = std::sqrt(10.0 / static_cast<double>(reps));
    c.note(std::abs(m4 - 2.0) <= 4.0 * se,
           fmt("semicircular sampler fourth moment at R=10^6: %.5f vs "
               "2 sigma^4 = 2 (4 SE = %.5f)",
               m4, 4.0 * se));
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 14

bool crit14() {
    Checker c;
    const std::uint64_t seed = 1414;
    const std::size_t reps = 100000;
    const unsigned threads = acc_threads();

    // Single-eigenvalue second chaos F = (X^2 - 1)/sqrt(2): compare the
    // density estimate against the exact centered scaled-chi^2_1 density on
    // the central 90% mass interval.
    {
        const double root = 1.0 / std::sqrt(2.0);
        const double q05 = std::pow(normal_quantile(0.525), 2.0);
        const double q95 = std::pow(normal_quantile(0.975), 2.0);
        const double lo = (q05 - 1.0) * root;
        const double hi = (q95 - 1.0) * root;
        std::vector<double> grid(41);
        for (int i = 0; i < 41; ++i)
            grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / 40.0;
        const ExperimentReport r =
            density_run({root}, reps, grid, seed, 2, threads);
        double sup = 0.0;
        for (const auto& row : r.table.rows) {
            const double x = row[0];
            const double y = std::sqrt(2.0) * x + 1.0;  // chi^2_1 value
            const double truth =
                std::sqrt(2.0) * std::exp(-0.5 * y) /
                std::sqrt(2.0 * 3.14159265358979323846 * y);
            sup = std::max(sup, std::abs(row[3] - truth));
        }
        c.note(sup <= 0.05,
               fmt("centered scaled-chi^2_1 oracle, sup density error on the "
                   "central 90%% interval [%.4f, %.4f]: %.4f (tolerance 0.05)",
                   lo, hi, sup));
    }

    // Gaussian control: first chaos with sigma = 1 recovers the standard
    // normal density, and the constancy score is tiny.
    {
        const double z95 = normal_quantile(0.95);
        std::vector<double> grid(41);
        for (int i = 0; i < 41; ++i)
            grid[static_cast<std::size_t>(i)] = -z95 + 2.0 * z95 * i / 40.0;
        const ExperimentReport r =
            density_run({0.6, 0.8}, reps, grid, seed, 1, threads);
        double sup = 0.0;
        for (const auto& row : r.table.rows)
            sup = std::max(sup, std::abs(row[3] - normal_pdf(row[0])));
        const double score = req_estimate(r, "normality_score").value;
        c.note(sup <= 0.02,
               fmt("Gaussian control, sup density error on [-%.4f, %.4f]: "
                   "%.5f (tolerance 0.02)",
                   z95, z95, sup));
        c.note(score <= 0.01,
               fmt("Gaussian control constancy score: %.3e (tolerance 0.01); "
                   "exactly zero iff the fitted response is constant",
                   score));
    }
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 15

bool crit15() {
    Checker c;
    const std::uint64_t seed = 9015;
    const ExperimentReport r =
        exact_rate_run(0.3, {0.0}, 1024, 1000000, seed, acc_threads());
    // columns: x, p_hat, se, sqrt_n_dev_se, sqrt_n_dev, prediction, ...
    const auto& row = r.table.rows.at(0);
    const double dev = row[4];
    const double pred = row[5];
    c.note(std::abs(dev - pred) <= 0.30 * std::abs(pred),
           fmt("sqrt(n)(P_hat(F_n <= 0) - 1/2) = %.4f vs convolution-sum "
               "prediction %.4f, ratio %.3f (tolerance 30%%)",
               dev, pred, dev / pred));
    return c.all_ok;
}

// ----------------------------------------------------------- criterion 16

bool crit16() {
    Checker c;
    const std::uint64_t seed = 9016;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();

    const auto csv_bytes = [&](const ExperimentReport& r,
                               const std::string& tag) {
        const fs::path p = dir / ("chaoslab_acc16_" + tag + ".csv");
        r.write_csv(p.string());
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        fs::remove(p);
        return ss.str();
    };

    HermiteSeries h2;
    h2.a = {0.0, 0.0, 1.0};
    Kernel uk = make_kernel(2, 6);
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b) {
            set_entry(uk, {a, b}, 0.1 * (a + 1) + 0.01 * (b + 1));
            set_entry(uk, {b, a}, 0.1 * (a + 1) + 0.01 * (b + 1));
        }
    recompute_flags(uk);
    const double norm = std::sqrt(2.0 * l2_norm_sq(uk));
    for (double& v : uk.values) v /= norm;
    recompute_flags(uk);
    std::vector<double> grid(11);
    for (int i = 0; i < 11; ++i)
        grid[static_cast<std::size_t>(i)] = -1.5 + 0.3 * i;

    const std::vector<
        std::pair<std::string, std::function<ExperimentReport(unsigned)>>>
        runs = {
            {"breuer_major",
             [&](unsigned t) {
                 return breuer_major_run(h2, CovSeq::fbm(0.3), 512, 200, seed,
                                         t, 20000);
             }},
            {"qv_hurst",
             [&](unsigned t) { return qv_hurst_run(0.3, 512, 200, seed, t); }},
            {"exact_rate",
             [&](unsigned t) {
                 return exact_rate_run(0.3, {0.0, 1.0}, 256, 500, seed, t);
             }},
            {"universality",
             [&](unsigned t) {
                 return universality_run(
                     uk,
                     {"gaussian", "rademacher", "uniform",
                      "shifted_exponential"},
                     500, seed, t);
             }},
            {"density",
             [&](unsigned t) {
                 return density_run({0.6, 0.8}, 2000, grid, seed, 1, t);
             }},
            {"clt",
             [&](unsigned t) { return clt_run("rademacher", 64, 2000, seed, t); }},
        };
    for (const auto& [name, make] : runs) {
        const std::string b1 = csv_bytes(make(1), name + "_t1");
        const std::string b4 = csv_bytes(make(4), name + "_t4");
        const std::string b1b = csv_bytes(make(1), name + "_t1r");
        c.note(!b1.empty() && b1 == b4 && b1 == b1b,
               fmt("%s: CSV bytes identical across repeats and thread counts "
                   "1 vs 4 (%zu bytes)",
                   name.c_str(), b1.size()));
    }
    return c.all_ok;
}

// ----------------------------------------------------------------- main

struct Criterion {
    const char* name;
    bool (*run)();
};

constexpr Criterion kCriteria[] = {
    {"cumulant_oracle", crit01},
    {"variance_identity", crit02},
    {"fourth_moment_inequality", crit03},
    {"breuer_major", crit04},
    {"hurst_estimation", crit05},
    {"rate_regime_trend", crit06},
    {"stein_suite", crit07},
    {"berry_esseen_domination", crit08},
    {"chen_stein_suite", crit09},
    {"poisson_bounds", crit10},
    {"universality", crit11},
    {"hypercontractivity", crit12},
    {"free_suite", crit13},
    {"density_formula", crit14},
    {"exact_rate_prediction", crit15},
    {"determinism", crit16},
};

}  // namespace

int main(int argc, char** argv) {
    int which = 0;  // 0 = all
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            which = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--all") == 0) {
            which = 0;
        } else {
            std::fprintf(stderr,
                         "usage: %s [--criterion K] [--all]  (K in 1..16)\n",
                         argv[0]);
            return 2;
        }
    }
    if (which < 0 || which > 16) {
        std::fprintf(stderr, "criterion index must be in 1..16\n");
        return 2;
    }
    int failures = 0;
    for (int k = 1; k <= 16; ++k) {
        if (which != 0 && k != which) continue;
        const Criterion& cr = kCriteria[k - 1];
        bool ok = false;
        try {
            ok = cr.run();
        } catch (const std::exception& e) {
            std::printf("  [FAIL] unexpected exception: %s\n", e.what());
        }
        std::printf("criterion %d (%s): %s\n", k, cr.name,
                    ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
