#include "chaoslab/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/distances.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/special.hpp"
#include "chaoslab/stats.hpp"
#include "chaoslab/stein.hpp"
#include "chaoslab/summation.hpp"

namespace chaoslab {

namespace {

// Stream purposes.  Each experiment family owns a purpose so replicate
// draws never collide across drivers; the universality driver keys its
// per-law purpose to the canonical law index (not the request order) so a
// law's samples do not depend on which other laws were requested.
constexpr std::uint64_t kPurposeBreuerMajor = 101;
constexpr std::uint64_t kPurposeQv = 102;
constexpr std::uint64_t kPurposeExactRate = 103;
constexpr std::uint64_t kPurposeUniversalityBase = 1040;
constexpr std::uint64_t kPurposeUniversalityChaos = 1048;
constexpr std::uint64_t kPurposeDensity = 106;
constexpr std::uint64_t kPurposeClt = 107;

constexpr std::size_t kBatches = 100;

double draw_gaussian(PhiloxStream& g) { return g.next_normal(); }
double draw_rademacher(PhiloxStream& g) { return g.next_rademacher(); }
double draw_uniform(PhiloxStream& g) {
    // Uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1.
    return (2.0 * g.next_uniform() - 1.0) * 1.7320508075688772;
}
double draw_shifted_exponential(PhiloxStream& g) {
    // Exp(1) - 1: mean 0, variance 1.
    return -std::log(g.next_uniform()) - 1.0;
}

const std::vector<Law>& law_table() {
    // E|X|^3: gaussian 2 sqrt(2/pi); rademacher 1; uniform 3 sqrt(3)/4;
    // shifted exponential 12/e - 2.
    static const std::vector<Law> laws = {
        {"gaussian", 1.5957691216057308, 3.0, &draw_gaussian},
        {"rademacher", 1.0, 1.0, &draw_rademacher},
        {"uniform", 1.2990381056766580, 1.8, &draw_uniform},
        {"shifted_exponential", 2.4145532940573080, 9.0,
         &draw_shifted_exponential},
    };
    return laws;
}

std::size_t law_index(const std::string& name) {
    const auto& laws = law_table();
    for (std::size_t i = 0; i < laws.size(); ++i)
        if (laws[i].name == name) return i;
    throw precondition_error("unknown law name: " + name);
}

double estimate_mean(std::span<const double> x) { return pairwise_mean(x); }
double estimate_variance(std::span<const double> x) {
    return sample_cumulants(x).k2;
}
double estimate_k3(std::span<const double> x) { return sample_cumulants(x).k3; }
double estimate_k4(std::span<const double> x) { return sample_cumulants(x).k4; }

// mean / variance / third and fourth sample cumulants, each with a
// batch-means standard error.
void add_moment_estimates(ExperimentReport& rep, std::span<const double> v,
                          const std::string& prefix) {
    rep.add_estimate(prefix + "mean", batch_means(v, kBatches, estimate_mean));
    rep.add_estimate(prefix + "variance",
                     batch_means(v, kBatches, estimate_variance));
    rep.add_estimate(prefix + "kappa3", batch_means(v, kBatches, estimate_k3));
    rep.add_estimate(prefix + "kappa4", batch_means(v, kBatches, estimate_k4));
}

// Two-sample Kolmogorov statistic sup_x |F_a(x) - F_b(x)| by a merge walk
// over the two sorted samples.
double kolmogorov_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw precondition_error("kolmogorov_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

std::string describe_cov(const CovSeq& cov) {
    std::ostringstream os;
    if (cov.kind() == CovSeq::Kind::fbm)
        os << "fgn(hurst=" << format_double(cov.hurst()) << ")";
    else
        os << "table";
    return os.str();
}

std::string describe_series(const HermiteSeries& phi) {
    std::ostringstream os;
    bool first = true;
    for (int q = 0; q <= phi.qmax(); ++q) {
        if (phi.a[static_cast<std::size_t>(q)] == 0.0) continue;
        if (!first) os << ";";
        os << "a" << q << "="
           << format_double(phi.a[static_cast<std::size_t>(q)]);
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

void check_common(std::int64_t n, std::int64_t reps) {
    if (n < 1) throw precondition_error("n must be >= 1");
    if (reps < 2) throw precondition_error("reps must be >= 2");
}

// Gaussian rate regime for the normalized quadratic variation, with the
// boundary cases H = 5/8 and H = 3/4 matched within 1e-12.
struct RateRegime {
    bool exists = false;
    std::string label;
    double value = 0.0;
};

RateRegime rate_regime(double hurst, std::int64_t n) {
    const double nd = static_cast<double>(n);
    RateRegime r;
    if (std::abs(hurst - 0.625) <= 1e-12) {
        r = {true, "(log n)^{3/2} n^{-1/2}",
             std::pow(std::log(nd), 1.5) / std::sqrt(nd)};
    } else if (std::abs(hurst - 0.75) <= 1e-12) {
        r = {true, "1/log(n)", 1.0 / std::log(nd)};
    } else if (hurst < 0.625) {
        r = {true, "n^{-1/2}", 1.0 / std::sqrt(nd)};
    } else if (hurst < 0.75) {
        r = {true, "n^{4H-3}", std::pow(nd, 4.0 * hurst - 3.0)};
    }
    return r;
}

}  // namespace

const Law& law_by_name(const std::string& name) {
    return law_table()[law_index(name)];
}

std::vector<std::string> law_names() {
    std::vector<std::string> out;
    for (const auto& l : law_table()) out.push_back(l.name);
    return out;
}

ExperimentReport breuer_major_run(const HermiteSeries& phi, const CovSeq& cov,
                                  std::int64_t n, std::int64_t reps,
                                  std::uint64_t seed, unsigned threads,
                                  std::int64_t series_window) {
    check_common(n, reps);
    if (series_window < 1)
        throw precondition_error("breuer_major_run: series window must be >= 1");

    double amax = 0.0;
    for (double c : phi.a) amax = std::max(amax, std::abs(c));
    if (amax == 0.0)
        throw precondition_error("breuer_major_run: phi has no nonzero coefficient");
    if (std::abs(phi.a[0]) > 1e-10 * amax)
        throw precondition_error(
            "breuer_major_run: phi must be centered (a_0 = 0)");
    const int rank = hermite_rank(phi);

    // Summability at the Hermite rank governs the whole series, since
    // |rho| <= 1 makes every higher power summable as well.
    if (cov.kind() == CovSeq::Kind::fbm && cov.hurst() > 0.5 &&
        static_cast<double>(rank) * (2.0 * cov.hurst() - 2.0) >= -1.0)
        throw divergence_error(
            "breuer_major_run: sum |rho|^rank diverges for this hurst; the "
            "normalized sums have no Gaussian limit at the n^{-1/2} scaling");

    ExperimentReport rep;
    rep.name = "breuer_major";
    rep.set_param("phi", describe_series(phi));
    rep.set_param("cov", describe_cov(cov));
    rep.set_param("n", n);
    rep.set_param("reps", reps);
    rep.set_param("series_window", series_window);
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;

    // Limit variance sigma^2 = sum_q q! a_q^2 sum_k rho(k)^q, with the
    // truncation tail of each power sum propagated, and the exact finite-n
    // variance of V_n = n^{-1/2} sum phi(X_k).
    double sigma_sq = 0.0;
    double sigma_sq_tail = 0.0;
    double var_finite = 0.0;
    std::vector<int> active;
    for (int q = rank; q <= phi.qmax(); ++q) {
        const double a = phi.a[static_cast<std::size_t>(q)];
        if (std::abs(a) <= 1e-10 * amax) continue;
        active.push_back(q);
        const double w = factorial(q) * a * a;
        const PowerSum ps = rho_power_sum(cov, q, series_window);
        sigma_sq += w * ps.value;
        sigma_sq_tail += w * ps.tail_estimate;
        const double tq =
            1.0 + 2.0 * pairwise_sum_indexed(std::size_t{1},
                                             static_cast<std::size_t>(n - 1),
                                             [&](std::size_t r) {
                                                 const double rr =
                                                     static_cast<double>(r);
                                                 const double rho = cov.rho(
                                                     static_cast<std::int64_t>(r));
                                                 return (1.0 - rr / static_cast<double>(n)) *
                                                        std::pow(rho, q);
                                             });
        var_finite += w * tq;
    }
    rep.add_exact("sigma_sq", sigma_sq);
    rep.add_exact("sigma_sq_tail_estimate", sigma_sq_tail);
    rep.add_exact("var_finite_n", var_finite);

    // Replicates: one stationary path per replicate, V = sum phi(X)/sqrt(n).
    // With two active components the two lowest-order projections are also
    // recorded; their exact cross moment is zero.
    const bool cross = active.size() >= 2;
    const int q1 = active[0];
    const int q2 = cross ? active[1] : active[0];
    const StationaryEmbedding emb(cov, n);
    const std::size_t r_count = static_cast<std::size_t>(reps);
    std::vector<double> vals(r_count);
    std::vector<double> cross_prod(cross ? r_count : 0);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    parallel_for(r_count, threads, [&](std::size_t r) {
        const std::vector<double> path =
            emb.sample(seed, make_stream(kPurposeBreuerMajor, r));
        const double v = inv_sqrt_n *
                         pairwise_sum_indexed(std::size_t{0}, path.size(),
                                              [&](std::size_t k) {
                                                  return phi.eval(path[k]);
                                              });
        vals[r] = v;
        if (cross) {
            const double a1 = phi.a[static_cast<std::size_t>(q1)];
            const double a2 = phi.a[static_cast<std::size_t>(q2)];
            const double v1 =
                a1 * inv_sqrt_n *
                pairwise_sum_indexed(std::size_t{0}, path.size(),
                                     [&](std::size_t k) {
                                         return hermite_eval(q1, path[k]);
                                     });
            const double v2 =
                a2 * inv_sqrt_n *
                pairwise_sum_indexed(std::size_t{0}, path.size(),
                                     [&](std::size_t k) {
                                         return hermite_eval(q2, path[k]);
                                     });
            cross_prod[r] = v1 * v2;
        }
    });

    add_moment_estimates(rep, vals, "");
    const Estimate var_est = batch_means(vals, kBatches, estimate_variance);
    rep.add_flag("variance_matches_finite_n",
                 std::abs(var_est.value - var_finite) <=
                     4.0 * var_est.se + 1e-12);

    if (sigma_sq > 1e-12) {
        const double sigma = std::sqrt(sigma_sq);
        const EmpiricalSample s(vals);
        rep.add_distance("kolmogorov_to_limit",
                         kolmogorov(s, [&](double x) {
                             return normal_cdf(x / sigma);
                         }));
    } else {
        rep.add_warning(
            "limit variance is not positive; kolmogorov distance omitted");
    }

    if (cross) {
        const Estimate cm = mean_with_se(cross_prod, kBatches);
        rep.add_estimate("cross_moment_q" + std::to_string(q1) + "_q" +
                             std::to_string(q2),
                         cm);
        rep.add_exact("cross_moment_exact", 0.0);
        rep.add_flag("cross_moment_zero",
                     std::abs(cm.value) <= 5.0 * cm.se + 1e-12);
    }

    rep.table.columns = {"replicate", "value"};
    rep.table.rows.reserve(r_count);
    for (std::size_t r = 0; r < r_count; ++r)
        rep.table.rows.push_back({static_cast<double>(r), vals[r]});
    return rep;
}

ExperimentReport qv_hurst_run(double hurst, std::int64_t n, std::int64_t reps,
                              std::uint64_t seed, unsigned threads) {
    check_common(n, reps);
    if (!(hurst > 0.0 && hurst < 1.0))
        throw precondition_error("qv_hurst_run: hurst must be in (0,1)");
    if (n < 2) throw precondition_error("qv_hurst_run: n must be >= 2");

    ExperimentReport rep;
    rep.name = "qv_hurst";
    rep.set_param("hurst", hurst);
    rep.set_param("n", n);
    rep.set_param("reps", reps);
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;

    const CovSeq cov = CovSeq::fbm(hurst);
    const double sigma_n_sq = sigma_n_sq_exact(cov, n);
    const double sigma_n = std::sqrt(sigma_n_sq);
    rep.add_exact("sigma_n_sq", sigma_n_sq);

    const RateRegime regime = rate_regime(hurst, n);
    if (regime.exists) {
        rep.set_param("rate_regime", regime.label);
        rep.add_exact("rate_regime_value", regime.value);
    } else {
        rep.add_warning(
            "no Gaussian rate regime applies for hurst > 3/4 "
            "(non-central limit)");
    }

    // Asymptotic variance of sqrt(n) log(n) (H_hat - H): 1/2 sum rho^2,
    // finite only for H < 3/4.
    double cvest = 0.0;
    const bool have_cvest = hurst < 0.75 - 1e-12;
    if (have_cvest) {
        cvest = 0.5 * rho_power_sum(cov, 2).value;
        rep.add_exact("hhat_asymptotic_variance", cvest);
    }

    const StationaryEmbedding emb(cov, n);
    const std::size_t r_count = static_cast<std::size_t>(reps);
    std::vector<double> s_vals(r_count), h_vals(r_count), f_vals(r_count),
        w_vals(r_count);
    const double nd = static_cast<double>(n);
    const double log_n = std::log(nd);
    const double n_scale = std::pow(nd, -2.0 * hurst);
    parallel_for(r_count, threads, [&](std::size_t r) {
        const std::vector<double> x =
            emb.sample(seed, make_stream(kPurposeQv, r));
        const double sum_sq = pairwise_sum_indexed(
            std::size_t{0}, x.size(), [&](std::size_t k) { return x[k] * x[k]; });
        const double s = n_scale * sum_sq;
        const double h_hat = 0.5 - std::log(s) / (2.0 * log_n);
        const double u = sum_sq - nd;
        s_vals[r] = s;
        h_vals[r] = h_hat;
        f_vals[r] = u / sigma_n;
        w_vals[r] = std::sqrt(nd) * log_n * (h_hat - hurst);
    });

    rep.add_estimate("hhat_mean", mean_with_se(h_vals, kBatches));
    rep.add_estimate("hhat_sd",
                     batch_means(h_vals, kBatches, [](std::span<const double> v) {
                         return std::sqrt(std::max(0.0, sample_cumulants(v).k2));
                     }));
    const Estimate wvar = batch_means(w_vals, kBatches, estimate_variance);
    rep.add_estimate("scaled_hhat_variance", wvar);
    const Estimate fvar = batch_means(f_vals, kBatches, estimate_variance);
    rep.add_estimate("fn_variance", fvar);

    const EmpiricalSample fs(f_vals);
    rep.add_distance("kolmogorov_fn",
                     kolmogorov(fs, [](double x) { return normal_cdf(x); }));

    // sigma_n^2 is checked through the unit variance of F_n = U_n/sigma_n.
    rep.add_flag("sigma_n_consistent",
                 std::abs(fvar.value - 1.0) <= 4.0 * fvar.se + 1e-12);
    if (have_cvest)
        rep.add_flag("hhat_variance_within_25pct",
                     std::abs(wvar.value - cvest) <= 0.25 * cvest);

    rep.table.columns = {"replicate", "s_n", "h_hat", "f_n"};
    rep.table.rows.reserve(r_count);
    for (std::size_t r = 0; r < r_count; ++r)
        rep.table.rows.push_back(
            {static_cast<double>(r), s_vals[r], h_vals[r], f_vals[r]});
    return rep;
}

ExperimentReport exact_rate_run(double hurst, const std::vector<double>& x_grid,
                                std::int64_t n, std::int64_t reps,
                                std::uint64_t seed, unsigned threads) {
    check_common(n, reps);
    if (!(hurst > 0.0))
        throw precondition_error("exact_rate_run: hurst must be positive");
    if (hurst >= 0.5)
        throw precondition_error(
            "exact_rate_run: hurst must be < 1/2 (rho must be summable)");
    if (n > 4096)
        throw capacity_error("exact_rate_run: dense Toeplitz route capped at n = 4096");
    if (x_grid.empty())
        throw precondition_error("exact_rate_run: x grid must be nonempty");
    for (double x : x_grid)
        if (!std::isfinite(x))
            throw precondition_error("exact_rate_run: x grid must be finite");

    ExperimentReport rep;
    rep.name = "exact_rate";
    rep.set_param("hurst", hurst);
    rep.set_param("n", n);
    rep.set_param("reps", reps);
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;

    const CovSeq cov = CovSeq::fbm(hurst);

    // Exact cumulants of F_n = sum (X_k^2 - 1)/sigma_n from traces of powers
    // of the Toeplitz covariance matrix: kappa_s = 2^{s-1} (s-1)! tr(C^s).
    Eigen::MatrixXd c_mat(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            c_mat(i, j) = cov.rho(i - j);
    const Eigen::MatrixXd m2 = c_mat * c_mat;
    const double tr2 = c_mat.squaredNorm();
    const double tr3 = m2.cwiseProduct(c_mat).sum();
    const double tr4 = m2.squaredNorm();
    const Eigen::MatrixXd m4 = m2 * m2;
    const double tr8 = m4.squaredNorm();

    const double sigma_n_sq = 2.0 * tr2;
    const double sigma_n = std::sqrt(sigma_n_sq);
    const double kappa3 = 8.0 * tr3 / (sigma_n_sq * sigma_n);
    const double kappa4 = 48.0 * tr4 / (sigma_n_sq * sigma_n_sq);
    const double kappa8 =
        128.0 * 5040.0 * tr8 /
        (sigma_n_sq * sigma_n_sq * sigma_n_sq * sigma_n_sq);
    rep.add_exact("sigma_n_sq", sigma_n_sq);
    rep.add_exact("kappa3", kappa3);
    rep.add_exact("kappa4", kappa4);
    rep.add_exact("kappa8", kappa8);
    rep.add_exact("kappa8_over_kappa4_sq", kappa8 / (kappa4 * kappa4));
    rep.add_flag("kappa4_positive", kappa4 > 0.0);
    rep.add_flag("sigma_trace_consistent",
                 std::abs(sigma_n_sq - sigma_n_sq_exact(cov, n)) <=
                     1e-9 * sigma_n_sq);

    // Asymptotic constants from convolution sums:
    // alpha = lim kappa_3/sqrt(kappa_4), A_inf = lim sqrt(n) kappa_3.
    const double rho2 = rho_power_sum(cov, 2).value;
    const double conv2 = rho_conv_inner(cov, 2);
    const double conv3 = rho_conv_inner(cov, 3);
    const double alpha =
        std::sqrt(2.0 / 3.0) * conv2 / (std::sqrt(rho2) * std::sqrt(conv3));
    const double a_inf = 2.0 * std::sqrt(2.0) * conv2 / std::pow(rho2, 1.5);
    const double lim_n_kappa4 = 12.0 * conv3 / (rho2 * rho2);
    rep.add_exact("alpha", alpha);
    rep.add_exact("a_infinity", a_inf);
    rep.add_exact("lim_n_kappa4", lim_n_kappa4);
    rep.add_exact("sqrt_n_kappa3",
                  std::sqrt(static_cast<double>(n)) * kappa3);
    rep.add_warning(
        "the predicted limit uses the profile constant alpha/(6 sqrt(2 pi)); "
        "displays that absorb the 1/sqrt(2 pi) factor into the constant "
        "differ by that factor");

    const StationaryEmbedding emb(cov, n);
    const std::size_t r_count = static_cast<std::size_t>(reps);
    std::vector<double> f_vals(r_count);
    const double nd = static_cast<double>(n);
    parallel_for(r_count, threads, [&](std::size_t r) {
        const std::vector<double> x =
            emb.sample(seed, make_stream(kPurposeExactRate, r));
        const double sum_sq = pairwise_sum_indexed(
            std::size_t{0}, x.size(), [&](std::size_t k) { return x[k] * x[k]; });
        f_vals[r] = (sum_sq - nd) / sigma_n;
    });

    const Estimate m3 = batch_means(f_vals, kBatches, estimate_k3);
    rep.add_estimate("third_moment", m3);
    rep.add_flag("third_moment_matches_kappa3",
                 std::abs(m3.value - kappa3) <= 5.0 * m3.se + 1e-12);

    // Per grid point: binomial estimate of P(F_n <= x), the scaled deviation
    // sqrt(n)(P_hat - Phi(x)), the finite-n and asymptotic predictions of
    // the profile (alpha/(6 sqrt(2 pi))) (1 - x^2) exp(-x^2/2).
    std::vector<double> sorted_f(f_vals);
    std::sort(sorted_f.begin(), sorted_f.end());
    const double profile_scale = 1.0 / (6.0 * std::sqrt(2.0 * 3.141592653589793));
    bool ratio_omitted = false;
    rep.table.columns = {"x",          "p_hat",          "se",
                         "sqrt_n_dev_se", "sqrt_n_dev",  "prediction",
                         "prediction_asymptotic", "ratio"};
    for (double x : x_grid) {
        const auto it =
            std::upper_bound(sorted_f.begin(), sorted_f.end(), x);
        const double p_hat =
            static_cast<double>(it - sorted_f.begin()) / static_cast<double>(r_count);
        const double se =
            std::sqrt(std::max(p_hat * (1.0 - p_hat), 1.0 / static_cast<double>(r_count)) /
                      static_cast<double>(r_count));
        const double dev = std::sqrt(nd) * (p_hat - normal_cdf(x));
        const double shape = (1.0 - x * x) * std::exp(-0.5 * x * x);
        const double pred_finite =
            std::sqrt(nd * kappa4) * alpha * profile_scale * shape;
        const double pred_asym = a_inf * profile_scale * shape;
        double ratio = std::numeric_limits<double>::quiet_NaN();
        if (std::abs(pred_asym) > 1e-3)
            ratio = dev / pred_asym;
        else
            ratio_omitted = true;
        rep.table.rows.push_back({x, p_hat, se, std::sqrt(nd) * se, dev,
                                  pred_finite, pred_asym, ratio});
    }
    if (ratio_omitted)
        rep.add_warning(
            "ratio omitted (nan) where the predicted profile is below 1e-3; "
            "the prediction vanishes at x = +-1");
    return rep;
}

ExperimentReport universality_run(const Kernel& g,
                                  const std::vector<std::string>& laws,
                                  std::int64_t reps, std::uint64_t seed,
                                  unsigned threads) {
    if (reps < 2) throw precondition_error("reps must be >= 2");
    if (laws.empty())
        throw precondition_error("universality_run: no laws requested");
    if (g.q < 1 || g.q > 4)
        throw precondition_error("universality_run: order must be in 1..4");

    Kernel k = g;
    recompute_flags(k, 1e-12);
    if (!k.is_symmetric)
        throw precondition_error("universality_run: kernel must be symmetric");
    if (!k.vanishes_on_diagonals)
        throw precondition_error(
            "universality_run: kernel must vanish on diagonal tuples");
    const double d_fact = factorial(k.q);
    const double norm_sq = d_fact * l2_norm_sq(k);
    if (std::abs(norm_sq - 1.0) > 1e-9)
        throw precondition_error(
            "universality_run: kernel must satisfy d! ||g||^2 = 1 within 1e-9");

    std::vector<std::size_t> law_ids;
    for (const auto& name : laws) law_ids.push_back(law_index(name));

    ExperimentReport rep;
    rep.name = "universality";
    rep.set_param("order", static_cast<std::int64_t>(k.q));
    rep.set_param("basis", static_cast<std::int64_t>(k.n));
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < laws.size(); ++i)
            os << (i ? ";" : "") << laws[i];
        rep.set_param("laws", os.str());
    }
    rep.set_param("reps", reps);
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;
    rep.add_exact("d_factorial_norm_sq", norm_sq);

    // Influence proxy tau = max over the first coordinate of the squared
    // slice mass; symmetry makes the first coordinate representative.
    const std::size_t n = static_cast<std::size_t>(k.n);
    std::size_t slice = 1;
    for (int j = 1; j < k.q; ++j) slice *= n;
    double tau = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = pairwise_sum_indexed(
            std::size_t{0}, slice, [&](std::size_t t) {
                const double v = k.values[i * slice + t];
                return v * v;
            });
        tau = std::max(tau, s);
    }
    rep.add_exact("tau", tau);

    // Q_d(g, x) = sum over all tuples of g * x_{i_1} .. x_{i_d}, evaluated
    // by contracting the last coordinate d times.
    const auto eval_q = [&](std::span<const double> x) {
        std::vector<double> cur(k.values.begin(), k.values.end());
        std::size_t rows = slice;
        for (int step = 0; step < k.q; ++step) {
            std::vector<double> next(rows);
            for (std::size_t a = 0; a < rows; ++a) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += cur[a * n + i] * x[i];
                next[a] = acc;
            }
            cur = std::move(next);
            rows = (step + 1 < k.q) ? rows / n : rows;
        }
        return cur[0];
    };

    const std::size_t r_count = static_cast<std::size_t>(reps);
    const double inv_sqrt_r = 1.0 / std::sqrt(static_cast<double>(r_count));

    // Gaussian control: sampled with the canonical gaussian purpose whether
    // or not the gaussian law was requested, so the per-law purposes stay
    // order-independent.
    std::vector<std::vector<double>> samples(laws.size());
    std::vector<double> gauss_control;
    const std::size_t gauss_id = law_index("gaussian");
    bool gauss_requested = false;
    for (std::size_t il = 0; il < law_ids.size(); ++il)
        if (law_ids[il] == gauss_id) gauss_requested = true;

    const auto sample_law = [&](std::size_t id) {
        std::vector<double> out(r_count);
        const Law& law = law_table()[id];
        parallel_for(r_count, threads, [&](std::size_t r) {
            PhiloxStream gen(seed,
                             make_stream(kPurposeUniversalityBase + id, r));
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = law.draw(gen);
            out[r] = eval_q(x);
        });
        return out;
    };

    for (std::size_t il = 0; il < law_ids.size(); ++il)
        samples[il] = sample_law(law_ids[il]);
    if (gauss_requested) {
        for (std::size_t il = 0; il < law_ids.size(); ++il)
            if (law_ids[il] == gauss_id) gauss_control = samples[il];
    } else {
        gauss_control = sample_law(gauss_id);
    }

    const Estimate cos_gauss =
        batch_means(gauss_control, kBatches, [](std::span<const double> v) {
            return pairwise_sum_indexed(std::size_t{0}, v.size(),
                                        [&](std::size_t i) {
                                            return std::cos(v[i]);
                                        }) /
                   static_cast<double>(v.size());
        });
    rep.add_estimate("cos_gap_control", cos_gauss);

    for (std::size_t il = 0; il < law_ids.size(); ++il) {
        const Law& law = law_table()[law_ids[il]];
        const std::string& nm = law.name;
        std::span<const double> v(samples[il]);

        const Estimate mean_est = mean_with_se(v, kBatches);
        const Estimate var_est = batch_means(v, kBatches, estimate_variance);
        const Estimate m4_est =
            batch_means(v, kBatches, [](std::span<const double> w) {
                return pairwise_sum_indexed(std::size_t{0}, w.size(),
                                            [&](std::size_t i) {
                                                const double s = w[i] * w[i];
                                                return s * s;
                                            }) /
                       static_cast<double>(w.size());
            });
        rep.add_estimate("mean_" + nm, mean_est);
        rep.add_estimate("variance_" + nm, var_est);
        rep.add_estimate("fourth_moment_" + nm, m4_est);
        rep.add_flag("mean_zero_" + nm,
                     std::abs(mean_est.value) <= 5.0 * mean_est.se + 1e-12);
        rep.add_flag("unit_variance_" + nm,
                     std::abs(var_est.value - 1.0) <= 5.0 * var_est.se + 1e-12);

        const EmpiricalSample s(std::vector<double>(v.begin(), v.end()));
        rep.add_distance("kolmogorov_" + nm,
                         kolmogorov(s, [](double x) { return normal_cdf(x); }));

        // Smooth-gap check with phi = cos (||phi'''|| = 1) against the
        // influence bound.
        const Estimate cos_law =
            batch_means(v, kBatches, [](std::span<const double> w) {
                return pairwise_sum_indexed(std::size_t{0}, w.size(),
                                            [&](std::size_t i) {
                                                return std::cos(w[i]);
                                            }) /
                       static_cast<double>(w.size());
            });
        const double gap = std::abs(cos_law.value - cos_gauss.value);
        const double bound = moo_bound(k.q, tau, law.fourth_moment, 1.0);
        rep.add_estimate("cos_gap_" + nm,
                         {gap, cos_law.se + cos_gauss.se});
        rep.add_bound("moo_bound_" + nm, bound);
        rep.add_flag("moo_bound_holds_" + nm,
                     gap <= bound + 3.0 * (cos_law.se + cos_gauss.se));
    }

    // Wiener-chaos route for the same kernel: distributional equality with
    // the Gaussian multilinear samples (independent draws).
    {
        const ChaosVar cv = make_chaos(k);
        std::vector<double> chaos_vals(r_count);
        parallel_for(r_count, threads, [&](std::size_t r) {
            PhiloxStream gen(seed, make_stream(kPurposeUniversalityChaos, r));
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = gen.next_normal();
            chaos_vals[r] = sample_chaos(cv, x);
        });
        const double dk2 = kolmogorov_two_sample(gauss_control, chaos_vals);
        rep.add_distance("kolmogorov_chaos_route", dk2);
        rep.add_bound("chaos_route_tolerance", 3.0 * inv_sqrt_r);
        rep.add_flag("chaos_route_consistent", dk2 <= 3.0 * inv_sqrt_r);

        rep.table.columns = {"replicate"};
        for (const auto& nm : laws) rep.table.columns.push_back("q_" + nm);
        rep.table.columns.push_back("q_chaos_route");
        rep.table.rows.reserve(r_count);
        for (std::size_t r = 0; r < r_count; ++r) {
            std::vector<double> row;
            row.reserve(laws.size() + 2);
            row.push_back(static_cast<double>(r));
            for (std::size_t il = 0; il < laws.size(); ++il)
                row.push_back(samples[il][r]);
            row.push_back(chaos_vals[r]);
            rep.table.rows.push_back(std::move(row));
        }
    }
    return rep;
}

namespace {

// Rank-windowed local-linear estimate of g(x) = E[response | F = x].
//
// Every evaluation runs a fresh weighted fit centered at the query: the
// window holds the order statistics whose rank level u_i = (i+0.5)/R lies
// within 4h of the query's interpolated rank, with Gaussian weights
// exp(-(u_i-u)^2 / 2h^2), and within the window the response is regressed
// linearly on d = F_i - x.  The rank window adapts the x-bandwidth to the
// local density (dense regions get narrow windows, sparse ones wide), while
// centering at the query keeps the intercept free of interpolation error:
// whenever the response is an affine function of F (both control cases) the
// returned value equals that affine function at x exactly.
struct RankLocalLinear {
    static constexpr double kBandwidth = 0.03;   // rank-scale h
    static constexpr double kWindow = 4.0;       // cut at 4h
    static constexpr double kFloor = 1e-12;      // clamp for 1/g uses

    std::vector<double> f_sorted;  // order statistics of F
    std::vector<double> y_sorted;  // responses in the same order
    mutable std::atomic<std::size_t> clamped{0};

    RankLocalLinear(std::vector<double> fs, std::vector<double> ys)
        : f_sorted(std::move(fs)), y_sorted(std::move(ys)) {}

    // Interpolated empirical CDF level of x.
    double rank_level(double x) const {
        const double rd = static_cast<double>(f_sorted.size());
        const auto it =
            std::lower_bound(f_sorted.begin(), f_sorted.end(), x);
        if (it == f_sorted.begin()) return 0.5 / rd;
        if (it == f_sorted.end()) return (rd - 0.5) / rd;
        const std::size_t k = static_cast<std::size_t>(it - f_sorted.begin());
        const double flo = f_sorted[k - 1];
        const double fhi = f_sorted[k];
        const double ulo = (static_cast<double>(k) - 0.5) / rd;
        const double uhi = (static_cast<double>(k) + 0.5) / rd;
        if (fhi <= flo) return uhi;
        return ulo + (uhi - ulo) * (x - flo) / (fhi - flo);
    }

    double eval(double x) const {
        const std::size_t r = f_sorted.size();
        const double rd = static_cast<double>(r);
        const double u = rank_level(x);
        const double span = kWindow * kBandwidth;
        std::int64_t lo =
            static_cast<std::int64_t>(std::ceil((u - span) * rd - 0.5));
        std::int64_t hi =
            static_cast<std::int64_t>(std::floor((u + span) * rd - 0.5));
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(r) - 1);
        // The Gaussian weights advance by a constant log-increment per rank,
        // so the whole window needs only three exp calls.
        const double dz = 1.0 / (rd * kBandwidth);
        double z = ((static_cast<double>(lo) + 0.5) / rd - u) / kBandwidth;
        double w = std::exp(-0.5 * z * z);
        double step = std::exp(-(z + 0.5 * dz) * dz);
        const double decay = std::exp(-dz * dz);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
        for (std::int64_t i = lo; i <= hi; ++i) {
            const double d = f_sorted[static_cast<std::size_t>(i)] - x;
            const double y = y_sorted[static_cast<std::size_t>(i)];
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * y;
            t1 += w * d * y;
            w *= step;
            step *= decay;
        }
        double fit;
        const double den = s0 * s2 - s1 * s1;
        if (den > 1e-12 * std::max(s0 * s2, s1 * s1) && s0 > 0.0)
            fit = (s2 * t0 - s1 * t1) / den;
        else if (s0 > 0.0)
            fit = t0 / s0;
        else
            fit = kFloor;
        if (fit < kFloor) {
            fit = kFloor;
            clamped.fetch_add(1, std::memory_order_relaxed);
        }
        return fit;
    }
};

}  // namespace

ExperimentReport density_run(const std::vector<double>& lambdas,
                             std::int64_t reps, const std::vector<double>& grid,
                             std::uint64_t seed, int order, unsigned threads) {
    if (order != 1 && order != 2)
        throw precondition_error("density_run: order must be 1 or 2");
    if (lambdas.empty())
        throw precondition_error("density_run: eigenvalue list must be nonempty");
    for (double l : lambdas)
        if (!std::isfinite(l))
            throw precondition_error("density_run: eigenvalues must be finite");
    if (reps < 100)
        throw precondition_error(
            "density_run: reps must be >= 100 for the rank-window fit");
    if (grid.empty())
        throw precondition_error("density_run: grid must be nonempty");
    for (double x : grid)
        if (!std::isfinite(x))
            throw precondition_error("density_run: grid must be finite");

    const int m = static_cast<int>(lambdas.size());
    double lam_sq = 0.0;
    for (double l : lambdas) lam_sq += l * l;
    if (order == 2 && std::abs(2.0 * lam_sq - 1.0) > 1e-9)
        throw precondition_error(
            "density_run: order-2 spectrum must satisfy 2 sum lambda^2 = 1");
    if (order == 1 && lam_sq <= 0.0)
        throw precondition_error(
            "density_run: order-1 coefficients must not all vanish");

    // F = I_q(f) for the diagonal (q = 2) or vector (q = 1) kernel; the
    // response ||DF||^2 / q comes from the chaos gradient.
    Kernel f = make_kernel(order, m);
    if (order == 1) {
        for (int i = 0; i < m; ++i)
            f.values[static_cast<std::size_t>(i)] = lambdas[static_cast<std::size_t>(i)];
    } else {
        for (int i = 0; i < m; ++i) {
            const std::array<int, 2> idx = {i, i};
            f.values[flat_index(f, std::span<const int>(idx.data(), 2))] =
                lambdas[static_cast<std::size_t>(i)];
        }
    }
    const ChaosVar cv = make_chaos(f);
    const double sigma_sq = second_moment_exact(cv);

    ExperimentReport rep;
    rep.name = "density";
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            os << (i ? ";" : "") << format_double(lambdas[i]);
        rep.set_param("lambdas", os.str());
    }
    rep.set_param("order", static_cast<std::int64_t>(order));
    rep.set_param("reps", reps);
    rep.set_param("grid_points", static_cast<std::int64_t>(grid.size()));
    rep.set_param("grid_min", *std::min_element(grid.begin(), grid.end()));
    rep.set_param("grid_max", *std::max_element(grid.begin(), grid.end()));
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;
    rep.add_exact("sigma_sq", sigma_sq);

    const std::size_t r_count = static_cast<std::size_t>(reps);
    std::vector<double> f_vals(r_count), y_vals(r_count), abs_vals(r_count);
    parallel_for(r_count, threads, [&](std::size_t r) {
        PhiloxStream gen(seed, make_stream(kPurposeDensity, r));
        std::vector<double> x(static_cast<std::size_t>(m));
        for (double& v : x) v = gen.next_normal();
        const double fv = sample_chaos(cv, x);
        std::vector<double> grad(static_cast<std::size_t>(m));
        gradient_eval(cv, x, grad);
        const double norm_sq = pairwise_sum_indexed(
            std::size_t{0}, grad.size(),
            [&](std::size_t i) { return grad[i] * grad[i]; });
        f_vals[r] = fv;
        y_vals[r] = norm_sq / static_cast<double>(order);
        abs_vals[r] = std::abs(fv);
    });

    const Estimate abs_mean = mean_with_se(abs_vals, kBatches);
    const Estimate var_f = batch_means(f_vals, kBatches, estimate_variance);
    const Estimate mean_y = mean_with_se(y_vals, kBatches);
    rep.add_estimate("abs_mean", abs_mean);
    rep.add_estimate("f_variance", var_f);
    rep.add_estimate("response_mean", mean_y);
    rep.add_exact("response_mean_exact", sigma_sq);
    rep.add_flag("variance_matches_sigma_sq",
                 std::abs(var_f.value - sigma_sq) <= 4.0 * var_f.se + 1e-12);
    rep.add_flag("response_mean_matches",
                 std::abs(mean_y.value - sigma_sq) <= 5.0 * mean_y.se + 1e-12);

    // Sort by F once; responses follow their replicate.
    std::vector<std::size_t> idx(r_count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (f_vals[a] != f_vals[b]) return f_vals[a] < f_vals[b];
        return a < b;
    });
    std::vector<double> fs(r_count), ys(r_count);
    for (std::size_t i = 0; i < r_count; ++i) {
        fs[i] = f_vals[idx[i]];
        ys[i] = y_vals[idx[i]];
    }

    // Coverage: evaluation (grid and the integration path from 0) must stay
    // inside the central 98% sample-quantile range.
    const EmpiricalSample fsample(f_vals);
    const double cover_lo = fsample.quantile(0.01);
    const double cover_hi = fsample.quantile(0.99);
    rep.add_exact("coverage_lo", cover_lo);
    rep.add_exact("coverage_hi", cover_hi);
    std::vector<double> sorted_grid(grid);
    std::sort(sorted_grid.begin(), sorted_grid.end());
    for (double x : sorted_grid)
        if (x < cover_lo || x > cover_hi) {
            std::ostringstream os;
            os << "density_run: grid point " << format_double(x)
               << " outside the central 98% support ["
               << format_double(cover_lo) << ", " << format_double(cover_hi)
               << "]";
            throw coverage_error(os.str());
        }
    if (0.0 < cover_lo || 0.0 > cover_hi)
        throw coverage_error(
            "density_run: the origin is outside the central 98% support; "
            "the base point of the integral is not covered");

    const RankLocalLinear fit(std::move(fs), std::move(ys));

    // Normality score: Var(g_hat(F)) over the replicates in original order.
    std::vector<double> g_of_f(r_count);
    parallel_for(r_count, threads, [&](std::size_t r) {
        g_of_f[r] = fit.eval(f_vals[r]);
    });
    rep.add_estimate("normality_score",
                     batch_means(g_of_f, kBatches, estimate_variance));

    // Cumulative trapezoid of y/g_hat(y) outward from 0 on each side.
    const double x_lo = std::min(sorted_grid.front(), 0.0);
    const double x_hi = std::max(sorted_grid.back(), 0.0);
    constexpr std::size_t kNodes = 16384;
    std::vector<double> right_i, left_i;
    double right_step = 0.0, left_step = 0.0;
    const auto integrand = [&](double y) { return y / fit.eval(y); };
    if (x_hi > 0.0) {
        right_step = x_hi / static_cast<double>(kNodes);
        right_i.resize(kNodes + 1);
        right_i[0] = 0.0;
        double prev = integrand(0.0);
        for (std::size_t j = 1; j <= kNodes; ++j) {
            const double y = right_step * static_cast<double>(j);
            const double cur = integrand(y);
            right_i[j] = right_i[j - 1] + 0.5 * (prev + cur) * right_step;
            prev = cur;
        }
    }
    if (x_lo < 0.0) {
        left_step = x_lo / static_cast<double>(kNodes);  // negative
        left_i.resize(kNodes + 1);
        left_i[0] = 0.0;
        double prev = integrand(0.0);
        for (std::size_t j = 1; j <= kNodes; ++j) {
            const double y = left_step * static_cast<double>(j);
            const double cur = integrand(y);
            left_i[j] = left_i[j - 1] + 0.5 * (prev + cur) * left_step;
            prev = cur;
        }
    }
    const auto integral_at = [&](double x) {
        if (x >= 0.0) {
            if (right_step == 0.0) return 0.0;
            const double pos = x / right_step;
            const std::size_t j0 = std::min(
                static_cast<std::size_t>(pos), kNodes - 1);
            const double frac = pos - static_cast<double>(j0);
            return right_i[j0] + (right_i[j0 + 1] - right_i[j0]) * frac;
        }
        if (left_step == 0.0) return 0.0;
        const double pos = x / left_step;  // positive
        const std::size_t j0 =
            std::min(static_cast<std::size_t>(pos), kNodes - 1);
        const double frac = pos - static_cast<double>(j0);
        return left_i[j0] + (left_i[j0 + 1] - left_i[j0]) * frac;
    };

    rep.table.columns = {"x", "g_hat", "integral", "rho_hat"};
    rep.table.rows.reserve(grid.size());
    for (double x : grid) {
        const double gx = fit.eval(x);
        const double ix = integral_at(x);
        const double rho = abs_mean.value / (2.0 * gx) * std::exp(-ix);
        rep.table.rows.push_back({x, gx, ix, rho});
    }

    const std::size_t n_clamped = fit.clamped.load(std::memory_order_relaxed);
    if (n_clamped > 0) {
        std::ostringstream os;
        os << "g-hat clamped to its positive floor at " << n_clamped
           << " evaluation points";
        rep.add_warning(os.str());
    }
    return rep;
}

ExperimentReport clt_run(const std::string& law_name, std::int64_t n,
                         std::int64_t reps, std::uint64_t seed,
                         unsigned threads) {
    check_common(n, reps);
    const Law& law = law_by_name(law_name);

    ExperimentReport rep;
    rep.name = "clt";
    rep.set_param("law", law.name);
    rep.set_param("n", n);
    rep.set_param("reps", reps);
    rep.provenance.seed = seed;
    rep.provenance.generator_id = kGeneratorId;
    rep.provenance.threads = threads;
    rep.add_exact("abs_third_moment", law.abs_third_moment);
    rep.add_exact("fourth_moment", law.fourth_moment);

    const std::size_t r_count = static_cast<std::size_t>(reps);
    const std::size_t nn = static_cast<std::size_t>(n);
    std::vector<double> vals(r_count);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    parallel_for(r_count, threads, [&](std::size_t r) {
        PhiloxStream gen(seed, make_stream(kPurposeClt, r));
        std::vector<double> x(nn);
        for (double& v : x) v = law.draw(gen);
        vals[r] = inv_sqrt_n * pairwise_sum(x);
    });

    add_moment_estimates(rep, vals, "");
    const EmpiricalSample s(vals);
    const double dk = kolmogorov(s, [](double x) { return normal_cdf(x); });
    rep.add_distance("kolmogorov", dk);

    const double mc_err = 0.5 / std::sqrt(static_cast<double>(r_count));
    const double bound_proven =
        berry_esseen_bound(n, law.abs_third_moment, BerryEsseenMode::proven_33);
    const double bound_sharp =
        berry_esseen_bound(n, law.abs_third_moment, BerryEsseenMode::sharp_04784);
    rep.add_bound("berry_esseen_proven", bound_proven);
    rep.add_bound("berry_esseen_sharp", bound_sharp);
    rep.add_exact("mc_error", mc_err);
    rep.add_flag("dominated_proven", dk <= bound_proven + 3.0 * mc_err);
    rep.add_flag("dominated_sharp", dk <= bound_sharp + 3.0 * mc_err);

    rep.table.columns = {"replicate", "value"};
    rep.table.rows.reserve(r_count);
    for (std::size_t r = 0; r < r_count; ++r)
        rep.table.rows.push_back({static_cast<double>(r), vals[r]});
    return rep;
}

}  // namespace chaoslab
