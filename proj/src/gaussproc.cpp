#include "chaoslab/gaussproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>

#include <fftw3.h>
#include <json.hpp>

#include "chaoslab/errors.hpp"
#include "chaoslab/philox.hpp"
#include "chaoslab/report.hpp"
#include "chaoslab/summation.hpp"

namespace chaoslab {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* p = nullptr;
    explicit FftwBuffer(std::int64_t n)
        : p(static_cast<fftw_complex*>(
              fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)))) {
        if (p == nullptr) throw capacity_error("fftw allocation failed");
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

CovSeq CovSeq::fbm(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw precondition_error("CovSeq::fbm: hurst must lie in (0,1)");
    CovSeq c;
    c.kind_ = Kind::fbm;
    c.hurst_ = hurst;
    return c;
}

CovSeq CovSeq::table(std::vector<double> values) {
    if (values.empty())
        throw precondition_error("CovSeq::table: values must be nonempty");
    if (std::abs(values[0] - 1.0) > 1e-12)
        throw precondition_error("CovSeq::table: rho(0) must equal 1");
    for (double v : values)
        if (!(std::abs(v) <= 1.0 + 1e-12))
            throw precondition_error("CovSeq::table: |rho| must be <= 1");
    CovSeq c;
    c.kind_ = Kind::table;
    c.values_ = std::move(values);
    return c;
}

double CovSeq::hurst() const {
    if (kind_ != Kind::fbm)
        throw precondition_error("CovSeq::hurst: not an fbm covariance");
    return hurst_;
}

std::int64_t CovSeq::table_window() const {
    if (kind_ != Kind::table)
        throw precondition_error("CovSeq::table_window: not a table covariance");
    return static_cast<std::int64_t>(values_.size()) - 1;
}

double CovSeq::rho(std::int64_t r) const {
    if (kind_ == Kind::fbm) return fbm_rho(hurst_, r);
    const std::uint64_t a = static_cast<std::uint64_t>(r < 0 ? -r : r);
    if (a >= values_.size()) return 0.0;
    return values_[static_cast<std::size_t>(a)];
}

double fbm_rho(double hurst, std::int64_t r) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw precondition_error("fbm_rho: hurst must lie in (0,1)");
    if (r < 0) r = -r;
    if (r == 0) return 1.0;
    if (hurst == 0.5) return 0.0;
    const double h2 = 2.0 * hurst;
    if (r == 1) return 0.5 * (std::pow(2.0, h2) - 2.0);
    // rho(r) = r^{2H} ((1 + 1/r)^{2H} - 1 + (1 - 1/r)^{2H} - 1) / 2; the two
    // expm1 terms nearly cancel, and their sum is accurate because each is
    // computed to full relative precision.
    const double x = 1.0 / static_cast<double>(r);
    const double up = std::expm1(h2 * std::log1p(x));
    const double dn = std::expm1(h2 * std::log1p(-x));
    return 0.5 * std::pow(static_cast<double>(r), h2) * (up + dn);
}

StationaryEmbedding::StationaryEmbedding(const CovSeq& cov, std::int64_t n) {
    if (n < 1)
        throw precondition_error("StationaryEmbedding: n must be >= 1");
    if (n > (std::int64_t{1} << 24))
        throw capacity_error("StationaryEmbedding: n too large");
    n_ = n;
    m_ = 2 * n;

    FftwBuffer* in = nullptr;
    FftwBuffer* out = nullptr;
    fftw_plan plan = nullptr;
    try {
        in = new FftwBuffer(m_);
        out = new FftwBuffer(m_);
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            plan = fftw_plan_dft_1d(static_cast<int>(m_), in->p, out->p,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
        }
        if (plan == nullptr) throw capacity_error("fftw plan creation failed");

        // First row of the circulant embedding: rho(0), rho(1), ..., rho(n),
        // rho(n-1), ..., rho(1).
        for (std::int64_t j = 0; j < m_; ++j) {
            const std::int64_t lag = j <= n_ ? j : m_ - j;
            in->p[j][0] = cov.rho(lag);
            in->p[j][1] = 0.0;
        }
        fftw_execute(plan);

        min_eig_ = std::numeric_limits<double>::infinity();
        clipped_ = false;
        color_.resize(static_cast<std::size_t>(m_));
        const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m_));
        for (std::int64_t k = 0; k < m_; ++k) {
            double lam = out->p[k][0];
            min_eig_ = std::min(min_eig_, lam);
            if (lam < 0.0) {
                if (lam < -1e-8) {
                    throw precondition_error(
                        "StationaryEmbedding: circulant embedding has a "
                        "negative eigenvalue below tolerance");
                }
                clipped_ = true;
                lam = 0.0;
            }
            const bool self_conjugate = (k == 0 || k == n_);
            color_[static_cast<std::size_t>(k)] =
                std::sqrt(self_conjugate ? lam : 0.5 * lam) * inv_sqrt_m;
        }
    } catch (...) {
        if (plan != nullptr) {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fftw_destroy_plan(plan);
        }
        delete out;
        delete in;
        throw;
    }
    plan_ = plan;
    in_ = in;
    out_ = out;
}

StationaryEmbedding::~StationaryEmbedding() {
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
    delete static_cast<FftwBuffer*>(out_);
    delete static_cast<FftwBuffer*>(in_);
}

void StationaryEmbedding::apply(std::span<const double> z,
                                std::span<double> out) const {
    if (static_cast<std::int64_t>(z.size()) != m_)
        throw precondition_error("StationaryEmbedding::apply: z size mismatch");
    if (static_cast<std::int64_t>(out.size()) != n_)
        throw precondition_error("StationaryEmbedding::apply: out size mismatch");
    FftwBuffer a(m_);
    FftwBuffer x(m_);
    a.p[0][0] = color_[0] * z[0];
    a.p[0][1] = 0.0;
    for (std::int64_t k = 1; k < n_; ++k) {
        const double re = color_[static_cast<std::size_t>(k)] * z[2 * k - 1];
        const double im = color_[static_cast<std::size_t>(k)] * z[2 * k];
        a.p[k][0] = re;
        a.p[k][1] = im;
        a.p[m_ - k][0] = re;
        a.p[m_ - k][1] = -im;
    }
    a.p[n_][0] = color_[static_cast<std::size_t>(n_)] * z[m_ - 1];
    a.p[n_][1] = 0.0;
    // Execution with fresh arrays is thread-safe; the arrays share the plan's
    // fftw_malloc alignment.
    fftw_execute_dft(static_cast<fftw_plan>(plan_), a.p, x.p);
    for (std::int64_t j = 0; j < n_; ++j) out[j] = x.p[j][0];
}

std::vector<double> StationaryEmbedding::sample(std::uint64_t seed,
                                                std::uint64_t stream) const {
    PhiloxStream rng(seed, stream);
    std::vector<double> z(static_cast<std::size_t>(m_));
    for (double& v : z) v = rng.next_normal();
    std::vector<double> path(static_cast<std::size_t>(n_));
    apply(z, path);
    return path;
}

StationaryPath sample_stationary(const CovSeq& cov, std::int64_t n,
                                 std::uint64_t seed, std::uint64_t stream) {
    const StationaryEmbedding emb(cov, n);
    StationaryPath p;
    p.values = emb.sample(seed, stream);
    p.min_eigenvalue = emb.min_eigenvalue();
    p.clipped = emb.clipped();
    return p;
}

PowerSum rho_power_sum(const CovSeq& cov, int q, std::int64_t window,
                       bool allow_nonsummable) {
    if (q < 1) throw precondition_error("rho_power_sum: q must be >= 1");
    if (window < 0) throw precondition_error("rho_power_sum: window must be >= 0");

    PowerSum result{0.0, 0.0};
    if (cov.kind() == CovSeq::Kind::fbm && cov.hurst() != 0.5) {
        const double hurst = cov.hurst();
        const double alpha = q * (2.0 * hurst - 2.0);  // tail exponent
        if (alpha >= -1.0 && !allow_nonsummable)
            throw precondition_error(
                "rho_power_sum: series diverges (q(2H-2) >= -1); pass "
                "allow_nonsummable to force a windowed sum");
        // rho(k) ~ H(2H-1) k^{2H-2}: integral comparison of the omitted tail.
        const double lead = std::pow(hurst * (2.0 * hurst - 1.0),
                                     static_cast<double>(q));
        if (alpha >= -1.0) {
            result.tail_estimate = std::numeric_limits<double>::infinity();
        } else {
            result.tail_estimate =
                2.0 * lead *
                std::pow(static_cast<double>(window), alpha + 1.0) /
                (-(alpha + 1.0));
        }
    } else if (cov.kind() == CovSeq::Kind::table &&
               window < cov.table_window()) {
        // Finite support, but the window cuts it: the omitted part is exact.
        double tail = 0.0;
        for (std::int64_t k = window + 1; k <= cov.table_window(); ++k)
            tail += 2.0 * std::pow(cov.rho(k), q);
        result.tail_estimate = tail;
    }

    result.value =
        std::pow(cov.rho(0), q) +
        2.0 * pairwise_sum_indexed(std::int64_t{1}, window, [&](std::int64_t k) {
            return std::pow(cov.rho(k), q);
        });
    return result;
}

namespace {

// m-fold self-convolution of rho truncated to |j| <= window, computed on a
// circle large enough that no wraparound touches |j| <= window.
std::vector<double> convolve_once(const CovSeq& cov, int m, std::int64_t window) {
    std::int64_t need = 2 * m * window + 2;
    std::int64_t len = 1;
    while (len < need) len *= 2;
    if (len > (std::int64_t{1} << 24))
        throw capacity_error("rho_convolve: window times order too large");

    FftwBuffer in(len), freq(len), back(len);
    for (std::int64_t j = 0; j < len; ++j) in.p[j][0] = in.p[j][1] = 0.0;
    in.p[0][0] = cov.rho(0);
    for (std::int64_t j = 1; j <= window; ++j) {
        const double v = cov.rho(j);
        in.p[j][0] = v;
        in.p[len - j][0] = v;
    }

    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fwd = fftw_plan_dft_1d(static_cast<int>(len), in.p, freq.p,
                               FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(static_cast<int>(len), freq.p, back.p,
                               FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (fwd == nullptr || bwd == nullptr) {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        if (fwd != nullptr) fftw_destroy_plan(fwd);
        if (bwd != nullptr) fftw_destroy_plan(bwd);
        throw capacity_error("fftw plan creation failed");
    }
    fftw_execute(fwd);
    // The input is real and even, so its transform is real; raise it to the
    // m-th power pointwise.
    for (std::int64_t k = 0; k < len; ++k) {
        freq.p[k][0] = std::pow(freq.p[k][0], static_cast<double>(m));
        freq.p[k][1] = 0.0;
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(bwd);
        fftw_destroy_plan(fwd);
    }

    std::vector<double> conv(static_cast<std::size_t>(window) + 1);
    const double inv_len = 1.0 / static_cast<double>(len);
    for (std::int64_t j = 0; j <= window; ++j)
        conv[static_cast<std::size_t>(j)] = back.p[j][0] * inv_len;
    return conv;
}

}  // namespace

std::vector<double> rho_convolve(const CovSeq& cov, int m, std::int64_t window) {
    if (m < 1) throw precondition_error("rho_convolve: m must be >= 1");
    if (window < 1) throw precondition_error("rho_convolve: window must be >= 1");
    if (cov.kind() == CovSeq::Kind::fbm && cov.hurst() > 0.5)
        throw precondition_error(
            "rho_convolve: fbm covariance is not absolutely summable for "
            "hurst > 1/2");

    std::vector<double> conv = convolve_once(cov, m, window);
    if (m > 1) {
        // Window-halving self-check: the truncation of rho at the window must
        // not move any retained entry by more than 1e-6 of the largest one.
        const std::vector<double> half = convolve_once(cov, m, window / 2);
        double max_abs = 0.0;
        for (double v : conv) max_abs = std::max(max_abs, std::abs(v));
        double drift = 0.0;
        for (std::size_t j = 0; j < half.size(); ++j)
            drift = std::max(drift, std::abs(conv[j] - half[j]));
        if (drift > 1e-6 * max_abs)
            throw precondition_error(
                "rho_convolve: window too small to bound truncation below "
                "1e-6 of the value");
    }
    return conv;
}

double rho_conv_inner(const CovSeq& cov, int m, std::int64_t window) {
    const std::vector<double> conv = rho_convolve(cov, m, window);
    return conv[0] * cov.rho(0) +
           2.0 * pairwise_sum_indexed(std::int64_t{1}, window, [&](std::int64_t j) {
               return conv[static_cast<std::size_t>(j)] * cov.rho(j);
           });
}

double sigma_n_sq_exact(const CovSeq& cov, std::int64_t n) {
    if (n < 1) throw precondition_error("sigma_n_sq_exact: n must be >= 1");
    const double rho0 = cov.rho(0);
    return 2.0 * static_cast<double>(n) * rho0 * rho0 +
           4.0 * pairwise_sum_indexed(std::int64_t{1}, n - 1, [&](std::int64_t r) {
               const double v = cov.rho(r);
               return static_cast<double>(n - r) * v * v;
           });
}

void save_path_csv(const std::string& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "index,value\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (i + 1) << ',' << format_double(values[i]) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

void save_path_metadata_json(const std::string& path, std::uint64_t seed,
                             const StationaryPath& info) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["seed"] = seed;
    j["generator_id"] = kGeneratorId;
    j["min_eigenvalue"] = info.min_eigenvalue;
    j["clipped"] = info.clipped;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace chaoslab
