#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chaoslab {

// Covariance sequence rho(r) of a unit-variance stationary Gaussian
// sequence.  Either the fractional-Brownian-increment family indexed by a
// Hurst parameter, or an explicit finite table (zero beyond its window).
class CovSeq {
  public:
    enum class Kind { fbm, table };

    static CovSeq fbm(double hurst);
    // values[r] = rho(r) for r = 0..values.size()-1; rho(0) must equal 1 and
    // every entry must lie in [-1, 1].
    static CovSeq table(std::vector<double> values);

    Kind kind() const { return kind_; }
    double hurst() const;                 // fbm kind only
    std::int64_t table_window() const;    // table kind only
    double rho(std::int64_t r) const;

  private:
    CovSeq() = default;
    Kind kind_ = Kind::fbm;
    double hurst_ = 0.5;
    std::vector<double> values_;
};

// rho(r) = ((|r+1|^{2H} + |r-1|^{2H}) - 2|r|^{2H}) / 2, evaluated without
// cancellation for large |r| via expm1/log1p; exactly the Kronecker delta
// when H = 1/2.
double fbm_rho(double hurst, std::int64_t r);

// Spectral factorization of the circulant embedding (size m = 2n) of the
// n x n Toeplitz covariance matrix: a deterministic linear map B taking m
// i.i.d. standard normals to a length-n path whose covariance is exactly
// Toeplitz(rho) whenever the embedding eigenvalues are nonnegative.
//
// Eigenvalue policy: minimum eigenvalue < -1e-8 throws; values in
// (-1e-8, 0) are clipped to zero and flagged via clipped().
//
// Input layout for apply()/sample(): z[0] feeds the zero frequency,
// z[2k-1], z[2k] feed the real and imaginary parts of frequency k for
// 1 <= k <= m/2 - 1, and z[m-1] feeds frequency m/2.  sample() consumes
// exactly m normals from one PhiloxStream in index order.
class StationaryEmbedding {
  public:
    StationaryEmbedding(const CovSeq& cov, std::int64_t n);
    ~StationaryEmbedding();
    StationaryEmbedding(const StationaryEmbedding&) = delete;
    StationaryEmbedding& operator=(const StationaryEmbedding&) = delete;

    std::int64_t n() const { return n_; }
    std::int64_t input_size() const { return m_; }
    double min_eigenvalue() const { return min_eig_; }
    bool clipped() const { return clipped_; }

    // out = B z with z.size() == input_size(), out.size() == n().
    // Thread-safe: may be called concurrently from many threads.
    void apply(std::span<const double> z, std::span<double> out) const;
    std::vector<double> sample(std::uint64_t seed, std::uint64_t stream) const;

  private:
    std::int64_t n_ = 0;
    std::int64_t m_ = 0;
    double min_eig_ = 0.0;
    bool clipped_ = false;
    std::vector<double> color_;  // per-frequency scale, 1/sqrt(m) folded in
    void* plan_ = nullptr;       // fftw_plan
    void* in_ = nullptr;         // fftw_complex*, planning buffers
    void* out_ = nullptr;
};

struct StationaryPath {
    std::vector<double> values;
    double min_eigenvalue = 0.0;
    bool clipped = false;
};

// One-shot convenience wrapper around StationaryEmbedding.
StationaryPath sample_stationary(const CovSeq& cov, std::int64_t n,
                                 std::uint64_t seed, std::uint64_t stream);

struct PowerSum {
    double value;          // sum over |k| <= window of rho(k)^q
    double tail_estimate;  // integral estimate of the omitted tail (signed;
                           // reported, never added; +inf when divergent)
};

// Sum of rho(k)^q over the symmetric window.  For the fbm kind the series
// converges iff q(2H-2) < -1; outside that region the call throws unless
// allow_nonsummable is set.
PowerSum rho_power_sum(const CovSeq& cov, int q, std::int64_t window = 100000,
                       bool allow_nonsummable = false);

// m-fold discrete self-convolution of rho truncated to |j| <= window,
// returned as values for j = 0..window (the sequence is symmetric).
// Throws if halving the window moves some entry by more than 1e-6 of the
// largest entry (window too small for the requested precision).
std::vector<double> rho_convolve(const CovSeq& cov, int m,
                                 std::int64_t window = 65536);

// <rho^{*m}, rho> = sum over |j| <= window of rho^{*m}(j) rho(j).
double rho_conv_inner(const CovSeq& cov, int m, std::int64_t window = 65536);

// sigma_n^2 = 2 sum_{|r| < n} (n - |r|) rho(r)^2.
double sigma_n_sq_exact(const CovSeq& cov, std::int64_t n);

// Path export: CSV with header "index,value" (1-based index) and a
// metadata JSON carrying seed, generator id, minimum embedding eigenvalue,
// and the clip warning flag.
void save_path_csv(const std::string& path, std::span<const double> values);
void save_path_metadata_json(const std::string& path, std::uint64_t seed,
                             const StationaryPath& info);

}  // namespace chaoslab
