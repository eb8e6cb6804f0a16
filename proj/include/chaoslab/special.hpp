#pragma once

#include <cstdint>

namespace chaoslab {

// Standard-normal density, distribution function, and quantile.
double normal_pdf(double x);
double normal_cdf(double x);
// Inverse of normal_cdf on (0,1); refined to full double precision by a
// Halley step on top of a rational initial guess.
double normal_quantile(double p);

// Scaled complementary error function erfcx(s) = exp(s^2) erfc(s), finite
// for all s >= 0 (direct formula below the erfc underflow threshold, the
// continued asymptotic series above it).  For s < 0 use the reflection
// erfcx(-s) = 2 exp(s^2) - erfcx(s), which overflows for s <~ -26; callers
// that need products of erfcx at opposite signs must arrange the reflection
// so the exponential cancels (see stein_eval).
double erfcx(double s);

// Poisson(lambda) point mass and CDF, computed in log space so large k and
// lambda stay finite.
double poisson_pmf(std::int64_t k, double lambda);
double poisson_cdf(std::int64_t k, double lambda);
// Smallest K with P(Po(lambda) > K) < tail.
std::int64_t poisson_tail_cutoff(double lambda, double tail);

class PhiloxStream;
// Exact inverse-CDF Poisson draw: walks the pmf from k = 0, consuming one
// uniform from the stream.
std::int64_t poisson_draw(double lambda, PhiloxStream& rng);

// Standard semicircle law on [-2, 2] (unit variance): CDF and its inverse.
double semicircle_cdf(double x);
double semicircle_quantile(double p);

// Exact double factorial/binomial for the small indices used by the chaos
// combinatorics (q <= 30 keeps factorial exactly representable).
double factorial(int n);
double binomial(int n, int k);

}  // namespace chaoslab
