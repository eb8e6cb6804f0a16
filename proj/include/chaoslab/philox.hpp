#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace chaoslab {

// Counter-based RNG (Philox4x32-10).  Every replicate of every experiment
// draws from its own (seed, stream) pair, so the value at a given position
// is a pure function of (seed, stream, position) — independent of thread
// count and of how work was chunked.  Streams are composed as
// purpose * 2^48 + index, which keeps the draws of different pipeline
// stages disjoint for any index below 2^48.
inline constexpr const char* kGeneratorId = "philox4x32-10/boxmuller";

inline std::uint64_t make_stream(std::uint64_t purpose, std::uint64_t index) {
    return (purpose << 48) + index;
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kBump0 = 0x9E3779B9u;
    constexpr std::uint32_t kBump1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kBump0;
            key[1] += kBump1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint64_t next_u64() {
        if (buf_next_ == 2) {
            const std::array<std::uint32_t, 4> ctr = {
                static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                stream_lo_, stream_hi_};
            const auto y = philox4x32_10(ctr, key_);
            buf_[0] = static_cast<std::uint64_t>(y[0]) | (static_cast<std::uint64_t>(y[1]) << 32);
            buf_[1] = static_cast<std::uint64_t>(y[2]) | (static_cast<std::uint64_t>(y[3]) << 32);
            buf_next_ = 0;
            ++block_;
        }
        return buf_[buf_next_++];
    }

    // Uniform on the open interval (0,1): the top 53 bits, centered in the
    // lattice cell, so 0 and 1 are never produced.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second value of each pair is
    // cached within this stream.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform sign +/-1, drawn from a 64-bit pool one bit at a time.
    double next_rademacher() {
        if (bit_fill_ == 0) {
            bit_pool_ = next_u64();
            bit_fill_ = 64;
        }
        const double s = (bit_pool_ & 1u) ? 1.0 : -1.0;
        bit_pool_ >>= 1;
        --bit_fill_;
        return s;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int buf_next_ = 2;
    double cached_ = 0.0;
    bool have_cached_ = false;
    std::uint64_t bit_pool_ = 0;
    int bit_fill_ = 0;
};

}  // namespace chaoslab
