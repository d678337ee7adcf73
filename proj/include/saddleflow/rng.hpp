#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace saddleflow {

/// PCG-XSH-RR 64/32: 64-bit LCG state, 32-bit permuted output.
/// The stream is fully determined by (seed, stream) on every platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0x14057b7ef767814fULL) noexcept
        : seed_(seed), inc_((stream << 1U) | 1U) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() noexcept {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18U) ^ old) >> 27U);
        const auto rot = static_cast<std::uint32_t>(old >> 59U);
        return (xorshifted >> rot) | (xorshifted << ((32U - rot) & 31U));
    }

    // 53-bit uniform in [0, 1).
    double uniform() noexcept {
        const std::uint64_t hi = next_u32() >> 5U;
        const std::uint64_t lo = next_u32() >> 6U;
        return static_cast<double>(hi * 67108864ULL + lo) * 0x1.0p-53;
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_ = 0;
    std::uint64_t inc_;
};

/// One standard-normal variate by Box-Muller (cosine branch, no caching).
inline double normal_sample(SeededRng& rng) noexcept {
    const double u1 = 1.0 - rng.uniform(); // (0, 1]
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace saddleflow
