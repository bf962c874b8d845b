#pragma once

// Counter-based random stream. The n-th 64-bit output of a stream with key k
// is splitmix64_mix(k + n * 0x9E3779B97F4A7C15), n = 1, 2, ... (this is
// SplitMix64 written as a pure function of the counter), so any language can
// reproduce a stream from its key alone.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "safeban/linalg.hpp"

namespace safeban {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream key for a tuple of indices; order sensitive.
constexpr std::uint64_t derive_key(std::uint64_t base, std::uint64_t a) noexcept {
    return splitmix64_mix(base ^ splitmix64_mix(a + kGoldenGamma));
}
constexpr std::uint64_t derive_key(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    return derive_key(derive_key(base, a), b);
}
constexpr std::uint64_t derive_key(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    return derive_key(derive_key(base, a, b), c);
}

class RandomStream {
public:
    RandomStream() = default;
    explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept { return splitmix64_mix(key_ + (++counter_) * kGoldenGamma); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) noexcept { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    // Standard normal by Box-Muller; one pair of uniforms per draw.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Vec normal_vec(std::size_t d) noexcept {
        Vec z(d);
        for (auto& x : z) x = normal();
        return z;
    }

    // Uniform on the unit sphere S^{d-1}.
    Vec on_unit_sphere(std::size_t d) noexcept {
        for (;;) {
            Vec z = normal_vec(d);
            const double n = norm2(z);
            if (n > 1e-12) return z * (1.0 / n);
        }
    }

    // Uniform in the closed unit ball.
    Vec in_unit_ball(std::size_t d) noexcept {
        Vec z = on_unit_sphere(d);
        return z * std::pow(uniform(), 1.0 / static_cast<double>(d));
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace safeban
