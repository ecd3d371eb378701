#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ampex {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
} // namespace detail

/// Derives an independent substream seed from a base seed and a path of
/// integers (sweep, block, term, ...). Pure mixing, no hidden state, so
/// results are independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = base;
    detail::splitmix64(s);
    for (std::uint64_t x : path) {
        s ^= x + 0x9e3779b97f4a7c15ULL;
        detail::splitmix64(s);
    }
    return s;
}

/// xoshiro256++ with explicit uniform/normal generation. All draws are defined
/// by this file alone (no std:: distributions), so a given seed yields the
/// same stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0,1]
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ampex
