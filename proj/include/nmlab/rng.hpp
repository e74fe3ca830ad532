#pragma once

/// @file rng.hpp
/// @brief Counter-based random streams keyed by (master seed, purpose, ids).
///
/// Every random draw in the library comes from a `Stream` whose key is derived
/// from the master seed and a tuple describing what the stream is for. Streams
/// never share state, so evaluation order and thread count cannot change the
/// numbers any consumer sees.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace nmlab {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace detail

/// Derive a stream key from the master seed, a purpose label and integer ids.
constexpr std::uint64_t derive_key(std::uint64_t master, std::string_view label,
                                   std::initializer_list<std::uint64_t> ids = {}) noexcept {
    std::uint64_t k = detail::splitmix64(master ^ detail::fnv1a(label));
    for (std::uint64_t id : ids) {
        k = detail::splitmix64(k ^ detail::splitmix64(id + 0x632BE59BD9B4E019ull));
    }
    return k;
}

/// Counter-based generator: output n is a pure function of (key, n).
///
/// Satisfies UniformRandomBitGenerator so it can drive std algorithms such as
/// std::shuffle, but the distributions below are defined here so that results
/// do not depend on the standard library implementation.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr Stream() noexcept = default;
    constexpr explicit Stream(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(key), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        return detail::splitmix64(key_ + 0x9E3779B97F4A7C15ull * (counter_++));
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform in (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    /// Log-uniform in [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) noexcept {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform index in [0, n). Requires n > 0.
    std::size_t index(std::size_t n) noexcept {
        // Lemire's multiply-shift; the bias is below 2^-64 * n and irrelevant here.
        return static_cast<std::size_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (one value per call; no cached state).
    double normal() noexcept {
        const double u1 = uniform_open0();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

inline Stream make_stream(std::uint64_t master, std::string_view label,
                          std::initializer_list<std::uint64_t> ids = {}) noexcept {
    return Stream(derive_key(master, label, ids));
}

} // namespace nmlab
