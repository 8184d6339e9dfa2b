#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

#include "csikit/common.hpp"

namespace csikit {

// SplitMix64 finalizer. Used only for seed derivation, never for sampling.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a path of indices
// (location, user, permutation id, ...). Order matters: derive_seed(s, {1, 2})
// and derive_seed(s, {2, 1}) are unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t p : path) s = mix64(s ^ p);
    return s;
}

/**
 * Deterministic random stream.
 *
 * Wraps std::mt19937_64, whose output sequence is pinned by the standard,
 * and maps raw 64-bit draws to doubles with fixed arithmetic. Two Rng
 * instances built from the same seed yield bit-identical sequences on any
 * conforming platform.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller. Consumes exactly two raw draws.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Circularly symmetric complex normal with unit total variance,
    // i.e. real and imaginary parts are each N(0, 1/2). One Box-Muller
    // pair feeds both components.
    Complex cnormal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return Complex(r * std::cos(a), r * std::sin(a)) / std::sqrt(2.0);
    }

    // Unbiased integer in [0, n) by rejection on the top of the raw range.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw argument_error("bounded(0) is undefined");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace csikit
