// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace specfold {

/// SplitMix64 step; used both as a tiny generator and as a mixing
/// function to derive independent substream seeds from (seed, counter)
/// tuples. Substream derivation must not depend on execution order so
/// that parallel consumers stay bitwise reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ull + h;
    h = splitmix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4full + h;
    return splitmix64(s);
}

/// PCG32: small, fast, reproducible across platforms.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bull, std::uint64_t stream = 0xda3e39cb94b95bdbull)
        : state_(0), inc_((stream << 1u) | 1u) {
        next();
        state_ += seed;
        next();
    }

    std::uint32_t next() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next64() {
        std::uint64_t hi = next();
        return (hi << 32) | next();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next64() >> 11) * 0x1p-53; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

/// Standard normal deviate, Box-Muller (stateless: two uniforms per call).
inline double normal(Pcg32& rng) {
    double u1 = 1.0 - rng.uniform();  // (0, 1], keeps log finite
    double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

/// Poisson deviate. Knuth multiplication for small means, Hormann's
/// transformed rejection (PTRD) above; both sample the exact
/// distribution, and neither depends on the standard library's
/// unspecified poisson_distribution algorithm, so streams stay
/// reproducible across toolchains.
inline long poisson(Pcg32& rng, double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) return 0;
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) {
        double limit = std::exp(-lambda);
        double prod = rng.uniform();
        long n = 0;
        while (prod > limit) {
            prod *= rng.uniform();
            ++n;
        }
        return n;
    }
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::abs(u);
        double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_lambda - lambda - std::lgamma(k + 1.0))
            return static_cast<long>(kf);
    }
}

}  // namespace specfold
