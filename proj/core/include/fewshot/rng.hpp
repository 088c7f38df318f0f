#pragma once

#include <cmath>
#include <cstdint>

namespace fewshot {

/// 64-bit finalizer from the splitmix64 generator. Bijective on uint64.
/// All seed derivation in this library goes through this function so that
/// episode streams can be reproduced from (seed, index) alone, in any language.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derived seed for stream element `index` under `base`:
///   mix64(base + 0x9E3779B97F4A7C15 * (index + 1))
/// The +1 keeps derive_seed(s, 0) != mix64(s).
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return mix64(base + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// splitmix64 sequence generator. Deterministic and platform-independent;
/// used instead of <random> engines so identical seeds give identical draws
/// across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n). n must be > 0. Uses rejection to avoid
    /// modulo bias.
    uint64_t next_below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller (one value per call, no caching,
    /// so the draw count stays predictable).
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    uint64_t state_;
};

/// Partial Fisher-Yates: fills `out` with `k` distinct indices drawn
/// uniformly from [0, n). Order of the result is the draw order.
template <typename OutVec>
void sample_indices_without_replacement(Rng& rng, size_t n, size_t k, OutVec& out) {
    out.clear();
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(i);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(out[i], out[j]);
    }
    out.resize(k);
}

} // namespace fewshot
