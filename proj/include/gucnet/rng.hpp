#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gucnet/errors.hpp"

namespace gucnet {

// Deterministic 64-bit pseudo-random generator.
//
// The algorithm is SplitMix64 (Steele, Lea & Flood's split-stream mixer): a
// 64-bit counter advanced by the golden-gamma constant and finalized with two
// xor-multiply rounds. It is frozen here on purpose — every piece of
// randomness in the library flows through this class, and the integer stream
// for a given seed is identical on every platform and in every build, which is
// what makes whole experiments reproducible from a single seed.
class Rng64 {
public:
    explicit Rng64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), built from the top 53 bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal deviate via Box-Muller. Always consumes exactly two
    // uniforms so the stream position is a pure function of the call count.
    double normal() {
        double u1 = 1.0 - uniform(); // in (0, 1], keeps the log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, n). Rejection sampling: values below
    // 2^64 mod n are discarded so the final modulo is exact.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) {
            throw ContractError("Rng64::bounded: n must be positive");
        }
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t x = next_u64();
            if (x >= threshold) {
                return x % n;
            }
        }
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace gucnet
