#pragma once

#include <cstdint>
#include <random>

namespace nhits {

/// Seeded generator with portable uniform draws.
///
/// std::uniform_*_distribution is implementation-defined, so draws are derived
/// directly from the mt19937_64 bit stream to keep seeded runs reproducible
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    /// Uniform integer in [lo, hi] inclusive.
    long long integer(long long lo, long long hi) {
        return lo + static_cast<long long>(index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace nhits
