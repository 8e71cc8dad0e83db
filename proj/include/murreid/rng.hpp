#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace murreid {

// SplitMix64 generator. All randomness in the toolkit flows through this so
// that seeded runs are bit-reproducible across platforms and standard-library
// versions (std::mt19937 distributions are not portable).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) { return next() % n; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t state_;
};

// Seeded Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// Derives an independent stream from a base seed and stream tags (used to
// give e.g. each dropout call its own deterministic mask).
inline uint64_t derive_seed(uint64_t base, uint64_t tag_a, uint64_t tag_b = 0) {
    SplitMix64 mix(base ^ (tag_a * 0x9E3779B97F4A7C15ULL) ^ (tag_b * 0xC2B2AE3D27D4EB4FULL));
    return mix.next();
}

} // namespace murreid
