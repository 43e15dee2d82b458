#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace linkforge {

// Deterministic RNG. All randomness in the library flows through this class so
// results are reproducible bit-for-bit for a given seed: the uniform/normal
// conversions are spelled out here instead of relying on std:: distributions,
// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift rejection-free mapping is biased for huge n; all our
        // n fit comfortably in 32 bits, where the bias is ~2^-32 and harmless,
        // but do the rejection properly anyway.
        const std::uint64_t threshold = -n % n;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + int(uniform_index(std::uint64_t(hi - lo + 1)));
    }

    // Marsaglia polar method; deterministic sequence, no cached spare.
    double normal() {
        for (;;) {
            const double u = uniform(-1.0, 1.0), v = uniform(-1.0, 1.0);
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 gen_;
};

// splitmix64: used to derive independent per-item seeds from a master seed so
// items can be generated in any order (or in parallel) with identical output.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t item) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (item + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over raw bytes; fingerprints for checkpoints and index headers.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

} // namespace linkforge
