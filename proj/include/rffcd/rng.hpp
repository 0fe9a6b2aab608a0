#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rffcd {

/// splitmix64 step; used to derive independent sub-seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// k-th sub-seed of a base seed (k = 0, 1, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
    std::uint64_t s = base;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= k; ++i) out = splitmix64(s);
    return out;
}

// Deterministic random source. std::mt19937_64 is bit-exact across
// implementations; the distribution transforms are spelled out here because
// the std::*_distribution algorithms are implementation-defined and would
// break reproducibility of seeded runs between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe as a log() argument.
    double uniform_open() { return (static_cast<double>(bits() >> 12) + 0.5) * 0x1.0p-52; }

    /// Standard normal via Box-Muller; the second value of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * kPi * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    /// Standard Laplace (location 0, scale 1) via inverse CDF.
    double laplace() {
        const double u = uniform_open() - 0.5;
        const double mag = std::log(1.0 - 2.0 * std::abs(u));
        return u < 0.0 ? mag : -mag;
    }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v;
        do {
            v = bits();
        } while (v >= limit);
        return v % n;
    }

private:
    static constexpr double kPi = 3.14159265358979323846264338327950288;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rffcd
