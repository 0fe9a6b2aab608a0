#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rffcd/kernel.hpp"

namespace rffcd {

/// Frequencies defining one random Fourier feature map. For the Gaussian
/// kernel the spectral measure is normal with per-coordinate variance
/// 2 * gamma. Regeneration from (spec, count, seed) is bit-identical.
struct SpectralSample {
    std::vector<double> frequencies;  // count x dim, row-major
    std::size_t count = 0;            // number of frequencies r
    std::size_t dim = 0;
    std::uint64_t seed = 0;

    std::span<const double> row(std::size_t j) const {
        return {frequencies.data() + j * dim, dim};
    }
};

/// Feature vectors have length 2 * count: interleaved
/// (sin(w_j.x), cos(w_j.x)) / sqrt(r) pairs, so the Euclidean norm is 1.
using FeatureVector = std::vector<double>;

SpectralSample sample_frequencies(const KernelSpec& spec, std::size_t count,
                                  std::uint64_t seed);

/// Writes the feature map of x into out (size 2 * s.count).
void feature_map_into(std::span<const double> x, const SpectralSample& s,
                      std::span<double> out);

FeatureVector feature_map(std::span<const double> x, const SpectralSample& s);

/// Inner product of the two feature maps; unbiased estimate of the kernel.
double approx_kernel(std::span<const double> x, std::span<const double> y,
                     const SpectralSample& s);

/// Uniform-approximation complexity term
/// 23 sqrt(2 d log(2|X|+1)) + 32 sqrt(2 d log(sigma+1)) + 16 sqrt(2 d / log(2|X|+1)),
/// with |X| the Lebesgue measure of the domain and sigma^2 the second moment
/// of the spectral measure. Natural logarithms.
double h_function(std::size_t dim, double domain_measure, double sigma);

// Advisory feature-count calculator: the smallest r with
// sqrt(r) >= C2 (h(d, |X|, sigma) + sqrt(2 log(2 / alpha))) / gap^2, where
// sigma^2 = 2 * gamma * d for the Gaussian spectral measure. The absolute
// constant C2 is about 0.0150366.
std::size_t required_features(double alpha, double mmd_gap, std::size_t dim,
                              double domain_measure, const KernelSpec& spec);

}  // namespace rffcd
