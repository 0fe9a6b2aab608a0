#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rffcd {

/// Gaussian kernel K(x, y) = exp(-gamma * ||x - y||^2). Normalized so that
/// K(x, x) = 1.
struct KernelSpec {
    double gamma = 1.0;
    std::size_t dim = 1;

    /// Throws std::invalid_argument unless gamma > 0 and dim >= 1.
    void validate() const;
};

double gaussian_kernel(std::span<const double> x, std::span<const double> y,
                       const KernelSpec& spec);

// Bandwidth by the median heuristic: gamma = 1 / (2 m^2) with m the median
// Euclidean distance over distinct unordered pairs, so K evaluates to
// exp(-1/2) at the median distance. Pairs are enumerated exactly for up to
// 2000 points; larger samples are reduced to a fixed-seed subsample of 2000
// points first. Even pair counts use the mean of the two middle order
// statistics.
KernelSpec median_heuristic(const std::vector<std::vector<double>>& sample);

}  // namespace rffcd
