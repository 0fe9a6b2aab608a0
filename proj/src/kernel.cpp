#include "rffcd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rffcd/rng.hpp"

namespace rffcd {

namespace {

constexpr std::size_t kMedianExactLimit = 2000;
constexpr std::uint64_t kMedianSubsampleSeed = 0x6d656469616eull;  // "median"

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

void KernelSpec::validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("KernelSpec: gamma must be positive");
    if (dim < 1) throw std::invalid_argument("KernelSpec: dim must be at least 1");
}

double gaussian_kernel(std::span<const double> x, std::span<const double> y,
                       const KernelSpec& spec) {
    spec.validate();
    if (x.size() != spec.dim || y.size() != spec.dim)
        throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    return std::exp(-spec.gamma * squared_distance(x, y));
}

KernelSpec median_heuristic(const std::vector<std::vector<double>>& sample) {
    if (sample.size() < 2)
        throw std::invalid_argument("median_heuristic: need at least 2 points");
    const std::size_t dim = sample.front().size();
    if (dim == 0) throw std::invalid_argument("median_heuristic: empty points");
    for (const auto& p : sample)
        if (p.size() != dim)
            throw std::invalid_argument("median_heuristic: inconsistent dimensions");

    std::vector<std::size_t> idx(sample.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (sample.size() > kMedianExactLimit) {
        // Partial fixed-seed Fisher-Yates: the first 2000 slots become the
        // subsample, independent of the caller's RNG usage.
        Rng rng(kMedianSubsampleSeed);
        for (std::size_t i = 0; i < kMedianExactLimit; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(kMedianExactLimit);
    }

    std::vector<double> distances;
    distances.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
            distances.push_back(std::sqrt(squared_distance(sample[idx[a]], sample[idx[b]])));

    std::sort(distances.begin(), distances.end());
    const std::size_t n = distances.size();
    const double median = (n % 2 == 1)
                              ? distances[n / 2]
                              : 0.5 * (distances[n / 2 - 1] + distances[n / 2]);
    if (!(median > 0.0))
        throw std::invalid_argument("median_heuristic: median pairwise distance is zero");
    return KernelSpec{1.0 / (2.0 * median * median), dim};
}

}  // namespace rffcd
