#pragma once

#include <cstdint>
#include <vector>

#include "rffcd/kernel.hpp"
#include "rffcd/rff.hpp"

namespace rffcd {

/// Mean of the feature maps of `count` points. The Euclidean norm of `mean`
/// is at most 1 (convex combination of unit vectors).
struct MeanEmbedding {
    std::vector<double> mean;
    std::uint64_t count = 0;
};

MeanEmbedding mean_embedding(const std::vector<std::vector<double>>& points,
                             const SpectralSample& s);

/// Plug-in (biased, V-statistic) MMD between two samples under the exact
/// kernel: square root of the clamped three-double-sum expression.
double mmd_exact(const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y, const KernelSpec& spec);

/// Same plug-in estimator evaluated with the feature-space kernel; quadratic
/// in the sample sizes. Serves as the brute-force oracle for mmd_rff.
double mmd_exact_rff_kernel(const std::vector<std::vector<double>>& x,
                            const std::vector<std::vector<double>>& y,
                            const SpectralSample& s);

/// Feature-space MMD: Euclidean distance between the two mean embeddings.
/// Always in [0, 2].
double mmd_rff(const MeanEmbedding& a, const MeanEmbedding& b);

/// sqrt(c1 c2 / (c1 + c2)) * mmd.
double normalized_stat(std::uint64_t c1, std::uint64_t c2, double mmd);

}  // namespace rffcd
