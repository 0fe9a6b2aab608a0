#include "rffcd/mmd.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace rffcd {

namespace {

using Points = std::vector<std::vector<double>>;

void check_inputs(const Points& x, const Points& y, std::size_t dim, const char* who) {
    if (x.empty() || y.empty())
        throw std::invalid_argument(std::string(who) + ": empty input");
    for (const auto& p : x)
        if (p.size() != dim) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    for (const auto& p : y)
        if (p.size() != dim) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

// Plug-in estimator: three double sums with diagonal terms included, clamped
// at zero before the root to absorb rounding on near-identical samples.
double plugin_mmd(const Points& x, const Points& y,
                  const std::function<double(std::span<const double>, std::span<const double>)>& k) {
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (const auto& a : x)
        for (const auto& b : x) xx += k(a, b);
    for (const auto& a : y)
        for (const auto& b : y) yy += k(a, b);
    for (const auto& a : x)
        for (const auto& b : y) xy += k(a, b);
    const double sq = xx / (n * n) + yy / (m * m) - 2.0 * xy / (n * m);
    return std::sqrt(std::max(0.0, sq));
}

}  // namespace

MeanEmbedding mean_embedding(const std::vector<std::vector<double>>& points,
                             const SpectralSample& s) {
    if (points.empty()) throw std::invalid_argument("mean_embedding: empty sample");
    MeanEmbedding e;
    e.count = points.size();
    e.mean.assign(2 * s.count, 0.0);
    std::vector<double> z(2 * s.count);
    for (const auto& p : points) {
        feature_map_into(p, s, z);
        for (std::size_t i = 0; i < z.size(); ++i) e.mean[i] += z[i];
    }
    const double inv = 1.0 / static_cast<double>(points.size());
    for (double& v : e.mean) v *= inv;
    return e;
}

double mmd_exact(const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y, const KernelSpec& spec) {
    spec.validate();
    check_inputs(x, y, spec.dim, "mmd_exact");
    return plugin_mmd(x, y, [&spec](std::span<const double> a, std::span<const double> b) {
        return gaussian_kernel(a, b, spec);
    });
}

double mmd_exact_rff_kernel(const std::vector<std::vector<double>>& x,
                            const std::vector<std::vector<double>>& y,
                            const SpectralSample& s) {
    check_inputs(x, y, s.dim, "mmd_exact_rff_kernel");
    return plugin_mmd(x, y, [&s](std::span<const double> a, std::span<const double> b) {
        return approx_kernel(a, b, s);
    });
}

double mmd_rff(const MeanEmbedding& a, const MeanEmbedding& b) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("mmd_rff: embedding length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double d = a.mean[i] - b.mean[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double normalized_stat(std::uint64_t c1, std::uint64_t c2, double mmd) {
    if (c1 == 0 || c2 == 0) throw std::invalid_argument("normalized_stat: zero count");
    const double a = static_cast<double>(c1);
    const double b = static_cast<double>(c2);
    return std::sqrt(a * b / (a + b)) * mmd;
}

}  // namespace rffcd
