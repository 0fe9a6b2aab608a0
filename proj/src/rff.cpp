#include "rffcd/rff.hpp"

#include <cmath>
#include <stdexcept>

#include "rffcd/rng.hpp"

namespace rffcd {

SpectralSample sample_frequencies(const KernelSpec& spec, std::size_t count,
                                  std::uint64_t seed) {
    spec.validate();
    if (count == 0) throw std::invalid_argument("sample_frequencies: count must be positive");
    SpectralSample s;
    s.count = count;
    s.dim = spec.dim;
    s.seed = seed;
    s.frequencies.resize(count * spec.dim);
    Rng rng(seed);
    const double sd = std::sqrt(2.0 * spec.gamma);
    for (double& f : s.frequencies) f = sd * rng.normal();
    return s;
}

void feature_map_into(std::span<const double> x, const SpectralSample& s,
                      std::span<double> out) {
    if (x.size() != s.dim) throw std::invalid_argument("feature_map: dimension mismatch");
    if (out.size() != 2 * s.count) throw std::invalid_argument("feature_map: bad output size");
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.count));
    const double* w = s.frequencies.data();
    for (std::size_t j = 0; j < s.count; ++j, w += s.dim) {
        double a = 0.0;
        for (std::size_t k = 0; k < s.dim; ++k) a += w[k] * x[k];
        out[2 * j] = scale * std::sin(a);
        out[2 * j + 1] = scale * std::cos(a);
    }
}

FeatureVector feature_map(std::span<const double> x, const SpectralSample& s) {
    FeatureVector out(2 * s.count);
    feature_map_into(x, s, out);
    return out;
}

double approx_kernel(std::span<const double> x, std::span<const double> y,
                     const SpectralSample& s) {
    if (x.size() != s.dim || y.size() != s.dim)
        throw std::invalid_argument("approx_kernel: dimension mismatch");
    // <z(x), z(y)> = (1/r) sum_j cos(w_j.(x - y)), computed directly.
    double acc = 0.0;
    const double* w = s.frequencies.data();
    for (std::size_t j = 0; j < s.count; ++j, w += s.dim) {
        double a = 0.0;
        for (std::size_t k = 0; k < s.dim; ++k) a += w[k] * (x[k] - y[k]);
        acc += std::cos(a);
    }
    return acc / static_cast<double>(s.count);
}

double h_function(std::size_t dim, double domain_measure, double sigma) {
    if (dim < 1) throw std::invalid_argument("h_function: dim must be positive");
    if (!(domain_measure > 0.0)) throw std::invalid_argument("h_function: domain measure must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("h_function: sigma must be positive");
    const double d = static_cast<double>(dim);
    const double la = std::log(2.0 * domain_measure + 1.0);
    return 23.0 * std::sqrt(2.0 * d * la) + 32.0 * std::sqrt(2.0 * d * std::log(sigma + 1.0)) +
           16.0 * std::sqrt(2.0 * d / la);
}

std::size_t required_features(double alpha, double mmd_gap, std::size_t dim,
                              double domain_measure, const KernelSpec& spec) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("required_features: alpha must be in (0, 1)");
    if (!(mmd_gap > 0.0))
        throw std::invalid_argument("required_features: mmd gap must be positive");
    spec.validate();
    // c3 = ((sqrt 6 + sqrt 50 + sqrt 54) * 4 / (sqrt 2 - 1))^2; this sign of
    // the exponent is the one that makes c2 positive.
    const double root_c3 =
        (std::sqrt(6.0) + std::sqrt(50.0) + std::sqrt(54.0)) * 4.0 / (std::sqrt(2.0) - 1.0);
    const double c2 =
        ((std::sqrt(2.0) - 1.0) / 4.0 - (std::sqrt(50.0) + std::sqrt(6.0)) / root_c3) / 3.0;
    const double sigma = std::sqrt(2.0 * spec.gamma * static_cast<double>(dim));
    const double bound = c2 *
                         (h_function(dim, domain_measure, sigma) +
                          std::sqrt(2.0 * std::log(2.0 / alpha))) /
                         (mmd_gap * mmd_gap);
    if (bound <= 1.0) return 1;
    if (bound > 3.0e9)
        throw std::invalid_argument("required_features: feature count exceeds addressable range");
    auto r = static_cast<std::size_t>(std::ceil(bound * bound));
    while (std::sqrt(static_cast<double>(r)) < bound) ++r;
    return r;
}

}  // namespace rffcd
