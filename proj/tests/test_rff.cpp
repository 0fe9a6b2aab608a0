#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rffcd/kernel.hpp"
#include "rffcd/rff.hpp"
#include "rffcd/rng.hpp"

using namespace rffcd;

namespace {

std::vector<double> random_vector(std::size_t d, Rng& rng) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    return v;
}

double norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("sample_frequencies is deterministic and matches the spectral variance") {
    const KernelSpec spec{0.8, 3};
    const auto a = sample_frequencies(spec, 64, 42);
    const auto b = sample_frequencies(spec, 64, 42);
    CHECK(a.frequencies == b.frequencies);  // bit-identical
    CHECK(a.count == 64);
    CHECK(a.dim == 3);
    CHECK_THROWS_AS(sample_frequencies(spec, 0, 1), std::invalid_argument);

    // Law of large numbers: per-coordinate variance within 5% of 2 gamma.
    const std::size_t r = 100000;
    const auto big = sample_frequencies(spec, r, 7);
    for (std::size_t k = 0; k < spec.dim; ++k) {
        double ss = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
            const double w = big.frequencies[j * spec.dim + k];
            ss += w * w;
        }
        CHECK(ss / static_cast<double>(r) ==
              doctest::Approx(2.0 * spec.gamma).epsilon(0.05));
    }
}

TEST_CASE("feature map has unit norm and the zero-input pattern") {
    const KernelSpec spec{0.5, 2};
    const auto s = sample_frequencies(spec, 32, 5);

    const auto z0 = feature_map(std::vector{0.0, 0.0}, s);
    const double inv_sqrt_r = 1.0 / std::sqrt(32.0);
    for (std::size_t j = 0; j < 32; ++j) {
        CHECK(z0[2 * j] == 0.0);
        CHECK(z0[2 * j + 1] == doctest::Approx(inv_sqrt_r).epsilon(1e-15));
    }

    Rng rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        const auto z = feature_map(random_vector(2, rng), s);
        CHECK(std::abs(norm(z) - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(feature_map(std::vector{1.0}, s), std::invalid_argument);
}

TEST_CASE("approx_kernel stays in [-1, 1] and is exact on the diagonal") {
    const KernelSpec spec{1.3, 4};
    const auto s = sample_frequencies(spec, 48, 13);
    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const auto x = random_vector(4, rng);
        const auto y = random_vector(4, rng);
        const double k = approx_kernel(x, y, s);
        CHECK(k >= -1.0 - 1e-12);
        CHECK(k <= 1.0 + 1e-12);
        CHECK(approx_kernel(x, x, s) == doctest::Approx(1.0).epsilon(1e-12));
        // Inner-product route agrees with the direct cosine route.
        const auto zx = feature_map(x, s);
        const auto zy = feature_map(y, s);
        double ip = 0.0;
        for (std::size_t i = 0; i < zx.size(); ++i) ip += zx[i] * zy[i];
        CHECK(k == doctest::Approx(ip).epsilon(1e-12));
    }
}

TEST_CASE("approx_kernel concentrates around the exact kernel at r = 1e5") {
    const KernelSpec spec{0.7, 2};
    const auto s = sample_frequencies(spec, 100000, 21);
    Rng rng(22);
    int bad = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_vector(2, rng);
        const auto y = random_vector(2, rng);
        if (std::abs(approx_kernel(x, y, s) - gaussian_kernel(x, y, spec)) >= 0.02) ++bad;
    }
    CHECK(bad <= 1);  // 99% of pairs within 0.02
}

TEST_CASE("averaging over independent draws is unbiased") {
    const KernelSpec spec{0.5, 1};
    const std::size_t draws = 100;   // draws * r = 1e6 total features
    const std::size_t r = 10000;
    const std::vector<std::pair<double, double>> grid{{0.0, 0.5}, {0.0, 1.0}, {-1.0, 2.0}, {0.3, 0.4}};
    for (const auto& [a, b] : grid) {
        const std::vector<double> x{a}, y{b};
        double mean = 0.0;
        for (std::size_t m = 0; m < draws; ++m)
            mean += approx_kernel(x, y, sample_frequencies(spec, r, 1000 + m));
        mean /= static_cast<double>(draws);
        CHECK(std::abs(mean - gaussian_kernel(x, y, spec)) < 0.01);
    }
}

TEST_CASE("h function value and monotonicity") {
    CHECK(h_function(1, 1.0, 1.0) == doctest::Approx(93.358125429855462).epsilon(1e-12));
    double prev = 0.0;
    for (std::size_t d = 1; d <= 16; d *= 2) {
        const double h = h_function(d, 2.0, 3.0);
        CHECK(h > prev);
        prev = h;
    }
    CHECK_THROWS_AS(h_function(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_function(1, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("required_features closed-form value and scaling") {
    const KernelSpec spec{0.5, 1};
    // Frozen from a high-precision evaluation of the closed form:
    // bound = 1.4446321583828841, so the smallest admissible r is 3.
    CHECK(required_features(0.05, 1.0, 1, 1.0, spec) == 3);

    // Halving the gap multiplies the sqrt(r) bound by 4, so r grows by a
    // factor 16 up to the integer ceiling.
    const std::size_t r1 = required_features(0.05, 0.25, 1, 1.0, spec);
    const std::size_t r2 = required_features(0.05, 0.125, 1, 1.0, spec);
    CHECK(r2 <= 16 * r1);
    CHECK(r2 + 15 >= 16 * r1);

    // Monotone nonincreasing in alpha.
    std::size_t prev = required_features(0.001, 0.2, 3, 2.0, KernelSpec{1.0, 3});
    for (double alpha : {0.01, 0.05, 0.2, 0.5, 0.9}) {
        const std::size_t r = required_features(alpha, 0.2, 3, 2.0, KernelSpec{1.0, 3});
        CHECK(r <= prev);
        prev = r;
    }
    CHECK_THROWS_AS(required_features(0.05, 0.0, 1, 1.0, spec), std::invalid_argument);
    CHECK_THROWS_AS(required_features(0.05, 1e-9, 1, 1.0, spec), std::invalid_argument);
}
