#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "rffcd/rng.hpp"

namespace rffcd {

enum class Family { gaussian, laplace, uniform, gaussian_mixture };

struct MixtureComponent {
    std::vector<double> mean;
    std::vector<double> scale;
};

// A product-form sampling distribution on R^d. `scale` is the per-coordinate
// standard deviation (gaussian), scale parameter (laplace), or half side
// length (uniform on a cube of side 2 * scale).
struct DistributionSpec {
    Family family = Family::gaussian;
    std::size_t dim = 1;
    std::vector<double> mean;                 // unused for mixtures
    std::vector<double> scale;                // unused for mixtures
    std::vector<double> weights;              // mixtures only; sums to 1
    std::vector<MixtureComponent> components; // mixtures only

    static DistributionSpec standard_gaussian(std::size_t dim);
    static DistributionSpec gaussian(std::vector<double> mean, std::vector<double> scale);
    static DistributionSpec laplace(std::vector<double> mean, std::vector<double> scale);
    static DistributionSpec uniform_cube(std::vector<double> mean, std::vector<double> half_side);
    /// Equal-weight two-component Gaussian mixture with means at
    /// +-(separation / 2) * 1 and identity covariance.
    static DistributionSpec two_component_mixture(std::size_t dim, double separation);

    void validate() const;
    std::string describe() const;
};

/// Change index for streams that never change distribution.
inline constexpr std::uint64_t kNoChange = std::numeric_limits<std::uint64_t>::max();

/// Observations 1..change_index are drawn from `pre`, later ones from `post`.
struct ChangeStreamSpec {
    DistributionSpec pre;
    DistributionSpec post;
    std::uint64_t change_index = kNoChange;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One draw from the distribution, appended coordinate by coordinate.
void draw_point(const DistributionSpec& spec, Rng& rng, std::vector<double>& out);

std::vector<std::vector<double>> draw_stream(const ChangeStreamSpec& spec, std::size_t length);

// CSV ingestion: comma separated decimal floats, one observation per row, an
// optional header row detected by a non-numeric cell. Errors carry the
// offending 1-based row (and column) index.
std::vector<std::vector<double>> read_csv(std::istream& in);
std::vector<std::vector<double>> read_csv_file(const std::string& path);

/// Shortest round-trip formatting; read_csv(write_csv(x)) is value-identical.
void write_csv(const std::vector<std::vector<double>>& rows, std::ostream& out);

// IDX ingestion (the MNIST container format): magic 0x00 0x00, type code
// 0x08 (unsigned byte), dimension count, big-endian 32-bit dimension sizes,
// row-major payload. Every record is flattened and scaled to [0, 1] by
// dividing by 255.
std::vector<std::vector<double>> read_idx(const std::string& path);

}  // namespace rffcd
