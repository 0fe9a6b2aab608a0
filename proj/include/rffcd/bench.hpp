#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rffcd/detector.hpp"
#include "rffcd/streams.hpp"
#include "rffcd/thresholds.hpp"

namespace rffcd {

// Tabular experiment output: '#'-prefixed config echo, one CSV header line,
// one row per replication, and a trailing '#'-prefixed aggregate block. All
// aggregates are recomputable from the rows.
struct ExperimentReport {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // NaN renders as an empty cell
    std::vector<std::pair<std::string, double>> aggregates;

    double aggregate(const std::string& name) const;
    void write_csv(std::ostream& out) const;
};

struct DetectorSetup {
    KernelSpec kernel;
    std::size_t features;
    ThresholdPolicy policy;
    Mode mode = Mode::two_sample;
    std::vector<std::vector<double>> history{};    // with_history only
    std::vector<std::vector<double>> reference{};  // known_prechange only

    Detector build(std::uint64_t spectral_seed) const;
    std::string describe() const;
};

// Replication seeds everywhere are master_seed ^ replication_index, and each
// replication writes only its own slot, so reports are identical for any
// thread count.

/// Mean stopping time under the null, censored at `horizon` (censored runs
/// enter the mean at the horizon and are flagged).
ExperimentReport run_arl(const DetectorSetup& setup, const DistributionSpec& null_spec,
                         std::size_t reps, std::uint64_t horizon, std::uint64_t master_seed,
                         unsigned threads = 1);

/// Mean detection delay (N - eta)+ for a change at `change.change_index`,
/// censored `post_horizon` observations after the change. False alarms
/// (N <= eta) are reported but excluded from the delay mean.
ExperimentReport run_edd(const DetectorSetup& setup, const ChangeStreamSpec& change,
                         std::size_t reps, std::uint64_t post_horizon, std::uint64_t master_seed,
                         unsigned threads = 1);

struct ThresholdComparisonConfig {
    DistributionSpec dist = DistributionSpec::standard_gaussian(1);
    std::size_t sample_size = 1000;
    std::size_t features = 1000;
    std::size_t rounds = 1000;
    double alpha = 0.01;
};

// Offline threshold-tightness comparison: the (1 - alpha) quantile of the
// feature-space MMD between two equal-size null samples, estimated by fresh
// resampling and by permutation of one fixed sample, next to the
// distribution-free bound (sqrt(2) + sqrt(2 log(1/alpha))) / sqrt(n/2) and
// the Bernstein bound solved for epsilon at the same tail level. The kernel
// bandwidth comes from the median heuristic on the fixed sample.
ExperimentReport run_threshold_comparison(const ThresholdComparisonConfig& cfg,
                                          std::uint64_t master_seed, unsigned threads = 1);

/// Solves 2 exp(-min_count e^2 / (2 (s2 + 2 sqrt(2) e))) = alpha for e by
/// bisection to 1e-10.
double bernstein_epsilon(std::uint64_t min_count, double sigma_tilde_sq, double alpha);

}  // namespace rffcd
