#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rffcd/kernel.hpp"
#include "rffcd/streams.hpp"

namespace rffcd {

// Distribution-free threshold sequences. The run-length bound gives
// E[N] >= gamma_run under the null when every lambda_n equals the returned
// value; the false-alarm bound gives P(ever stopping) <= alpha. Both are used
// with equality, the least conservative compliant choice.

/// sqrt(2) + sqrt(2 log(4 g log2(2 g))); constant in n. Requires g > 1.
double threshold_arl(double gamma_run);

/// sqrt(2) + sqrt(2 (log(n/a) + 2 log(log2 n) + log(log2 2n))); nondecreasing
/// in n. Requires 0 < a < 1 and n >= 2.
double threshold_fa(double alpha, double n);

// Scale-dependent variants: 4 sqrt(2) f / sqrt(min_side) + st * sqrt(2 f),
// where min_side = min(c1, c2) of the actual split and st is the standard
// deviation proxy of estimate_sigma_tilde. f = log(4 g log2(2 g)) for the
// run-length form, f = log(n/a) + (3/2) log(log2 n) for the false-alarm form.
double threshold_scale_arl(double gamma_run, std::uint64_t min_side, double sigma_tilde);
double threshold_scale_fa(double alpha, double n, std::uint64_t min_side, double sigma_tilde);

/// Plug-in estimate of sigma_tilde = sqrt(2 E[K(X,X)] - E[K(X,Y)]), the
/// variance proxy of the scale-dependent thresholds. The off-diagonal mean
/// runs over distinct index pairs. For the normalized Gaussian kernel the
/// squared value lies in [1, 2].
double estimate_sigma_tilde(const std::vector<std::vector<double>>& sample,
                            const KernelSpec& spec);

enum class PolicyKind { fixed_arl, uniform_fa, scale_arl, scale_fa, monte_carlo };

// One of five calibration strategies mapping (time, split sizes) to the
// rejection threshold. Values are immutable and shareable across threads.
class ThresholdPolicy {
public:
    static ThresholdPolicy fixed_arl(double gamma_run);
    static ThresholdPolicy uniform_fa(double alpha);
    static ThresholdPolicy scale_arl(double gamma_run, double sigma_tilde);
    static ThresholdPolicy scale_fa(double alpha, double sigma_tilde);
    static ThresholdPolicy monte_carlo(double lambda, double target_arl, std::uint64_t seed);
    /// +infinity at every time; only sensible while recording statistics.
    static ThresholdPolicy unreachable();

    /// Threshold for a split with newer-side count c1 and older-side count c2
    /// at absolute time t. `older_unbounded` marks an exactly-known older
    /// side, which drops it from the scale term. Returns +infinity for t < 2,
    /// where the n-indexed sequences are undefined and no test is run.
    double evaluate(std::uint64_t t, std::uint64_t newer_count, std::uint64_t older_count,
                    bool older_unbounded = false) const;

    PolicyKind kind() const { return kind_; }
    bool scale_dependent() const { return kind_ == PolicyKind::scale_arl || kind_ == PolicyKind::scale_fa; }
    std::string describe() const;

private:
    ThresholdPolicy(PolicyKind kind, double a, double b, std::uint64_t seed)
        : kind_(kind), param_a_(a), param_b_(b), seed_(seed) {}

    PolicyKind kind_;
    double param_a_;          // gamma_run | alpha | lambda
    double param_b_;          // sigma_tilde | target_arl
    std::uint64_t seed_ = 0;  // calibration seed (monte_carlo only)
};

// Plain-text calibration table, one file per calibration run. The loader
// accepts any file whose version line it knows.
struct CalibrationTable {
    double target_arl = 0.0;
    std::size_t reps = 0;
    std::uint64_t stream_length = 0;
    std::uint64_t master_seed = 0;
    std::size_t dim = 0;
    std::size_t features = 0;
    double gamma = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level, statistic)

    double lambda() const;  // quantile at level 1 - 1/target_arl
    ThresholdPolicy policy() const;
    void save(std::ostream& out) const;
    static CalibrationTable load(std::istream& in);
};

// Monte-Carlo calibration: runs `reps` null streams of length
// ceil(10 * target_arl) through detectors with an unreachable threshold,
// pools every per-insert peak statistic, and returns the nearest-rank
// (1 - 1/target_arl) quantile as a constant threshold. Replication seeds are
// master_seed ^ index, so the result does not depend on the thread count.
CalibrationTable calibrate_monte_carlo(const DistributionSpec& null_spec, double target_arl,
                                       std::size_t reps, const KernelSpec& kernel,
                                       std::size_t features, std::uint64_t master_seed,
                                       unsigned threads = 1);

/// Nearest-rank quantile: the ceil(p * N)-th order statistic (1-indexed).
double nearest_rank_quantile(std::vector<double> values, double p);

}  // namespace rffcd
