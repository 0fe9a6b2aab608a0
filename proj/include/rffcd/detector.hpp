#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rffcd/kernel.hpp"
#include "rffcd/mmd.hpp"
#include "rffcd/rff.hpp"
#include "rffcd/thresholds.hpp"

namespace rffcd {

/// One dyadic block: running sum (not mean) of the feature maps of its
/// observations, plus their count. After maintenance every count is a power
/// of two.
struct WindowSummary {
    std::vector<double> feature_sum;
    std::uint64_t count = 0;
};

enum class Mode { two_sample, with_history, known_prechange };

/// What to discard when a change is declared: the windows at or before the
/// estimated split (keeping post-change data as a warm restart), or all of
/// them.
enum class ResetPolicy { drop_prefix, clear_all };

struct Verdict {
    bool detected = false;
    std::uint64_t detection_time = 0;   // absolute index t, when detected
    std::uint64_t estimated_change = 0; // last pre-change observation, when detected
    double peak_stat = 0.0;             // maximal normalized statistic this insert
    double threshold_used = 0.0;
};

struct SplitStat {
    std::size_t split = 0;            // number of retained windows on the older side
    std::uint64_t newer_count = 0;    // c1
    std::uint64_t older_count = 0;    // c2, including any folded history
    bool older_unbounded = false;     // known pre-change comparison
    double stat = 0.0;
    double threshold = 0.0;
};

struct SweepResult {
    std::size_t best_split = 0;
    double best_stat = 0.0;
    std::vector<SplitStat> splits;
};

/// Binary-counter maintenance: repeatedly pops the two newest windows,
/// merging them while their counts match. `work`, when given, is incremented
/// by 2 for every popped pair. Exposed for direct structure tests.
void merge_equal_tail(std::vector<WindowSummary>& windows, std::uint64_t* work = nullptr);

// Streaming change detector over a self-maintaining dyadic window structure.
//
// Every insert appends a count-1 window, sweeps all window boundaries with
// memoized prefix/suffix sums of (feature_sum, count), compares each
// normalized statistic against the policy threshold, and then restores the
// binary-decomposition invariant by merging equal-count windows. Per insert
// this is O(r log n) time; the live state is O(r log n) numbers.
//
// Single writer: one insert at a time. Distinct detectors are independent
// and may run on distinct threads.
class Detector {
public:
    Detector(const KernelSpec& kernel, std::size_t features, std::uint64_t seed,
             ThresholdPolicy policy);
    Detector(SpectralSample spectral, ThresholdPolicy policy);

    /// Historical pre-change observations are folded into the older side of
    /// every split as a fixed mean embedding with its own count. The history
    /// is dropped after the first detection.
    static Detector with_history(const KernelSpec& kernel, std::size_t features,
                                 std::uint64_t seed, ThresholdPolicy policy,
                                 const std::vector<std::vector<double>>& history);
    static Detector with_history(SpectralSample spectral, ThresholdPolicy policy,
                                 const std::vector<std::vector<double>>& history);

    /// Exactly known pre-change distribution, represented by the mean feature
    /// embedding of a large reference sample. Every window suffix is compared
    /// against it with normalization sqrt(suffix count); the embedding's own
    /// sample size is treated as unbounded.
    static Detector known_prechange(const KernelSpec& kernel, std::size_t features,
                                    std::uint64_t seed, ThresholdPolicy policy,
                                    const std::vector<std::vector<double>>& reference);
    static Detector known_prechange(SpectralSample spectral, ThresholdPolicy policy,
                                    MeanEmbedding embedding);

    Verdict insert(std::span<const double> x);

    /// Statistics of every split of the current state. Requires at least two
    /// windows (two-sample) or one window (other modes).
    SweepResult detect_sweep() const;

    /// Absolute index of the last pre-change observation implied by a split.
    std::uint64_t estimated_change_index(std::size_t split) const;

    /// Cumulative window visits (appends, sweep evaluations, maintenance
    /// pops, detection drops) across all inserts; grows as O(log n) per
    /// insert amortized.
    std::uint64_t work_counter() const { return work_; }

    const std::vector<WindowSummary>& windows() const { return windows_; }
    std::uint64_t time() const { return time_; }
    std::uint64_t origin() const { return origin_; }
    std::uint64_t retained() const { return time_ - origin_ + 1; }
    Mode mode() const { return mode_; }
    const SpectralSample& spectral() const { return spectral_; }
    const ThresholdPolicy& policy() const { return policy_; }
    void set_reset_policy(ResetPolicy p) { reset_policy_ = p; }

    /// True when window counts are strictly decreasing distinct powers of two
    /// summing to the retained count.
    bool structure_valid() const;

private:
    Detector(SpectralSample spectral, ThresholdPolicy policy, Mode mode,
             std::optional<MeanEmbedding> side_info);

    std::size_t min_split() const { return mode_ == Mode::two_sample || !side_info_ ? 1 : 0; }
    SweepResult run_sweep(std::uint64_t* work) const;
    void maintain();

    SpectralSample spectral_;
    ThresholdPolicy policy_;
    Mode mode_;
    ResetPolicy reset_policy_ = ResetPolicy::drop_prefix;
    std::optional<MeanEmbedding> side_info_;  // history or pre-change embedding
    std::vector<double> side_sum_;            // history mean scaled by its count
    std::vector<WindowSummary> windows_;
    std::uint64_t time_ = 0;
    std::uint64_t origin_ = 1;
    std::uint64_t work_ = 0;
    // insert-path scratch; a Detector is single-writer by contract
    mutable std::vector<double> scratch_feature_;
    mutable std::vector<double> scratch_total_;
    mutable std::vector<double> scratch_prefix_;
};

}  // namespace rffcd
