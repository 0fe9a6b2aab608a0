#include "rffcd/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rffcd {

void merge_equal_tail(std::vector<WindowSummary>& windows, std::uint64_t* work) {
    while (windows.size() >= 2) {
        WindowSummary& newer = windows[windows.size() - 1];
        WindowSummary& older = windows[windows.size() - 2];
        if (work) *work += 2;
        if (newer.count != older.count) break;
        for (std::size_t i = 0; i < older.feature_sum.size(); ++i)
            older.feature_sum[i] += newer.feature_sum[i];
        older.count += newer.count;
        windows.pop_back();
    }
}

Detector::Detector(SpectralSample spectral, ThresholdPolicy policy, Mode mode,
                   std::optional<MeanEmbedding> side_info)
    : spectral_(std::move(spectral)),
      policy_(std::move(policy)),
      mode_(mode),
      side_info_(std::move(side_info)) {
    if (spectral_.count == 0) throw std::invalid_argument("Detector: needs at least one feature");
    if (mode_ != Mode::two_sample) {
        if (!side_info_) throw std::invalid_argument("Detector: mode requires side information");
        if (side_info_->mean.size() != 2 * spectral_.count)
            throw std::invalid_argument("Detector: embedding length does not match feature count");
        if (mode_ == Mode::with_history && side_info_->count == 0)
            throw std::invalid_argument("Detector: history must be nonempty");
        if (mode_ == Mode::with_history) {
            side_sum_.resize(side_info_->mean.size());
            for (std::size_t i = 0; i < side_sum_.size(); ++i)
                side_sum_[i] = side_info_->mean[i] * static_cast<double>(side_info_->count);
        }
    }
    scratch_feature_.resize(2 * spectral_.count);
    scratch_total_.resize(2 * spectral_.count);
    scratch_prefix_.resize(2 * spectral_.count);
}

Detector::Detector(const KernelSpec& kernel, std::size_t features, std::uint64_t seed,
                   ThresholdPolicy policy)
    : Detector(sample_frequencies(kernel, features, seed), std::move(policy)) {}

Detector::Detector(SpectralSample spectral, ThresholdPolicy policy)
    : Detector(std::move(spectral), std::move(policy), Mode::two_sample, std::nullopt) {}

Detector Detector::with_history(const KernelSpec& kernel, std::size_t features,
                                std::uint64_t seed, ThresholdPolicy policy,
                                const std::vector<std::vector<double>>& history) {
    return with_history(sample_frequencies(kernel, features, seed), std::move(policy), history);
}

Detector Detector::with_history(SpectralSample spectral, ThresholdPolicy policy,
                                const std::vector<std::vector<double>>& history) {
    if (history.empty()) throw std::invalid_argument("Detector: history must be nonempty");
    MeanEmbedding embedding = mean_embedding(history, spectral);
    return Detector(std::move(spectral), std::move(policy), Mode::with_history,
                    std::move(embedding));
}

Detector Detector::known_prechange(const KernelSpec& kernel, std::size_t features,
                                   std::uint64_t seed, ThresholdPolicy policy,
                                   const std::vector<std::vector<double>>& reference) {
    SpectralSample spectral = sample_frequencies(kernel, features, seed);
    if (reference.empty())
        throw std::invalid_argument("Detector: pre-change reference must be nonempty");
    MeanEmbedding embedding = mean_embedding(reference, spectral);
    return known_prechange(std::move(spectral), std::move(policy), std::move(embedding));
}

Detector Detector::known_prechange(SpectralSample spectral, ThresholdPolicy policy,
                                   MeanEmbedding embedding) {
    return Detector(std::move(spectral), std::move(policy), Mode::known_prechange,
                    std::move(embedding));
}

SweepResult Detector::run_sweep(std::uint64_t* work) const {
    const std::size_t n_windows = windows_.size();
    const std::size_t dims = 2 * spectral_.count;
    SweepResult result;
    result.best_stat = -1.0;

    std::uint64_t total_count = 0;
    std::fill(scratch_total_.begin(), scratch_total_.end(), 0.0);
    for (const auto& w : windows_) {
        for (std::size_t k = 0; k < dims; ++k) scratch_total_[k] += w.feature_sum[k];
        total_count += w.count;
    }

    std::fill(scratch_prefix_.begin(), scratch_prefix_.end(), 0.0);
    std::uint64_t prefix_count = 0;
    const bool known = mode_ == Mode::known_prechange;
    const bool history = mode_ == Mode::with_history && side_info_.has_value();
    const std::uint64_t history_count = history ? side_info_->count : 0;

    for (std::size_t split = 0; split < n_windows; ++split) {
        if (split > 0) {
            const auto& w = windows_[split - 1];
            for (std::size_t k = 0; k < dims; ++k) scratch_prefix_[k] += w.feature_sum[k];
            prefix_count += w.count;
        }
        if (split < min_split()) continue;
        if (work) ++*work;

        const std::uint64_t newer_count = total_count - prefix_count;
        double acc = 0.0;
        SplitStat s;
        s.split = split;
        s.newer_count = newer_count;
        const double inv_new = 1.0 / static_cast<double>(newer_count);
        if (known) {
            s.older_unbounded = true;
            const double* emb = side_info_->mean.data();
            for (std::size_t k = 0; k < dims; ++k) {
                const double d = (scratch_total_[k] - scratch_prefix_[k]) * inv_new - emb[k];
                acc += d * d;
            }
            s.stat = std::sqrt(static_cast<double>(newer_count)) * std::sqrt(acc);
        } else {
            const std::uint64_t older_count = prefix_count + history_count;
            s.older_count = older_count;
            const double inv_old = 1.0 / static_cast<double>(older_count);
            if (history) {
                for (std::size_t k = 0; k < dims; ++k) {
                    const double d = (scratch_total_[k] - scratch_prefix_[k]) * inv_new -
                                     (side_sum_[k] + scratch_prefix_[k]) * inv_old;
                    acc += d * d;
                }
            } else {
                for (std::size_t k = 0; k < dims; ++k) {
                    const double d = (scratch_total_[k] - scratch_prefix_[k]) * inv_new -
                                     scratch_prefix_[k] * inv_old;
                    acc += d * d;
                }
            }
            s.stat = normalized_stat(newer_count, older_count, std::sqrt(acc));
        }
        s.threshold = policy_.evaluate(time_, s.newer_count, s.older_count, s.older_unbounded);
        if (s.stat > result.best_stat) {
            result.best_stat = s.stat;
            result.best_split = split;
        }
        result.splits.push_back(s);
    }
    if (result.splits.empty()) result.best_stat = 0.0;
    return result;
}

SweepResult Detector::detect_sweep() const {
    if (windows_.size() < min_split() + 1)
        throw std::invalid_argument("detect_sweep: too few windows for the mode");
    return run_sweep(nullptr);
}

std::uint64_t Detector::estimated_change_index(std::size_t split) const {
    if (split < min_split() || split >= windows_.size())
        throw std::invalid_argument("estimated_change_index: invalid split");
    std::uint64_t prefix = 0;
    for (std::size_t i = 0; i < split; ++i) prefix += windows_[i].count;
    return origin_ - 1 + prefix;
}

Verdict Detector::insert(std::span<const double> x) {
    if (x.size() != spectral_.dim) throw std::invalid_argument("insert: dimension mismatch");
    ++time_;
    feature_map_into(x, spectral_, scratch_feature_);
    windows_.push_back(WindowSummary{scratch_feature_, 1});
    ++work_;

    Verdict verdict;
    verdict.threshold_used = std::numeric_limits<double>::infinity();
    if (windows_.size() >= min_split() + 1) {
        const SweepResult sweep = run_sweep(&work_);
        verdict.peak_stat = sweep.best_stat;

        // Report the exceeding split with the largest statistic (ties break
        // toward the smaller index via strict comparison).
        const SplitStat* chosen = nullptr;
        for (const SplitStat& s : sweep.splits) {
            if (s.stat >= s.threshold && (!chosen || s.stat > chosen->stat)) chosen = &s;
        }
        if (chosen) {
            verdict.detected = true;
            verdict.detection_time = time_;
            verdict.estimated_change = estimated_change_index(chosen->split);
            verdict.threshold_used = chosen->threshold;

            if (reset_policy_ == ResetPolicy::clear_all) {
                work_ += windows_.size();
                windows_.clear();
                origin_ = time_ + 1;
            } else {
                work_ += chosen->split;
                windows_.erase(windows_.begin(),
                               windows_.begin() + static_cast<std::ptrdiff_t>(chosen->split));
                origin_ = verdict.estimated_change + 1;
            }
            if (mode_ == Mode::with_history) side_info_.reset();
        } else if (!sweep.splits.empty()) {
            // Echo the threshold at the peak split for observability.
            for (const SplitStat& s : sweep.splits)
                if (s.split == sweep.best_split) verdict.threshold_used = s.threshold;
        }
    }
    maintain();
    return verdict;
}

void Detector::maintain() { merge_equal_tail(windows_, &work_); }

bool Detector::structure_valid() const {
    std::uint64_t sum = 0;
    std::uint64_t previous = std::numeric_limits<std::uint64_t>::max();
    for (const auto& w : windows_) {
        if (w.count == 0 || (w.count & (w.count - 1)) != 0) return false;
        if (w.count >= previous) return false;
        previous = w.count;
        sum += w.count;
    }
    return sum == retained();
}

}  // namespace rffcd
