#include "rffcd/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rffcd/parallel.hpp"
#include "rffcd/rng.hpp"

namespace rffcd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_cell(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    if (std::nearbyint(v) == v && std::abs(v) < 9.007199254740992e15) {
        const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
        return std::string(buf, res.ptr);
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct MeanWithError {
    double mean = kNaN;
    double stderr_of_mean = kNaN;
};

// Mean and standard error in replication order; order-insensitive inputs
// would give the same result, but a fixed order keeps byte-identical output
// trivially true.
MeanWithError mean_and_stderr(const std::vector<double>& values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

struct StopOutcome {
    std::uint64_t stop_time = 0;
    bool detected = false;
};

/// Feeds one seeded stream through a fresh detector until the first
/// detection or the horizon.
StopOutcome run_until_stop(const DetectorSetup& setup, const DistributionSpec& pre,
                           const DistributionSpec* post, std::uint64_t change_index,
                           std::uint64_t horizon, std::uint64_t rep_seed) {
    Rng stream_rng(derive_seed(rep_seed, 0));
    Detector detector = setup.build(derive_seed(rep_seed, 1));
    std::vector<double> point;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const DistributionSpec& source = (post != nullptr && t > change_index) ? *post : pre;
        draw_point(source, stream_rng, point);
        if (detector.insert(point).detected) return {t, true};
    }
    return {horizon, false};
}

}  // namespace

double ExperimentReport::aggregate(const std::string& name) const {
    for (const auto& [key, value] : aggregates)
        if (key == name) return value;
    throw std::invalid_argument("ExperimentReport: no aggregate named " + name);
}

void ExperimentReport::write_csv(std::ostream& out) const {
    out << "# rffcd-report v1 kind=" << kind << '\n';
    for (const auto& [key, value] : config) out << "# config " << key << '=' << value << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ',';
        out << columns[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_cell(row[i]);
        }
        out << '\n';
    }
    for (const auto& [key, value] : aggregates)
        out << "# aggregate " << key << '=' << format_cell(value) << '\n';
}

Detector DetectorSetup::build(std::uint64_t spectral_seed) const {
    switch (mode) {
        case Mode::two_sample: return {kernel, features, spectral_seed, policy};
        case Mode::with_history:
            return Detector::with_history(kernel, features, spectral_seed, policy, history);
        case Mode::known_prechange:
            return Detector::known_prechange(kernel, features, spectral_seed, policy, reference);
    }
    throw std::logic_error("DetectorSetup: bad mode");
}

std::string DetectorSetup::describe() const {
    std::string out = "kernel=gaussian gamma=" + format_cell(kernel.gamma) +
                      " d=" + std::to_string(kernel.dim) + " r=" + std::to_string(features) +
                      " policy=" + policy.describe();
    switch (mode) {
        case Mode::two_sample: out += " mode=twosample"; break;
        case Mode::with_history:
            out += " mode=history nu=" + std::to_string(history.size());
            break;
        case Mode::known_prechange:
            out += " mode=known ref=" + std::to_string(reference.size());
            break;
    }
    return out;
}

ExperimentReport run_arl(const DetectorSetup& setup, const DistributionSpec& null_spec,
                         std::size_t reps, std::uint64_t horizon, std::uint64_t master_seed,
                         unsigned threads) {
    null_spec.validate();
    if (reps == 0) throw std::invalid_argument("run_arl: needs replications");
    if (horizon == 0) throw std::invalid_argument("run_arl: needs a positive horizon");

    std::vector<StopOutcome> outcomes(reps);
    parallel_for(reps, threads, [&](std::size_t rep) {
        outcomes[rep] = run_until_stop(setup, null_spec, nullptr, 0, horizon,
                                       master_seed ^ static_cast<std::uint64_t>(rep));
    });

    ExperimentReport report;
    report.kind = "arl";
    report.config = {{"detector", setup.describe()},
                     {"null", null_spec.describe()},
                     {"reps", std::to_string(reps)},
                     {"horizon", std::to_string(horizon)},
                     {"master_seed", std::to_string(master_seed)}};
    report.columns = {"rep", "stop_time", "detected", "censored"};
    std::vector<double> stop_times(reps);
    std::size_t censored = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto& o = outcomes[rep];
        stop_times[rep] = static_cast<double>(o.stop_time);
        censored += o.detected ? 0 : 1;
        report.rows.push_back({static_cast<double>(rep), static_cast<double>(o.stop_time),
                               o.detected ? 1.0 : 0.0, o.detected ? 0.0 : 1.0});
    }
    const MeanWithError stop = mean_and_stderr(stop_times);
    report.aggregates = {{"reps", static_cast<double>(reps)},
                         {"arl_mean", stop.mean},
                         {"arl_stderr", stop.stderr_of_mean},
                         {"censored", static_cast<double>(censored)},
                         {"detections", static_cast<double>(reps - censored)}};
    return report;
}

ExperimentReport run_edd(const DetectorSetup& setup, const ChangeStreamSpec& change,
                         std::size_t reps, std::uint64_t post_horizon, std::uint64_t master_seed,
                         unsigned threads) {
    change.validate();
    if (change.change_index == kNoChange)
        throw std::invalid_argument("run_edd: change stream never changes");
    if (reps == 0) throw std::invalid_argument("run_edd: needs replications");
    if (post_horizon == 0) throw std::invalid_argument("run_edd: needs a post-change horizon");

    const std::uint64_t eta = change.change_index;
    const std::uint64_t horizon = eta + post_horizon;
    std::vector<StopOutcome> outcomes(reps);
    parallel_for(reps, threads, [&](std::size_t rep) {
        outcomes[rep] = run_until_stop(setup, change.pre, &change.post, eta, horizon,
                                       master_seed ^ static_cast<std::uint64_t>(rep));
    });

    ExperimentReport report;
    report.kind = "edd";
    report.config = {{"detector", setup.describe()},
                     {"pre", change.pre.describe()},
                     {"post", change.post.describe()},
                     {"eta", std::to_string(eta)},
                     {"post_horizon", std::to_string(post_horizon)},
                     {"reps", std::to_string(reps)},
                     {"master_seed", std::to_string(master_seed)}};
    report.columns = {"rep", "stop_time", "detected", "false_alarm", "censored", "delay"};
    std::vector<double> delays;
    std::vector<double> stop_times(reps);
    std::size_t false_alarms = 0, censored = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto& o = outcomes[rep];
        stop_times[rep] = static_cast<double>(o.stop_time);
        const bool false_alarm = o.detected && o.stop_time <= eta;
        const bool timely = o.detected && o.stop_time > eta;
        false_alarms += false_alarm ? 1 : 0;
        censored += o.detected ? 0 : 1;
        const double delay = timely ? static_cast<double>(o.stop_time - eta) : kNaN;
        if (timely) delays.push_back(delay);
        report.rows.push_back({static_cast<double>(rep), static_cast<double>(o.stop_time),
                               o.detected ? 1.0 : 0.0, false_alarm ? 1.0 : 0.0,
                               o.detected ? 0.0 : 1.0, delay});
    }
    const MeanWithError delay = mean_and_stderr(delays);
    report.aggregates = {{"reps", static_cast<double>(reps)},
                         {"detections", static_cast<double>(delays.size())},
                         {"detection_rate", static_cast<double>(delays.size()) / static_cast<double>(reps)},
                         {"false_alarms", static_cast<double>(false_alarms)},
                         {"censored", static_cast<double>(censored)},
                         {"edd_mean", delay.mean},
                         {"edd_stderr", delay.stderr_of_mean},
                         {"stop_mean", mean_and_stderr(stop_times).mean}};
    return report;
}

double bernstein_epsilon(std::uint64_t min_count, double sigma_tilde_sq, double alpha) {
    if (min_count == 0) throw std::invalid_argument("bernstein_epsilon: needs observations");
    if (!(sigma_tilde_sq > 0.0)) throw std::invalid_argument("bernstein_epsilon: bad variance");
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("bernstein_epsilon: bad level");
    const double m = static_cast<double>(min_count);
    const auto tail = [&](double e) {
        return 2.0 * std::exp(-0.5 * m * e * e / (sigma_tilde_sq + 2.0 * std::sqrt(2.0) * e));
    };
    double lo = 0.0, hi = 1.0;
    while (tail(hi) > alpha) hi *= 2.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ExperimentReport run_threshold_comparison(const ThresholdComparisonConfig& cfg,
                                          std::uint64_t master_seed, unsigned threads) {
    cfg.dist.validate();
    if (cfg.sample_size < 2 || cfg.rounds == 0 || cfg.features == 0)
        throw std::invalid_argument("run_threshold_comparison: bad configuration");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw std::invalid_argument("run_threshold_comparison: alpha must be in (0, 1)");

    const std::size_t n = cfg.sample_size;
    // Fixed pooled sample; bandwidth and variance proxy both come from it.
    Rng base_rng(derive_seed(master_seed, 0));
    std::vector<std::vector<double>> pooled(2 * n);
    for (auto& p : pooled) draw_point(cfg.dist, base_rng, p);
    const KernelSpec kernel = median_heuristic(pooled);
    const double sigma_tilde = estimate_sigma_tilde(pooled, kernel);
    const SpectralSample spectral =
        sample_frequencies(kernel, cfg.features, derive_seed(master_seed, 1));
    const std::uint64_t fresh_master = derive_seed(master_seed, 2);
    const std::uint64_t perm_master = derive_seed(master_seed, 3);

    // Feature maps of the fixed sample, reused by every permutation round.
    const std::size_t dims = 2 * cfg.features;
    std::vector<std::vector<double>> pooled_features(2 * n);
    parallel_for(2 * n, threads, [&](std::size_t i) {
        pooled_features[i] = feature_map(pooled[i], spectral);
    });

    std::vector<double> fresh(cfg.rounds), perm(cfg.rounds);
    parallel_for(cfg.rounds, threads, [&](std::size_t round) {
        // Fresh resampling draw.
        Rng rng(derive_seed(fresh_master ^ static_cast<std::uint64_t>(round), 0));
        std::vector<double> point, z(dims);
        std::vector<double> mean_x(dims, 0.0), mean_y(dims, 0.0);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            draw_point(cfg.dist, rng, point);
            feature_map_into(point, spectral, z);
            auto& mean = i < n ? mean_x : mean_y;
            for (std::size_t k = 0; k < dims; ++k) mean[k] += z[k];
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            const double d = (mean_x[k] - mean_y[k]) / static_cast<double>(n);
            acc += d * d;
        }
        fresh[round] = std::sqrt(acc);
    });
    parallel_for(cfg.rounds, threads, [&](std::size_t round) {
        // Permutation of the fixed sample.
        Rng rng(derive_seed(perm_master ^ static_cast<std::uint64_t>(round), 0));
        std::vector<std::size_t> idx(2 * n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        std::vector<double> diff(dims, 0.0);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            const double sign = i < n ? 1.0 : -1.0;
            const auto& z = pooled_features[idx[i]];
            for (std::size_t k = 0; k < dims; ++k) diff[k] += sign * z[k];
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            const double d = diff[k] / static_cast<double>(n);
            acc += d * d;
        }
        perm[round] = std::sqrt(acc);
    });

    const double level = 1.0 - cfg.alpha;
    const double fresh_quantile = nearest_rank_quantile(fresh, level);
    const double perm_quantile = nearest_rank_quantile(perm, level);
    // Matched normalization: the tail bounds control sqrt(nm/(n+m)) * MMD.
    const double norm = std::sqrt(static_cast<double>(n) / 2.0);
    const double bound_free =
        (std::sqrt(2.0) + std::sqrt(2.0 * std::log(1.0 / cfg.alpha))) / norm;
    const double bound_bernstein =
        bernstein_epsilon(n, sigma_tilde * sigma_tilde, cfg.alpha);

    ExperimentReport report;
    report.kind = "threshold-comparison";
    report.config = {{"dist", cfg.dist.describe()},
                     {"n", std::to_string(n)},
                     {"features", std::to_string(cfg.features)},
                     {"rounds", std::to_string(cfg.rounds)},
                     {"alpha", format_cell(cfg.alpha)},
                     {"master_seed", std::to_string(master_seed)}};
    report.columns = {"round", "fresh_mmd", "perm_mmd"};
    for (std::size_t round = 0; round < cfg.rounds; ++round)
        report.rows.push_back({static_cast<double>(round), fresh[round], perm[round]});
    report.aggregates = {
        {"gamma", kernel.gamma},
        {"sigma_tilde", sigma_tilde},
        {"fresh_quantile", fresh_quantile},
        {"perm_quantile", perm_quantile},
        {"bound_distribution_free", bound_free},
        {"bound_bernstein", bound_bernstein},
        {"bounds_cover_quantiles",
         (bound_free >= std::max(fresh_quantile, perm_quantile) &&
          bound_bernstein >= std::max(fresh_quantile, perm_quantile))
             ? 1.0
             : 0.0}};
    return report;
}

}  // namespace rffcd
