#include "rffcd/thresholds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rffcd/detector.hpp"
#include "rffcd/parallel.hpp"
#include "rffcd/rng.hpp"

namespace rffcd {

namespace {

double log2_of(double x) { return std::log2(x); }

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

double threshold_arl(double gamma_run) {
    if (!(gamma_run > 1.0)) throw std::invalid_argument("threshold_arl: gamma must exceed 1");
    return std::sqrt(2.0) + std::sqrt(2.0 * std::log(4.0 * gamma_run * log2_of(2.0 * gamma_run)));
}

double threshold_fa(double alpha, double n) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("threshold_fa: alpha must be in (0, 1)");
    if (!(n >= 2.0)) throw std::invalid_argument("threshold_fa: needs n >= 2");
    const double term =
        std::log(n / alpha) + 2.0 * std::log(log2_of(n)) + std::log(log2_of(2.0 * n));
    return std::sqrt(2.0) + std::sqrt(2.0 * term);
}

double threshold_scale_arl(double gamma_run, std::uint64_t min_side, double sigma_tilde) {
    if (!(gamma_run > 1.0)) throw std::invalid_argument("threshold_scale_arl: gamma must exceed 1");
    if (min_side == 0) throw std::invalid_argument("threshold_scale_arl: min side must be positive");
    if (!(sigma_tilde >= 0.0))
        throw std::invalid_argument("threshold_scale_arl: sigma tilde must be nonnegative");
    const double f = std::log(4.0 * gamma_run * log2_of(2.0 * gamma_run));
    return 4.0 * std::sqrt(2.0) * f / std::sqrt(static_cast<double>(min_side)) +
           sigma_tilde * std::sqrt(2.0 * f);
}

double threshold_scale_fa(double alpha, double n, std::uint64_t min_side, double sigma_tilde) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("threshold_scale_fa: alpha must be in (0, 1)");
    if (!(n >= 2.0)) throw std::invalid_argument("threshold_scale_fa: needs n >= 2");
    if (min_side == 0) throw std::invalid_argument("threshold_scale_fa: min side must be positive");
    if (!(sigma_tilde >= 0.0))
        throw std::invalid_argument("threshold_scale_fa: sigma tilde must be nonnegative");
    const double f = std::log(n / alpha) + 1.5 * std::log(log2_of(n));
    return 4.0 * std::sqrt(2.0) * f / std::sqrt(static_cast<double>(min_side)) +
           sigma_tilde * std::sqrt(2.0 * f);
}

double estimate_sigma_tilde(const std::vector<std::vector<double>>& sample,
                            const KernelSpec& spec) {
    if (sample.size() < 2)
        throw std::invalid_argument("estimate_sigma_tilde: need at least 2 points");
    const std::size_t n = sample.size();
    double diag = 0.0;
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag += gaussian_kernel(sample[i], sample[i], spec);
        for (std::size_t j = i + 1; j < n; ++j) off += gaussian_kernel(sample[i], sample[j], spec);
    }
    const double mean_diag = diag / static_cast<double>(n);
    const double mean_off = 2.0 * off / (static_cast<double>(n) * static_cast<double>(n - 1));
    return std::sqrt(std::max(0.0, 2.0 * mean_diag - mean_off));
}

ThresholdPolicy ThresholdPolicy::fixed_arl(double gamma_run) {
    threshold_arl(gamma_run);  // validate eagerly
    return {PolicyKind::fixed_arl, gamma_run, 0.0, 0};
}

ThresholdPolicy ThresholdPolicy::uniform_fa(double alpha) {
    threshold_fa(alpha, 2.0);
    return {PolicyKind::uniform_fa, alpha, 0.0, 0};
}

ThresholdPolicy ThresholdPolicy::scale_arl(double gamma_run, double sigma_tilde) {
    threshold_scale_arl(gamma_run, 1, sigma_tilde);
    return {PolicyKind::scale_arl, gamma_run, sigma_tilde, 0};
}

ThresholdPolicy ThresholdPolicy::scale_fa(double alpha, double sigma_tilde) {
    threshold_scale_fa(alpha, 2.0, 1, sigma_tilde);
    return {PolicyKind::scale_fa, alpha, sigma_tilde, 0};
}

ThresholdPolicy ThresholdPolicy::monte_carlo(double lambda, double target_arl,
                                             std::uint64_t seed) {
    return {PolicyKind::monte_carlo, lambda, target_arl, seed};
}

ThresholdPolicy ThresholdPolicy::unreachable() {
    return {PolicyKind::monte_carlo, std::numeric_limits<double>::infinity(), 0.0, 0};
}

double ThresholdPolicy::evaluate(std::uint64_t t, std::uint64_t newer_count,
                                 std::uint64_t older_count, bool older_unbounded) const {
    const bool n_indexed = kind_ == PolicyKind::uniform_fa || kind_ == PolicyKind::scale_fa;
    if (n_indexed && t < 2) return std::numeric_limits<double>::infinity();
    const std::uint64_t min_side =
        older_unbounded ? newer_count : std::min(newer_count, older_count);
    switch (kind_) {
        case PolicyKind::fixed_arl: return threshold_arl(param_a_);
        case PolicyKind::uniform_fa: return threshold_fa(param_a_, static_cast<double>(t));
        case PolicyKind::scale_arl: return threshold_scale_arl(param_a_, min_side, param_b_);
        case PolicyKind::scale_fa:
            return threshold_scale_fa(param_a_, static_cast<double>(t), min_side, param_b_);
        case PolicyKind::monte_carlo: return param_a_;
    }
    return std::numeric_limits<double>::infinity();
}

std::string ThresholdPolicy::describe() const {
    switch (kind_) {
        case PolicyKind::fixed_arl: return "arl:g=" + format_double(param_a_);
        case PolicyKind::uniform_fa: return "fa:a=" + format_double(param_a_);
        case PolicyKind::scale_arl:
            return "scale-arl:g=" + format_double(param_a_) + ",st=" + format_double(param_b_);
        case PolicyKind::scale_fa:
            return "scale-fa:a=" + format_double(param_a_) + ",st=" + format_double(param_b_);
        case PolicyKind::monte_carlo:
            return "mc:lambda=" + format_double(param_a_) + ",target=" + format_double(param_b_) +
                   ",seed=" + std::to_string(seed_);
    }
    return "?";
}

double nearest_rank_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("nearest_rank_quantile: empty input");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("nearest_rank_quantile: bad level");
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     values.end());
    return values[rank - 1];
}

double CalibrationTable::lambda() const {
    if (!(target_arl > 1.0)) throw std::invalid_argument("CalibrationTable: bad target");
    const double want = 1.0 - 1.0 / target_arl;
    for (const auto& [level, value] : quantiles)
        if (std::abs(level - want) <= 1e-12) return value;
    throw std::invalid_argument("CalibrationTable: no quantile recorded at target level");
}

ThresholdPolicy CalibrationTable::policy() const {
    return ThresholdPolicy::monte_carlo(lambda(), target_arl, master_seed);
}

void CalibrationTable::save(std::ostream& out) const {
    out << "rffcd-calibration v1\n";
    out << "target_arl " << format_double(target_arl) << '\n';
    out << "reps " << reps << '\n';
    out << "stream_length " << stream_length << '\n';
    out << "master_seed " << master_seed << '\n';
    out << "dim " << dim << '\n';
    out << "features " << features << '\n';
    out << "gamma " << format_double(gamma) << '\n';
    for (const auto& [level, value] : quantiles)
        out << "quantile " << format_double(level) << ' ' << format_double(value) << '\n';
}

namespace {

[[noreturn]] void load_failed(const std::string& why) {
    throw std::runtime_error("CalibrationTable: " + why);
}

}  // namespace

CalibrationTable CalibrationTable::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "rffcd-calibration v1")
        load_failed("unknown version line");
    CalibrationTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string key;
        row >> key;
        if (key == "target_arl") row >> table.target_arl;
        else if (key == "reps") row >> table.reps;
        else if (key == "stream_length") row >> table.stream_length;
        else if (key == "master_seed") row >> table.master_seed;
        else if (key == "dim") row >> table.dim;
        else if (key == "features") row >> table.features;
        else if (key == "gamma") row >> table.gamma;
        else if (key == "quantile") {
            double level = 0.0, value = 0.0;
            row >> level >> value;
            table.quantiles.emplace_back(level, value);
        } else {
            load_failed("unknown key '" + key + "'");
        }
        if (!row) load_failed("malformed line '" + line + "'");
    }
    return table;
}

CalibrationTable calibrate_monte_carlo(const DistributionSpec& null_spec, double target_arl,
                                       std::size_t reps, const KernelSpec& kernel,
                                       std::size_t features, std::uint64_t master_seed,
                                       unsigned threads) {
    null_spec.validate();
    kernel.validate();
    if (null_spec.dim != kernel.dim)
        throw std::invalid_argument("calibrate_monte_carlo: generator/kernel dimension mismatch");
    if (!(target_arl > 1.0))
        throw std::invalid_argument("calibrate_monte_carlo: target ARL must exceed 1");
    if (reps == 0) throw std::invalid_argument("calibrate_monte_carlo: needs replications");
    if (features == 0) throw std::invalid_argument("calibrate_monte_carlo: needs features");

    const auto length = static_cast<std::uint64_t>(std::ceil(10.0 * target_arl));
    std::vector<std::vector<double>> stats_per_rep(reps);
    parallel_for(reps, threads, [&](std::size_t rep) {
        const std::uint64_t rep_seed = master_seed ^ static_cast<std::uint64_t>(rep);
        Rng stream_rng(derive_seed(rep_seed, 0));
        Detector detector(sample_frequencies(kernel, features, derive_seed(rep_seed, 1)),
                          ThresholdPolicy::unreachable());
        auto& stats = stats_per_rep[rep];
        stats.reserve(length);
        std::vector<double> point;
        for (std::uint64_t t = 0; t < length; ++t) {
            draw_point(null_spec, stream_rng, point);
            stats.push_back(detector.insert(point).peak_stat);
        }
    });

    std::vector<double> pooled;
    for (const auto& stats : stats_per_rep) pooled.insert(pooled.end(), stats.begin(), stats.end());

    CalibrationTable table;
    table.target_arl = target_arl;
    table.reps = reps;
    table.stream_length = length;
    table.master_seed = master_seed;
    table.dim = kernel.dim;
    table.features = features;
    table.gamma = kernel.gamma;
    const double level = 1.0 - 1.0 / target_arl;
    table.quantiles.emplace_back(level, nearest_rank_quantile(std::move(pooled), level));
    return table;
}

}  // namespace rffcd
