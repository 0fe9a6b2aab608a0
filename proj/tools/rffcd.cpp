// Streaming change detection over random Fourier features: detect on CSV/IDX
// streams, print threshold tables, calibrate Monte-Carlo thresholds, and run
// run-length / detection-delay benchmarks.
//
// Exit codes: 0 ok, 2 input error, 3 detection with --halt-on-first,
// 4 configuration error.

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rffcd/bench.hpp"
#include "rffcd/detector.hpp"
#include "rffcd/rng.hpp"
#include "rffcd/streams.hpp"
#include "rffcd/thresholds.hpp"

namespace {

using namespace rffcd;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDetected = 3;
constexpr int kExitConfig = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_sig6(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == sep) {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

double parse_number(const std::string& text, const std::string& what) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("cannot parse " + what + " from '" + text + "'");
    return value;
}

// Generator specs: family:key=value,... with keys d, mean, scale, sep.
// Examples: "gaussian:d=20", "gaussian:d=5,mean=0.5", "laplace:d=2,scale=2",
// "uniform:d=3,scale=1.5", "mixture:d=20,sep=2".
DistributionSpec parse_dist(const std::string& text) {
    const auto head = split(text, ':');
    if (head.empty() || head.size() > 2) throw ConfigError("bad generator spec '" + text + "'");
    std::size_t dim = 0;
    double mean = 0.0, scale = 1.0, sep = 2.0;
    if (head.size() == 2) {
        for (const auto& kv : split(head[1], ',')) {
            const auto pair = split(kv, '=');
            if (pair.size() != 2) throw ConfigError("bad generator option '" + kv + "'");
            if (pair[0] == "d") dim = static_cast<std::size_t>(parse_number(pair[1], "d"));
            else if (pair[0] == "mean") mean = parse_number(pair[1], "mean");
            else if (pair[0] == "scale") scale = parse_number(pair[1], "scale");
            else if (pair[0] == "sep") sep = parse_number(pair[1], "sep");
            else throw ConfigError("unknown generator option '" + pair[0] + "'");
        }
    }
    if (dim == 0) throw ConfigError("generator spec '" + text + "' needs d=<dim>");
    const std::vector<double> means(dim, mean), scales(dim, scale);
    if (head[0] == "gaussian") return DistributionSpec::gaussian(means, scales);
    if (head[0] == "laplace") return DistributionSpec::laplace(means, scales);
    if (head[0] == "uniform") return DistributionSpec::uniform_cube(means, scales);
    if (head[0] == "mixture") return DistributionSpec::two_component_mixture(dim, sep);
    throw ConfigError("unknown generator family '" + head[0] + "'");
}

struct PolicyRequest {
    std::string text;

    /// Syntax-only check so configuration errors surface before any input is
    /// read; mc tables are opened later by resolve().
    void validate() const {
        const auto parts = split(text, ':');
        if (parts.empty() || parts[0].empty()) throw ConfigError("empty --policy");
        const std::string& name = parts[0];
        if (name != "arl" && name != "fa" && name != "scale-arl" && name != "scale-fa" &&
            name != "mc")
            throw ConfigError("unknown policy '" + name + "'");
        if (parts.size() != 2 || parts[1].empty())
            throw ConfigError("--policy " + name + " needs one argument");
        if (name != "mc") parse_number(parts[1], "policy argument");
        if (name == "arl" || name == "scale-arl") {
            if (!(parse_number(parts[1], "gamma") > 1.0))
                throw ConfigError("policy target run length must exceed 1");
        }
        if (name == "fa" || name == "scale-fa") {
            const double alpha = parse_number(parts[1], "alpha");
            if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("policy alpha must be in (0, 1)");
        }
    }

    // Scale-dependent policies need a sigma-tilde value; `sample` provides
    // the plug-in estimate when --sigma-tilde was not given.
    ThresholdPolicy resolve(std::optional<double> sigma_tilde,
                            const std::vector<std::vector<double>>* sample,
                            const KernelSpec* kernel) const {
        const auto parts = split(text, ':');
        if (parts.empty() || parts[0].empty()) throw ConfigError("empty --policy");
        const std::string& name = parts[0];
        const auto need_arg = [&]() -> const std::string& {
            if (parts.size() != 2 || parts[1].empty())
                throw ConfigError("--policy " + name + " needs one argument");
            return parts[1];
        };
        const auto sigma = [&]() -> double {
            if (sigma_tilde) return *sigma_tilde;
            if (sample && kernel && sample->size() >= 2)
                return estimate_sigma_tilde(*sample, *kernel);
            throw ConfigError(
                "scale policies need --sigma-tilde or a fitting sample "
                "(--median K, --median-pilot K, or history mode)");
        };
        if (name == "arl") return ThresholdPolicy::fixed_arl(parse_number(need_arg(), "gamma"));
        if (name == "fa") return ThresholdPolicy::uniform_fa(parse_number(need_arg(), "alpha"));
        if (name == "scale-arl")
            return ThresholdPolicy::scale_arl(parse_number(need_arg(), "gamma"), sigma());
        if (name == "scale-fa")
            return ThresholdPolicy::scale_fa(parse_number(need_arg(), "alpha"), sigma());
        if (name == "mc") {
            std::ifstream in(need_arg());
            if (!in) throw InputError("cannot open calibration table " + parts[1]);
            return CalibrationTable::load(in).policy();
        }
        throw ConfigError("unknown policy '" + name + "'");
    }
};

struct DetectArgs {
    std::string input;
    std::string format = "auto";  // auto | csv | idx
    double gamma = 0.0;
    std::size_t median_k = 0;
    std::size_t features = 200;
    std::uint64_t seed = 1;
    PolicyRequest policy;
    std::string mode = "twosample";
    bool halt_on_first = false;
    bool clear_on_detect = false;
    std::optional<double> sigma_tilde;
    std::string out_path;
};

std::vector<std::vector<double>> load_observations(const DetectArgs& args) {
    const bool idx = args.format == "idx" ||
                     (args.format == "auto" &&
                      (args.input.ends_with(".idx") || args.input.ends_with("-ubyte")));
    if (args.input == "-") {
        if (args.format == "idx") throw ConfigError("IDX input requires a file path, not stdin");
        return read_csv(std::cin);
    }
    if (idx) return read_idx(args.input);
    return read_csv_file(args.input);
}

int cmd_detect(const DetectArgs& args) {
    args.policy.validate();
    if (args.median_k == 0 && !(args.gamma > 0.0))
        throw ConfigError("detect needs --gamma or --median K");
    {
        const auto mode_name = split(args.mode, ':')[0];
        if (mode_name != "twosample" && mode_name != "history" && mode_name != "known")
            throw ConfigError("unknown mode '" + mode_name + "'");
    }

    const auto observations = load_observations(args);
    std::ostream* out = &std::cout;
    std::ofstream out_file;
    if (!args.out_path.empty()) {
        out_file.open(args.out_path);
        if (!out_file) throw InputError("cannot open output file " + args.out_path);
        out = &out_file;
    }
    if (observations.empty()) {
        std::cerr << "rffcd: 0 observations processed\n";
        return kExitOk;
    }

    const std::size_t dim = observations.front().size();
    KernelSpec kernel{args.gamma, dim};
    std::vector<std::vector<double>> fit_sample;
    if (args.median_k > 0) {
        const std::size_t k = std::min<std::size_t>(args.median_k, observations.size());
        fit_sample.assign(observations.begin(), observations.begin() + k);
        kernel = median_heuristic(fit_sample);
    } else if (!(args.gamma > 0.0)) {
        throw ConfigError("detect needs --gamma or --median K");
    }

    const auto mode_parts = split(args.mode, ':');
    std::vector<std::vector<double>> side_sample;
    if (mode_parts[0] != "twosample") {
        if (mode_parts.size() != 2) throw ConfigError("--mode " + mode_parts[0] + " needs a path");
        side_sample = read_csv_file(mode_parts[1]);
        if (fit_sample.empty()) fit_sample = side_sample;
    }
    const auto* sigma_sample = fit_sample.empty() ? nullptr : &fit_sample;
    ThresholdPolicy policy = args.policy.resolve(args.sigma_tilde, sigma_sample, &kernel);

    std::optional<Detector> detector;
    if (mode_parts[0] == "twosample") {
        detector.emplace(kernel, args.features, args.seed, policy);
    } else if (mode_parts[0] == "history") {
        detector = Detector::with_history(kernel, args.features, args.seed, policy, side_sample);
    } else if (mode_parts[0] == "known") {
        detector = Detector::known_prechange(kernel, args.features, args.seed, policy, side_sample);
    } else {
        throw ConfigError("unknown mode '" + mode_parts[0] + "'");
    }
    if (args.clear_on_detect) detector->set_reset_policy(ResetPolicy::clear_all);

    for (const auto& x : observations) {
        if (x.size() != dim) throw InputError("observation dimension changed mid-stream");
        const Verdict v = detector->insert(x);
        if (v.detected) {
            *out << v.detection_time << ',' << v.estimated_change << ','
                 << format_double(v.peak_stat) << ',' << format_double(v.threshold_used) << '\n';
            if (args.halt_on_first) return kExitDetected;
        }
    }
    return kExitOk;
}

struct ThresholdsArgs {
    PolicyRequest policy;
    std::string grid = "2,8,32,128,512,1024,4096";
    std::optional<double> sigma_tilde;
    std::uint64_t min_side = 0;  // scale policies evaluate at this split size
};

int cmd_thresholds(const ThresholdsArgs& args) {
    ThresholdPolicy policy = args.policy.resolve(args.sigma_tilde, nullptr, nullptr);
    std::cout << "n,lambda\n";
    for (const auto& cell : split(args.grid, ',')) {
        const auto n = static_cast<std::uint64_t>(parse_number(cell, "grid entry"));
        if (n < 2) throw ConfigError("threshold grid entries must be at least 2");
        const std::uint64_t side =
            args.min_side > 0 ? args.min_side : std::max<std::uint64_t>(n / 2, 1);
        std::cout << n << ',' << format_sig6(policy.evaluate(n, side, n - side)) << '\n';
    }
    return kExitOk;
}

struct CalibrateArgs {
    std::string null_spec = "gaussian:d=1";
    double target_arl = 0.0;
    std::size_t reps = 100;
    double gamma = 0.0;
    std::size_t median_pilot = 0;
    std::size_t features = 200;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out_path;
};

int cmd_calibrate(const CalibrateArgs& args) {
    const DistributionSpec null_spec = parse_dist(args.null_spec);
    KernelSpec kernel{args.gamma, null_spec.dim};
    if (args.median_pilot > 0) {
        ChangeStreamSpec pilot{null_spec, null_spec, kNoChange, derive_seed(args.seed, 101)};
        kernel = median_heuristic(draw_stream(pilot, args.median_pilot));
    } else if (!(args.gamma > 0.0)) {
        throw ConfigError("calibrate needs --gamma or --median-pilot K");
    }
    const CalibrationTable table = calibrate_monte_carlo(
        null_spec, args.target_arl, args.reps, kernel, args.features, args.seed, args.threads);
    if (args.out_path.empty()) {
        table.save(std::cout);
    } else {
        std::ofstream out(args.out_path);
        if (!out) throw InputError("cannot open output file " + args.out_path);
        table.save(out);
    }
    return kExitOk;
}

struct BenchArgs {
    std::string experiment;  // arl | edd | threshold-comparison
    std::string pre = "gaussian:d=20";
    std::string post = "mixture:d=20,sep=2";
    std::uint64_t eta = 64;
    std::size_t reps = 100;
    std::uint64_t horizon = 0;
    std::uint64_t post_horizon = 1024;
    double gamma = 0.0;
    std::size_t median_pilot = 0;
    std::size_t features = 200;
    PolicyRequest policy;
    std::optional<double> sigma_tilde;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out_path;
    // threshold-comparison knobs
    std::size_t sample_size = 1000;
    std::size_t rounds = 1000;
    double alpha = 0.01;
};

int cmd_bench(const BenchArgs& args) {
    ExperimentReport report;
    if (args.experiment == "threshold-comparison") {
        ThresholdComparisonConfig cfg;
        cfg.dist = parse_dist(args.pre);
        cfg.sample_size = args.sample_size;
        cfg.features = args.features;
        cfg.rounds = args.rounds;
        cfg.alpha = args.alpha;
        report = run_threshold_comparison(cfg, args.seed, args.threads);
    } else {
        const DistributionSpec pre = parse_dist(args.pre);
        KernelSpec kernel{args.gamma, pre.dim};
        std::vector<std::vector<double>> pilot;
        if (args.median_pilot > 0) {
            ChangeStreamSpec ps{pre, pre, kNoChange, derive_seed(args.seed, 101)};
            pilot = draw_stream(ps, args.median_pilot);
            kernel = median_heuristic(pilot);
        } else if (!(args.gamma > 0.0)) {
            throw ConfigError("bench needs --gamma or --median-pilot K");
        }
        const auto* sigma_sample = pilot.empty() ? nullptr : &pilot;
        DetectorSetup setup{kernel, args.features,
                            args.policy.resolve(args.sigma_tilde, sigma_sample, &kernel)};
        if (args.experiment == "arl") {
            if (args.horizon == 0) throw ConfigError("bench arl needs --horizon");
            report = run_arl(setup, pre, args.reps, args.horizon, args.seed, args.threads);
        } else if (args.experiment == "edd") {
            ChangeStreamSpec change{pre, parse_dist(args.post), args.eta, 0};
            report = run_edd(setup, change, args.reps, args.post_horizon, args.seed, args.threads);
        } else {
            throw ConfigError("unknown experiment '" + args.experiment + "'");
        }
    }
    if (args.out_path.empty()) {
        report.write_csv(std::cout);
    } else {
        std::ofstream out(args.out_path);
        if (!out) throw InputError("cannot open output file " + args.out_path);
        report.write_csv(out);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online change point detection with random Fourier feature MMD statistics"};
    app.require_subcommand(1);

    DetectArgs detect;
    auto* cmd_d = app.add_subcommand("detect", "stream observations through a detector");
    cmd_d->add_option("--input", detect.input, "CSV path, '-' for stdin, or IDX file")->required();
    cmd_d->add_option("--format", detect.format, "auto|csv|idx")
        ->check(CLI::IsMember({"auto", "csv", "idx"}));
    cmd_d->add_option("--gamma", detect.gamma, "Gaussian kernel bandwidth");
    cmd_d->add_option("--median", detect.median_k, "fit gamma on the first K observations");
    cmd_d->add_option("--features,-r", detect.features, "number of random features")
        ->check(CLI::PositiveNumber);
    cmd_d->add_option("--seed", detect.seed, "spectral sample seed");
    cmd_d->add_option("--policy", detect.policy.text,
                      "arl:G | fa:A | scale-arl:G | scale-fa:A | mc:PATH")
        ->required();
    cmd_d->add_option("--mode", detect.mode, "twosample | history:PATH | known:PATH");
    cmd_d->add_flag("--halt-on-first", detect.halt_on_first, "stop at the first detection");
    cmd_d->add_flag("--clear-on-detect", detect.clear_on_detect,
                    "discard all windows on detection instead of the pre-change prefix");
    cmd_d->add_option("--sigma-tilde", detect.sigma_tilde, "variance proxy for scale policies");
    cmd_d->add_option("--out", detect.out_path, "write event lines here instead of stdout");

    ThresholdsArgs thresholds;
    auto* cmd_t = app.add_subcommand("thresholds", "print a threshold table");
    cmd_t->add_option("--policy", thresholds.policy.text, "policy spec")->required();
    cmd_t->add_option("--grid", thresholds.grid, "comma-separated times");
    cmd_t->add_option("--sigma-tilde", thresholds.sigma_tilde, "variance proxy for scale policies");
    cmd_t->add_option("--min-side", thresholds.min_side,
                      "split size for scale policies (default n/2)");

    CalibrateArgs calibrate;
    auto* cmd_c = app.add_subcommand("calibrate", "Monte-Carlo threshold calibration");
    cmd_c->add_option("--null", calibrate.null_spec, "null generator spec")->required();
    cmd_c->add_option("--target-arl", calibrate.target_arl, "target average run length")
        ->required();
    cmd_c->add_option("--reps", calibrate.reps, "Monte-Carlo replications");
    cmd_c->add_option("--gamma", calibrate.gamma, "Gaussian kernel bandwidth");
    cmd_c->add_option("--median-pilot", calibrate.median_pilot,
                      "fit gamma on a pilot null sample of this size");
    cmd_c->add_option("--features,-r", calibrate.features, "number of random features");
    cmd_c->add_option("--seed", calibrate.seed, "master seed");
    cmd_c->add_option("--threads", calibrate.threads, "worker threads (0 = all cores)");
    cmd_c->add_option("--out", calibrate.out_path, "calibration table path");

    BenchArgs bench;
    auto* cmd_b = app.add_subcommand("bench", "run-length / detection-delay experiments");
    cmd_b->add_option("experiment", bench.experiment, "arl | edd | threshold-comparison")
        ->required();
    cmd_b->add_option("--pre", bench.pre, "pre-change (or null) generator spec");
    cmd_b->add_option("--post", bench.post, "post-change generator spec (edd)");
    cmd_b->add_option("--eta", bench.eta, "change index (edd)");
    cmd_b->add_option("--reps", bench.reps, "replications");
    cmd_b->add_option("--horizon", bench.horizon, "censoring horizon (arl)");
    cmd_b->add_option("--post-horizon", bench.post_horizon, "post-change budget (edd)");
    cmd_b->add_option("--gamma", bench.gamma, "Gaussian kernel bandwidth");
    cmd_b->add_option("--median-pilot", bench.median_pilot,
                      "fit gamma on a pilot pre-change sample of this size");
    cmd_b->add_option("--features,-r", bench.features, "number of random features");
    cmd_b->add_option("--policy", bench.policy.text, "policy spec (arl/edd)");
    cmd_b->add_option("--sigma-tilde", bench.sigma_tilde, "variance proxy for scale policies");
    cmd_b->add_option("--seed", bench.seed, "master seed");
    cmd_b->add_option("--threads", bench.threads, "worker threads (0 = all cores)");
    cmd_b->add_option("--out", bench.out_path, "report path");
    cmd_b->add_option("--n", bench.sample_size, "sample size (threshold-comparison)");
    cmd_b->add_option("--rounds", bench.rounds, "rounds (threshold-comparison)");
    cmd_b->add_option("--alpha", bench.alpha, "level (threshold-comparison)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*cmd_d) return cmd_detect(detect);
        if (*cmd_t) return cmd_thresholds(thresholds);
        if (*cmd_c) return cmd_calibrate(calibrate);
        if (*cmd_b) return cmd_bench(bench);
    } catch (const ConfigError& e) {
        std::cerr << "rffcd: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "rffcd: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << "rffcd: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "rffcd: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitConfig;
}
