/**
 * @file commands.hpp
 * @details
 * The command-line operations, callable in-process. Each returns a process
 * exit code:
 *
 *   0  success
 *   1  a verification report failed
 *   2  invalid input (config, checkpoint, CSV, flags)
 *   3  training diverged
 *
 * Everything written to `out` is a deterministic function of the inputs.
 */
#ifndef POLYGAN_COMMANDS_HPP
#define POLYGAN_COMMANDS_HPP

#include "polygan/checkpoint.hpp"
#include "polygan/config.hpp"
#include "polygan/identity_oracle.hpp"
#include "polygan/manifolds.hpp"
#include "polygan/samples_io.hpp"
#include "polygan/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <string>

namespace polygan {

inline constexpr const char* kVersion = "polygan 0.1.0";

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitInputError = 2, kExitDiverged = 3 };

inline constexpr double kDegreeProbeTolerance = 1e-8;

/// Lemma, claim and degree-probe reports. The interpolation probe is
/// conditioned worse than the direct identities, so its tolerance never drops
/// below kDegreeProbeTolerance.
inline std::vector<IdentityReport> verification_reports(std::uint64_t seed, double tol) {
    std::vector<IdentityReport> reports{lemma_two_factor_suite(seed, tol), lemma_n_factor_suite(seed, tol)};
    for (auto& r : run_claim_suite(seed, tol)) reports.push_back(std::move(r));
    reports.push_back(degree_probe_suite(seed, std::max(tol, kDegreeProbeTolerance)));
    return reports;
}

inline int cmd_verify(std::uint64_t seed, double tol, std::ostream& out) {
    bool ok = true;
    for (const auto& r : verification_reports(seed, tol)) {
        out << nlohmann::json(r).dump() << '\n';
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitVerifyFailed;
}

struct SampleSummary {
    double mean_residual = 0.0;
    double median_residual = 0.0;
    double coverage = 0.0;
};

inline SampleSummary summarize(const ManifoldSpec& spec, const Matrix& points, std::size_t bins) {
    const auto res = residuals(spec, points);
    return {mean(res), median(res), coverage(spec, points, bins)};
}

inline nlohmann::json summary_json(const SampleSummary& s) {
    // Non-finite residuals (points off the sin2d domain) are reported as null.
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"mean_residual", num(s.mean_residual)},
            {"median_residual", num(s.median_residual)},
            {"coverage", s.coverage}};
}

inline nlohmann::json history_json(const std::vector<HistoryEntry>& history) {
    auto arr = nlohmann::json::array();
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    for (const auto& e : history)
        arr.push_back({{"step", e.step},
                       {"d_loss", e.d_loss},
                       {"g_loss", e.g_loss},
                       {"mean_residual", num(e.mean_residual)},
                       {"median_residual", num(e.median_residual)}});
    return arr;
}

namespace detail {

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Trains from a config file and writes checkpoint.json, history.json,
/// samples.csv and manifest.json into `out_dir`. Only manifest.json carries
/// wall-clock timestamps.
inline int cmd_train(const std::string& config_path, const std::string& out_dir, std::ostream& out,
                     std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_run_config(read_json_file(config_path));
    } catch (const ConfigError& e) {
        err << "invalid config: " << e.what() << '\n';
        return kExitInputError;
    } catch (const CheckpointError& e) {
        err << "invalid config: " << e.what() << '\n';
        return kExitInputError;
    }

    const std::string started = detail::utc_timestamp();
    TrainResult result;
    try {
        result = gan_train(cfg.train, cfg.generator);
    } catch (const TrainingDiverged& e) {
        err << e.what() << '\n';
        return kExitDiverged;
    } catch (const std::invalid_argument& e) {
        err << "invalid config: " << e.what() << '\n';
        return kExitInputError;
    }

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    const nlohmann::json snapshot = config_json(cfg);
    const nlohmann::json metadata = {{"version", kVersion},
                                     {"config", snapshot},
                                     {"seed", cfg.train.seed},
                                     {"rng", "splitmix64 counter generator, substream per purpose"}};

    write_json_file(path("checkpoint.json"), checkpoint_json(result.generator));
    write_json_file(path("history.json"), {{"metadata", metadata}, {"history", history_json(result.history)}});
    const Matrix points = generate(result.generator, static_cast<std::size_t>(cfg.output.samples),
                                   cfg.output.sample_seed);
    write_samples_csv(path("samples.csv"), points);
    write_json_file(path("manifest.json"),
                    {{"version", kVersion},
                     {"config", snapshot},
                     {"seed", cfg.train.seed},
                     {"started_utc", started},
                     {"finished_utc", detail::utc_timestamp()},
                     {"outputs",
                      {{"checkpoint", path("checkpoint.json")},
                       {"history", path("history.json")},
                       {"samples", path("samples.csv")}}}});

    auto summary = summary_json(summarize(cfg.train.manifold, points, static_cast<std::size_t>(cfg.output.coverage_bins)));
    summary["manifold"] = to_string(cfg.train.manifold.id);
    summary["variant"] = to_string(cfg.generator.variant);
    summary["order"] = cfg.generator.order;
    summary["samples"] = cfg.output.samples;
    out << summary.dump() << '\n';
    return kExitOk;
}

inline int cmd_sample(const std::string& ckpt_path, std::int64_t n, std::uint64_t seed, const std::string& out_path,
                      std::ostream& err) {
    if (n < 0) {
        err << "--n must be non-negative\n";
        return kExitInputError;
    }
    Generator gen;
    try {
        gen = generator_from_json(read_json_file(ckpt_path));
    } catch (const CheckpointError& e) {
        err << "invalid checkpoint: " << e.what() << '\n';
        return kExitInputError;
    }
    write_samples_csv(out_path, generate(gen, static_cast<std::size_t>(n), seed));
    return kExitOk;
}

inline int cmd_report(const std::string& csv_path, const ManifoldSpec& spec, std::size_t bins, std::ostream& out,
                      std::ostream& err) {
    if (bins < 2) {
        err << "--bins must be >= 2\n";
        return kExitInputError;
    }
    Matrix points;
    try {
        points = read_samples_csv(csv_path);
    } catch (const CsvError& e) {
        err << "invalid samples: " << e.what() << '\n';
        return kExitInputError;
    }
    if (points.rows() != manifold_dim(spec.id)) {
        err << "invalid samples: " << points.rows() << "-dimensional points for manifold " << to_string(spec.id)
            << '\n';
        return kExitInputError;
    }
    auto summary = points.cols() == 0 ? nlohmann::json{{"mean_residual", nullptr},
                                                        {"median_residual", nullptr},
                                                        {"coverage", 0.0}}
                                      : summary_json(summarize(spec, points, bins));
    out << summary.dump() << '\n';
    return kExitOk;
}

}  // namespace polygan

#endif  // POLYGAN_COMMANDS_HPP
