/**
 * @file config.hpp
 * @details
 * Training configuration files. A config is a JSON object:
 *
 *   {
 *     "schema_version": 1,
 *     "manifold":  {"id": "sin2d", "alpha": 1.0, "noise": 0.05, "astroid_full_curve": false},
 *     "generator": {"variant": "model2", "order": 12, "width": 15, "omega": 0,
 *                   "global_transform": "affine", "identity_b": true, "tanh_output": false},
 *     "training":  {"steps": 20000, "batch": 128, "lr_generator": 1e-4, "lr_discriminator": 1e-4,
 *                   "adam_betas": [0.5, 0.999], "adam_eps": 1e-8, "seed": 0, "latent_dim": 1,
 *                   "discriminator_widths": [64, 64, 64], "leaky_slope": 0.2,
 *                   "history_every": 100, "monitor_samples": 500},
 *     "output":    {"samples": 2000, "sample_seed": 0, "coverage_bins": 16}
 *   }
 *
 * "schema_version", "manifold.id" and "generator.variant" are required; every
 * other field has the default shown. Unknown keys are rejected.
 */
#ifndef POLYGAN_CONFIG_HPP
#define POLYGAN_CONFIG_HPP

#include "polygan/manifolds.hpp"
#include "polygan/networks.hpp"
#include "polygan/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

namespace polygan {

inline constexpr int kConfigSchemaVersion = 1;

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct OutputConfig {
    std::int64_t samples = 2000;
    std::uint64_t sample_seed = 0;
    std::int64_t coverage_bins = 16;
};

struct RunConfig {
    TrainConfig train;
    GeneratorKind generator;
    OutputConfig output;
};

namespace detail {

using nlohmann::json;

class FieldReader {
public:
    FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& [key, _] : obj_.items())
            if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }

    FieldReader(const FieldReader&) = delete;
    FieldReader& operator=(const FieldReader&) = delete;

    bool has(const std::string& key) const { return obj_.contains(key); }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& require(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) throw ConfigError(field(key), "missing required field");
        return obj_.at(key);
    }

    const json* optional(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) ? &obj_.at(key) : nullptr;
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        const json* v = optional(key);
        return v ? convert<T>(*v, field(key)) : fallback;
    }

    template <typename T>
    T get_required(const std::string& key) {
        return convert<T>(require(key), field(key));
    }

    template <typename T>
    static T convert(const json& v, const std::string& name) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(name, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
                    throw ConfigError(name, "expected a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(name, "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(name, "expected a string");
        }
        return v.get<T>();
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
}

}  // namespace detail

/// Parses and validates a config document.
inline RunConfig parse_run_config(const nlohmann::json& doc) {
    using detail::check;
    using detail::FieldReader;
    RunConfig cfg;
    FieldReader root(doc, "");

    const auto version = root.get_required<int>("schema_version");
    check(version == kConfigSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(version) + " (expected " + std::to_string(kConfigSchemaVersion) + ")");

    {
        FieldReader m(root.require("manifold"), "manifold");
        const auto id = m.get_required<std::string>("id");
        const auto parsed = parse_manifold(id);
        check(parsed.has_value(), "manifold.id", "unknown manifold '" + id + "'");
        cfg.train.manifold.id = *parsed;
        cfg.train.manifold.alpha = m.get("alpha", cfg.train.manifold.alpha);
        cfg.train.manifold.noise = m.get("noise", cfg.train.manifold.noise);
        cfg.train.manifold.astroid_full_curve = m.get("astroid_full_curve", false);
        check(cfg.train.manifold.alpha > 0.0, "manifold.alpha", "must be positive");
        check(cfg.train.manifold.noise >= 0.0, "manifold.noise", "must be non-negative");
        m.finish();
    }

    {
        FieldReader g(root.require("generator"), "generator");
        auto& k = cfg.generator;
        const auto variant = g.get_required<std::string>("variant");
        const auto parsed = parse_variant(variant);
        check(parsed.has_value(), "generator.variant", "unknown variant '" + variant + "'");
        k.variant = *parsed;
        k.order = g.get<std::size_t>("order", k.order);
        k.width = g.get<Eigen::Index>("width", k.width);
        k.omega = g.get<Eigen::Index>("omega", 0);
        const auto transform = g.get<std::string>("global_transform", std::string(to_string(k.global_transform)));
        const auto gt = parse_global_transform(transform);
        check(gt.has_value(), "generator.global_transform", "unknown transform '" + transform + "'");
        k.global_transform = *gt;
        k.identity_b = g.get("identity_b", k.variant != Variant::model1);
        k.tanh_output = g.get("tanh_output", false);
        check(k.order >= 1, "generator.order", "must be >= 1");
        check(k.width >= 1, "generator.width", "must be >= 1");
        check(k.omega >= 0, "generator.omega", "must be >= 0");
        check(!k.identity_b || k.resolved_omega() == k.width, "generator.identity_b", "requires omega == width");
        g.finish();
    }

    if (const auto* tj = root.optional("training")) {
        FieldReader t(*tj, "training");
        auto& tc = cfg.train;
        tc.steps = t.get("steps", tc.steps);
        tc.batch = t.get("batch", tc.batch);
        tc.lr_generator = t.get("lr_generator", tc.lr_generator);
        tc.lr_discriminator = t.get("lr_discriminator", tc.lr_discriminator);
        if (const auto* betas = t.optional("adam_betas")) {
            check(betas->is_array() && betas->size() == 2, "training.adam_betas", "expected [beta1, beta2]");
            tc.beta1 = FieldReader::convert<double>((*betas)[0], "training.adam_betas[0]");
            tc.beta2 = FieldReader::convert<double>((*betas)[1], "training.adam_betas[1]");
        }
        tc.adam_eps = t.get("adam_eps", tc.adam_eps);
        tc.seed = t.get("seed", tc.seed);
        tc.latent_dim = t.get<Eigen::Index>("latent_dim", tc.latent_dim);
        if (const auto* widths = t.optional("discriminator_widths")) {
            check(widths->is_array() && !widths->empty(), "training.discriminator_widths",
                  "expected a non-empty array of positive integers");
            tc.discriminator_widths.clear();
            for (std::size_t i = 0; i < widths->size(); ++i)
                tc.discriminator_widths.push_back(FieldReader::convert<Eigen::Index>(
                    (*widths)[i], "training.discriminator_widths[" + std::to_string(i) + "]"));
        }
        tc.leaky_slope = t.get("leaky_slope", tc.leaky_slope);
        tc.history_every = t.get("history_every", tc.history_every);
        tc.monitor_samples = t.get("monitor_samples", tc.monitor_samples);

        check(tc.steps >= 1, "training.steps", "must be >= 1");
        check(tc.batch >= 1, "training.batch", "must be >= 1");
        check(tc.lr_generator > 0.0, "training.lr_generator", "must be positive");
        check(tc.lr_discriminator > 0.0, "training.lr_discriminator", "must be positive");
        check(tc.beta1 >= 0.0 && tc.beta1 < 1.0, "training.adam_betas", "beta1 must lie in [0, 1)");
        check(tc.beta2 >= 0.0 && tc.beta2 < 1.0, "training.adam_betas", "beta2 must lie in [0, 1)");
        check(tc.adam_eps > 0.0, "training.adam_eps", "must be positive");
        check(tc.latent_dim >= 1, "training.latent_dim", "must be >= 1");
        for (auto w : tc.discriminator_widths) check(w >= 1, "training.discriminator_widths", "widths must be >= 1");
        check(tc.history_every >= 1, "training.history_every", "must be >= 1");
        check(tc.monitor_samples >= 1, "training.monitor_samples", "must be >= 1");
        t.finish();
    }

    if (const auto* oj = root.optional("output")) {
        FieldReader o(*oj, "output");
        cfg.output.samples = o.get("samples", cfg.output.samples);
        cfg.output.sample_seed = o.get("sample_seed", cfg.output.sample_seed);
        cfg.output.coverage_bins = o.get("coverage_bins", cfg.output.coverage_bins);
        check(cfg.output.samples >= 0, "output.samples", "must be >= 0");
        check(cfg.output.coverage_bins >= 2, "output.coverage_bins", "must be >= 2");
        o.finish();
    }
    root.finish();
    return cfg;
}

/// Fully expanded config (every field explicit); parse_run_config(to_json(c)) == c.
inline nlohmann::json config_json(const RunConfig& c) {
    const auto& t = c.train;
    const auto& g = c.generator;
    return {{"schema_version", kConfigSchemaVersion},
            {"manifold",
             {{"id", to_string(t.manifold.id)},
              {"alpha", t.manifold.alpha},
              {"noise", t.manifold.noise},
              {"astroid_full_curve", t.manifold.astroid_full_curve}}},
            {"generator",
             {{"variant", to_string(g.variant)},
              {"order", g.order},
              {"width", g.width},
              {"omega", g.omega},
              {"global_transform", to_string(g.global_transform)},
              {"identity_b", g.identity_b},
              {"tanh_output", g.tanh_output}}},
            {"training",
             {{"steps", t.steps},
              {"batch", t.batch},
              {"lr_generator", t.lr_generator},
              {"lr_discriminator", t.lr_discriminator},
              {"adam_betas", {t.beta1, t.beta2}},
              {"adam_eps", t.adam_eps},
              {"seed", t.seed},
              {"latent_dim", t.latent_dim},
              {"discriminator_widths", t.discriminator_widths},
              {"leaky_slope", t.leaky_slope},
              {"history_every", t.history_every},
              {"monitor_samples", t.monitor_samples}}},
            {"output",
             {{"samples", c.output.samples},
              {"sample_seed", c.output.sample_seed},
              {"coverage_bins", c.output.coverage_bins}}}};
}

}  // namespace polygan

#endif  // POLYGAN_CONFIG_HPP
