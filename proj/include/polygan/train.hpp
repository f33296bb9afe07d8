/**
 * @file train.hpp
 * @details
 * Adversarial training of a polynomial generator against an MLP
 * discriminator on one of the analytic manifolds. One discriminator step
 * per generator step, non-saturating loss, Adam on both networks.
 *
 * All randomness comes from CounterRng substreams of the configured seed,
 * so a run is a pure function of (TrainConfig, GeneratorKind).
 */
#ifndef POLYGAN_TRAIN_HPP
#define POLYGAN_TRAIN_HPP

#include "polygan/autodiff.hpp"
#include "polygan/manifolds.hpp"
#include "polygan/networks.hpp"
#include "polygan/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polygan {

struct TrainConfig {
    ManifoldSpec manifold;
    std::int64_t steps = 20000;
    std::int64_t batch = 128;
    double lr_generator = 1e-4;
    double lr_discriminator = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    Eigen::Index latent_dim = 1;
    std::vector<Eigen::Index> discriminator_widths{64, 64, 64};
    double leaky_slope = 0.2;
    std::int64_t history_every = 100;
    /// Fixed latent probe used for the residual recorded in the history.
    std::int64_t monitor_samples = 500;

    void validate() const {
        manifold.validate();
        if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be positive");
        if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be positive");
        if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0))
            throw std::invalid_argument("TrainConfig: learning rates must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw std::invalid_argument("TrainConfig: adam betas must lie in [0, 1)");
        if (latent_dim < 1) throw std::invalid_argument("TrainConfig: latent_dim must be positive");
        if (history_every < 1) throw std::invalid_argument("TrainConfig: history_every must be positive");
        if (monitor_samples < 1) throw std::invalid_argument("TrainConfig: monitor_samples must be positive");
        for (auto w : discriminator_widths)
            if (w < 1) throw std::invalid_argument("TrainConfig: discriminator widths must be positive");
    }
};

struct HistoryEntry {
    std::int64_t step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double mean_residual = 0.0;
    double median_residual = 0.0;
};

struct TrainResult {
    Generator generator;
    Discriminator discriminator;
    std::vector<HistoryEntry> history;
};

/// A loss became non-finite.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::int64_t step, const std::string& what)
        : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

/// Substream ids of the training seed.
namespace streams {
inline constexpr std::uint64_t generator_init = 1;
inline constexpr std::uint64_t discriminator_init = 2;
inline constexpr std::uint64_t data = 3;
inline constexpr std::uint64_t latent = 4;
inline constexpr std::uint64_t monitor = 5;
inline constexpr std::uint64_t sampling = 6;
}  // namespace streams

/// Mean of softplus(-real) + mean of softplus(fake): -log D(x) - log(1 - D(G(z))).
inline Var discriminator_loss(Tape& t, Var real_logits, Var fake_logits) {
    return t.add(t.mean(t.softplus(t.scale(real_logits, -1.0))), t.mean(t.softplus(fake_logits)));
}

/// Non-saturating generator loss -log D(G(z)).
inline Var generator_loss(Tape& t, Var fake_logits) { return t.mean(t.softplus(t.scale(fake_logits, -1.0))); }

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Runs the alternating optimization. `on_history` (optional) sees each entry as it is recorded.
inline TrainResult gan_train(const TrainConfig& cfg, const GeneratorKind& kind,
                             const std::function<void(const HistoryEntry&)>& on_history = {}) {
    cfg.validate();
    kind.validate();
    const Eigen::Index out_dim = manifold_dim(cfg.manifold.id);

    CounterRng gen_init(cfg.seed, streams::generator_init);
    CounterRng disc_init(cfg.seed, streams::discriminator_init);
    CounterRng data_rng(cfg.seed, streams::data);
    CounterRng latent_rng(cfg.seed, streams::latent);
    CounterRng monitor_rng(cfg.seed, streams::monitor);

    TrainResult result;
    result.generator = build_generator(kind, cfg.latent_dim, out_dim, gen_init);
    result.discriminator = Discriminator::build(out_dim, cfg.discriminator_widths, cfg.leaky_slope, disc_init);
    Generator& gen = result.generator;
    Discriminator& disc = result.discriminator;

    const Matrix monitor_z = monitor_rng.normal_matrix(cfg.latent_dim, cfg.monitor_samples);
    const AdamConfig adam_g{cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.adam_eps};
    const AdamConfig adam_d{cfg.lr_discriminator, cfg.beta1, cfg.beta2, cfg.adam_eps};
    AdamState state_g, state_d;
    auto gen_params = gen.parameters();
    auto disc_params = disc.parameters();

    for (std::int64_t step = 1; step <= cfg.steps; ++step) {
        // Discriminator step.
        const Matrix real = sample(cfg.manifold, static_cast<std::size_t>(cfg.batch), data_rng);
        const Matrix fake = gen.forward(latent_rng.normal_matrix(cfg.latent_dim, cfg.batch));
        double d_loss_value = 0.0;
        {
            Tape t;
            Var real_logits = disc.forward(t, t.constant(real), true);
            const auto n_disc = t.parameter_count();
            Var fake_logits = disc.forward(t, t.constant(fake), true);
            Var loss = discriminator_loss(t, real_logits, fake_logits);
            d_loss_value = t.value(loss)(0, 0);
            if (!std::isfinite(d_loss_value)) throw TrainingDiverged(step, "non-finite discriminator loss");
            auto grads = t.grad(loss);
            // Both passes registered the same blocks; sum their contributions.
            std::vector<Matrix> merged(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(n_disc));
            for (std::size_t i = 0; i < n_disc; ++i) merged[i] += grads[n_disc + i];
            adam_step(disc_params, merged, state_d, adam_d);
        }

        // Generator step.
        double g_loss_value = 0.0;
        {
            Tape t;
            Var z = t.constant(latent_rng.normal_matrix(cfg.latent_dim, cfg.batch));
            Var x = gen.forward(t, z, true);
            Var loss = generator_loss(t, disc.forward(t, x, false));
            g_loss_value = t.value(loss)(0, 0);
            if (!std::isfinite(g_loss_value)) throw TrainingDiverged(step, "non-finite generator loss");
            auto grads = t.grad(loss);
            for (const auto& g : grads)
                if (!g.allFinite()) throw TrainingDiverged(step, "non-finite generator gradient");
            adam_step(gen_params, grads, state_g, adam_g);
        }

        if (step % cfg.history_every == 0 || step == cfg.steps) {
            const auto res = residuals(cfg.manifold, gen.forward(monitor_z));
            HistoryEntry e{step, d_loss_value, g_loss_value, mean(res), median(res)};
            result.history.push_back(e);
            if (on_history) on_history(e);
        }
    }
    return result;
}

/// n generated points (o x n) from latent draws of the `sampling` substream.
inline Matrix generate(const Generator& gen, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, streams::sampling);
    return gen.forward(rng.normal_matrix(gen.latent_dim(), static_cast<Eigen::Index>(n)));
}

/// Real-vs-fake accuracy of D at threshold 0.5 over `n` samples of each class.
inline double discriminator_accuracy(const Discriminator& disc, const Generator& gen, const ManifoldSpec& spec,
                                     std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, 7);
    const Matrix real = sample(spec, n, rng);
    const Matrix fake = gen.forward(rng.normal_matrix(gen.latent_dim(), static_cast<Eigen::Index>(n)));
    const Matrix pr = disc.probabilities(real);
    const Matrix pf = disc.probabilities(fake);
    const double correct = static_cast<double>((pr.array() > 0.5).count() + (pf.array() <= 0.5).count());
    return correct / static_cast<double>(2 * n);
}

}  // namespace polygan

#endif  // POLYGAN_TRAIN_HPP
