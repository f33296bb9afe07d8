/**
 * @file networks.hpp
 * @details
 * Trainable generator variants and the MLP discriminator, each evaluable
 * either directly on Eigen matrices or on a Tape for differentiation.
 *
 * Generator variants (no activations unless requested):
 *  - model1: coupled CP recursion.
 *  - model2: coupled nested CP recursion.
 *  - orig:   the model2 layers chained without Hadamard products,
 *            h = A1^T v, h = S_n h + B_n^T b_n; an affine map of z.
 *  - concat: h = A1^T v, h = S_n [h; A_n^T v] + B_n^T b_n with S_n of size k x 2k.
 * All variants first apply the optional global transform v = T(z).
 */
#ifndef POLYGAN_NETWORKS_HPP
#define POLYGAN_NETWORKS_HPP

#include "polygan/autodiff.hpp"
#include "polygan/poly_models.hpp"
#include "polygan/random.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polygan {

enum class Variant { model1, model2, orig, concat };
enum class GlobalTransform { none, affine, affine_relu };

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::model1: return "model1";
        case Variant::model2: return "model2";
        case Variant::orig: return "orig";
        case Variant::concat: return "concat";
    }
    return "unknown";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
    for (auto v : {Variant::model1, Variant::model2, Variant::orig, Variant::concat})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

inline std::string_view to_string(GlobalTransform g) {
    switch (g) {
        case GlobalTransform::none: return "none";
        case GlobalTransform::affine: return "affine";
        case GlobalTransform::affine_relu: return "affine+relu";
    }
    return "unknown";
}

inline std::optional<GlobalTransform> parse_global_transform(std::string_view s) {
    for (auto g : {GlobalTransform::none, GlobalTransform::affine, GlobalTransform::affine_relu})
        if (to_string(g) == s) return g;
    return std::nullopt;
}

struct GeneratorKind {
    Variant variant = Variant::model2;
    std::size_t order = 12;
    Eigen::Index width = 15;
    /// Length of b^[n]; 0 means equal to width.
    Eigen::Index omega = 0;
    GlobalTransform global_transform = GlobalTransform::affine;
    /// Fix every B^[n] to the identity (requires omega == width); B is then not trained.
    bool identity_b = false;
    bool tanh_output = false;

    Eigen::Index resolved_omega() const noexcept { return omega > 0 ? omega : width; }

    void validate() const {
        if (order < 1) throw std::invalid_argument("GeneratorKind: order must be >= 1");
        if (width < 1) throw std::invalid_argument("GeneratorKind: width must be >= 1");
        if (omega < 0) throw std::invalid_argument("GeneratorKind: omega must be >= 0");
        if (identity_b && resolved_omega() != width)
            throw std::invalid_argument("GeneratorKind: identity_b requires omega == width");
    }
};

class Generator {
public:
    Generator() = default;

    /// Random initialization for the given latent (d) and output (o) sizes.
    static Generator build(const GeneratorKind& kind, Eigen::Index d, Eigen::Index o, CounterRng& rng) {
        kind.validate();
        if (d < 1 || o < 1) throw std::invalid_argument("Generator: dimensions must be positive");
        Generator g;
        g.kind_ = kind;
        if (kind.global_transform != GlobalTransform::none) {
            g.transform_w_ = Matrix::Identity(d, d);
            g.transform_b_ = Vector::Zero(d);
        }
        const auto k = kind.width;
        const auto omega = kind.resolved_omega();
        if (kind.variant == Variant::model1) {
            g.m1_ = Model1Params::random(d, o, k, kind.order, rng);
        } else {
            g.m2_ = Model2Params::random(d, o, k, omega, kind.order, rng);
            if (kind.identity_b)
                for (auto& b : g.m2_.bmat) b = Matrix::Identity(omega, k);
            if (kind.variant == Variant::concat) {
                const double sd = 1.0 / std::sqrt(static_cast<double>(2 * k));
                for (std::size_t n = 1; n < kind.order; ++n) g.m2_.s[n] = rng.normal_matrix(k, 2 * k, sd);
            }
        }
        return g;
    }

    /// Wraps existing model parameters (restores checkpoints, tape cross-checks).
    static Generator from_parts(const GeneratorKind& kind, Model1Params m1, Model2Params m2, Matrix transform_w,
                                Vector transform_b) {
        kind.validate();
        Generator g;
        g.kind_ = kind;
        g.m1_ = std::move(m1);
        g.m2_ = std::move(m2);
        g.transform_w_ = std::move(transform_w);
        g.transform_b_ = std::move(transform_b);
        g.validate();
        return g;
    }

    const GeneratorKind& kind() const noexcept { return kind_; }
    const Model1Params& model1() const noexcept { return m1_; }
    const Model2Params& model2() const noexcept { return m2_; }
    const Matrix& transform_w() const noexcept { return transform_w_; }
    const Vector& transform_b() const noexcept { return transform_b_; }

    Eigen::Index latent_dim() const {
        return kind_.variant == Variant::model1 ? m1_.latent_dim() : m2_.latent_dim();
    }
    Eigen::Index output_dim() const {
        return kind_.variant == Variant::model1 ? m1_.output_dim() : m2_.output_dim();
    }

    void validate() const {
        if (kind_.global_transform != GlobalTransform::none &&
            (transform_w_.rows() != transform_w_.cols() || transform_b_.size() != transform_w_.rows()))
            throw std::invalid_argument("Generator: global transform must be d x d with length-d bias");
        if (kind_.variant == Variant::model1) {
            m1_.validate();
            if (m1_.order() != kind_.order) throw std::invalid_argument("Generator: order mismatch");
            return;
        }
        if (kind_.variant != Variant::concat) {
            m2_.validate();
        } else {
            auto probe = m2_;
            for (std::size_t n = 1; n < probe.s.size(); ++n) {
                if (probe.s[n].rows() != m2_.rank() || probe.s[n].cols() != 2 * m2_.rank())
                    throw std::invalid_argument("Generator: concat S^[n] must be k x 2k");
                probe.s[n] = Matrix::Identity(m2_.rank(), m2_.rank());
            }
            probe.validate();
        }
        if (m2_.order() != kind_.order) throw std::invalid_argument("Generator: order mismatch");
    }

    /// Trainable blocks, in the order a Tape registers them.
    std::vector<ParamRef> parameters() {
        std::vector<ParamRef> out;
        if (kind_.global_transform != GlobalTransform::none) {
            out.push_back(ParamRef::of("T_W", transform_w_));
            out.push_back(ParamRef::of("T_b", transform_b_));
        }
        if (kind_.variant == Variant::model1) {
            out.push_back(ParamRef::of("C", m1_.c));
            out.push_back(ParamRef::of("beta", m1_.beta));
            for (std::size_t n = 0; n < m1_.u.size(); ++n) out.push_back(ParamRef::of(indexed("U", n), m1_.u[n]));
            return out;
        }
        out.push_back(ParamRef::of("C", m2_.c));
        out.push_back(ParamRef::of("beta", m2_.beta));
        for (std::size_t n = 0; n < m2_.order(); ++n) {
            out.push_back(ParamRef::of(indexed("A", n), m2_.a[n]));
            if (n > 0) out.push_back(ParamRef::of(indexed("S", n), m2_.s[n]));
            if (!kind_.identity_b) out.push_back(ParamRef::of(indexed("B", n), m2_.bmat[n]));
            out.push_back(ParamRef::of(indexed("b", n), m2_.bvec[n]));
        }
        return out;
    }

    /// Direct evaluation; z is d x batch.
    Matrix forward(const Matrix& z) const {
        const Matrix v = transform(z);
        Matrix out;
        switch (kind_.variant) {
            case Variant::model1: out = forward_model1(m1_, v); break;
            case Variant::model2: out = forward_model2(m2_, v); break;
            case Variant::orig: {
                Matrix h = m2_.a[0].transpose() * v;
                for (std::size_t n = 1; n < m2_.order(); ++n)
                    h = (m2_.s[n] * h).colwise() + m2_.bmat[n].transpose() * m2_.bvec[n];
                out = (m2_.c * h).colwise() + m2_.beta;
                break;
            }
            case Variant::concat: {
                Matrix h = m2_.a[0].transpose() * v;
                for (std::size_t n = 1; n < m2_.order(); ++n) {
                    Matrix stacked(2 * h.rows(), h.cols());
                    stacked << h, m2_.a[n].transpose() * v;
                    h = (m2_.s[n] * stacked).colwise() + m2_.bmat[n].transpose() * m2_.bvec[n];
                }
                out = (m2_.c * h).colwise() + m2_.beta;
                break;
            }
        }
        if (kind_.tanh_output) out = out.array().tanh().matrix();
        return out;
    }

    /// Tape evaluation. Trainable blocks become parameters when `trainable`
    /// (registered in parameters() order), constants otherwise.
    Var forward(Tape& t, Var z, bool trainable) {
        std::map<std::string, Var, std::less<>> vars;
        for (const auto& p : parameters())
            vars.emplace(p.name, trainable ? t.parameter(p) : t.constant(Matrix(p.map())));
        auto get = [&](std::string_view name) { return vars.find(name)->second; };

        Var v = z;
        if (kind_.global_transform != GlobalTransform::none) {
            v = t.add(t.matmul(get("T_W"), z), get("T_b"));
            if (kind_.global_transform == GlobalTransform::affine_relu) v = t.relu(v);
        }

        Var h;
        if (kind_.variant == Variant::model1) {
            h = t.matmul_tn(get("U1"), v);
            for (std::size_t n = 1; n < m1_.order(); ++n)
                h = t.add(h, t.hadamard(t.matmul_tn(get(indexed("U", n)), v), h));
        } else {
            auto bias = [&](std::size_t n) {
                Var bmat = kind_.identity_b ? t.constant(m2_.bmat[n]) : get(indexed("B", n));
                return t.matmul_tn(bmat, get(indexed("b", n)));
            };
            auto av = [&](std::size_t n) { return t.matmul_tn(get(indexed("A", n)), v); };
            switch (kind_.variant) {
                case Variant::model2:
                    h = t.hadamard(av(0), bias(0));
                    for (std::size_t n = 1; n < m2_.order(); ++n)
                        h = t.hadamard(av(n), t.add(t.matmul(get(indexed("S", n)), h), bias(n)));
                    break;
                case Variant::orig:
                    h = av(0);
                    for (std::size_t n = 1; n < m2_.order(); ++n)
                        h = t.add(t.matmul(get(indexed("S", n)), h), bias(n));
                    break;
                case Variant::concat:
                    h = av(0);
                    for (std::size_t n = 1; n < m2_.order(); ++n)
                        h = t.add(t.matmul(get(indexed("S", n)), t.concat_rows(h, av(n))), bias(n));
                    break;
                case Variant::model1: break;
            }
        }
        Var out = t.add(t.matmul(get("C"), h), get("beta"));
        return kind_.tanh_output ? t.tanh(out) : out;
    }

private:
    static std::string indexed(std::string_view prefix, std::size_t zero_based) {
        return std::string(prefix) + std::to_string(zero_based + 1);
    }

    Matrix transform(const Matrix& z) const {
        if (kind_.global_transform == GlobalTransform::none) return z;
        if (z.rows() != transform_w_.cols()) throw std::invalid_argument("Generator: latent dimension mismatch");
        Matrix v = (transform_w_ * z).colwise() + transform_b_;
        if (kind_.global_transform == GlobalTransform::affine_relu) v = v.cwiseMax(0.0);
        return v;
    }

    GeneratorKind kind_;
    Model1Params m1_;
    Model2Params m2_;
    Matrix transform_w_;
    Vector transform_b_;
};

inline Generator build_generator(const GeneratorKind& kind, Eigen::Index d, Eigen::Index o, CounterRng& rng) {
    return Generator::build(kind, d, o, rng);
}

/// Leaky-ReLU MLP producing one logit per column.
class Discriminator {
public:
    Discriminator() = default;

    /// Hidden weights ~ N(0, 1/fan_in), output weights and all biases zero, so a
    /// fresh discriminator outputs 1/2 everywhere.
    static Discriminator build(Eigen::Index input_dim, const std::vector<Eigen::Index>& widths, double slope,
                               CounterRng& rng) {
        if (input_dim < 1) throw std::invalid_argument("Discriminator: input dimension must be positive");
        Discriminator d;
        d.slope_ = slope;
        Eigen::Index fan_in = input_dim;
        std::vector<Eigen::Index> sizes = widths;
        sizes.push_back(1);
        for (auto w : sizes) {
            if (w < 1) throw std::invalid_argument("Discriminator: widths must be positive");
            Matrix weight = rng.normal_matrix(w, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
            if (d.weights_.size() + 1 == sizes.size()) weight.setZero();
            d.weights_.push_back(std::move(weight));
            d.biases_.push_back(Vector::Zero(w));
            fan_in = w;
        }
        return d;
    }

    double slope() const noexcept { return slope_; }
    std::size_t layers() const noexcept { return weights_.size(); }

    std::vector<ParamRef> parameters() {
        std::vector<ParamRef> out;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            out.push_back(ParamRef::of("W" + std::to_string(i + 1), weights_[i]));
            out.push_back(ParamRef::of("c" + std::to_string(i + 1), biases_[i]));
        }
        return out;
    }

    /// Logits (1 x batch).
    Matrix logits(const Matrix& x) const {
        Matrix h = x;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            h = (weights_[i] * h).colwise() + biases_[i];
            if (i + 1 < weights_.size()) h = h.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
        }
        return h;
    }

    Matrix probabilities(const Matrix& x) const {
        return logits(x).unaryExpr([](double l) { return 1.0 / (1.0 + std::exp(-l)); });
    }

    Var forward(Tape& t, Var x, bool trainable) {
        Var h = x;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            Var w = trainable ? t.parameter(Matrix(weights_[i])) : t.constant(weights_[i]);
            Var b = trainable ? t.parameter(Matrix(biases_[i])) : t.constant(biases_[i]);
            h = t.add(t.matmul(w, h), b);
            if (i + 1 < weights_.size()) h = t.leaky_relu(h, slope_);
        }
        return h;
    }

private:
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    double slope_ = 0.2;
};

}  // namespace polygan

#endif  // POLYGAN_NETWORKS_HPP
