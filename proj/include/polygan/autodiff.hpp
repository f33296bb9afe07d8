/**
 * @file autodiff.hpp
 * @details
 * Reverse-mode differentiation over batched matrices. Activations are laid
 * out features x batch. Nodes are appended in evaluation order, so a single
 * reverse sweep over the node list is a valid topological traversal.
 */
#ifndef POLYGAN_AUTODIFF_HPP
#define POLYGAN_AUTODIFF_HPP

#include "polygan/tensor_core.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace polygan {

/// Non-owning view of a parameter block stored elsewhere (column-major).
struct ParamRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    Eigen::Map<Matrix> map() const { return {data, rows, cols}; }
    Eigen::Index size() const noexcept { return rows * cols; }

    static ParamRef of(std::string name, Matrix& m) { return {std::move(name), m.data(), m.rows(), m.cols()}; }
    static ParamRef of(std::string name, Vector& v) { return {std::move(name), v.data(), v.size(), 1}; }
};

/// Handle to a node on a Tape.
struct Var {
    std::int32_t id = -1;
};

class Tape {
public:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,     // lhs * rhs
        MatMulTN,   // lhs^T * rhs
        Add,        // rhs may be a column broadcast over lhs's columns
        Hadamard,   // rhs may be a column broadcast over lhs's columns
        Scale,
        Tanh,
        Relu,
        LeakyRelu,
        Sigmoid,
        Softplus,
        Sum,
        Mean,
        ConcatRows,
    };

    Var constant(Matrix value) { return push(Op::Leaf, -1, -1, 0.0, std::move(value)); }

    /// A leaf whose gradient is returned by grad(), in registration order.
    Var parameter(Matrix value) {
        Var v = push(Op::Leaf, -1, -1, 0.0, std::move(value));
        params_.push_back(v.id);
        return v;
    }
    Var parameter(const ParamRef& p) { return parameter(Matrix(p.map())); }

    Var matmul(Var a, Var b) {
        check_inner(value(a).cols(), value(b).rows(), "matmul");
        return push(Op::MatMul, a.id, b.id, 0.0, value(a) * value(b));
    }

    Var matmul_tn(Var a, Var b) {
        check_inner(value(a).rows(), value(b).rows(), "matmul_tn");
        return push(Op::MatMulTN, a.id, b.id, 0.0, value(a).transpose() * value(b));
    }

    Var add(Var a, Var b) {
        const Matrix& x = value(a);
        const Matrix& y = value(b);
        if (same_shape(x, y)) return push(Op::Add, a.id, b.id, 0.0, x + y);
        check_broadcast(x, y, "add");
        return push(Op::Add, a.id, b.id, 0.0, x.colwise() + y.col(0));
    }

    Var hadamard(Var a, Var b) {
        const Matrix& x = value(a);
        const Matrix& y = value(b);
        if (same_shape(x, y)) return push(Op::Hadamard, a.id, b.id, 0.0, x.cwiseProduct(y));
        check_broadcast(x, y, "hadamard");
        return push(Op::Hadamard, a.id, b.id, 0.0, (x.array().colwise() * y.col(0).array()).matrix());
    }

    Var scale(Var a, double s) { return push(Op::Scale, a.id, -1, s, s * value(a)); }

    Var tanh(Var a) { return push(Op::Tanh, a.id, -1, 0.0, value(a).array().tanh().matrix()); }

    Var relu(Var a) { return push(Op::Relu, a.id, -1, 0.0, value(a).cwiseMax(0.0)); }

    Var leaky_relu(Var a, double slope) {
        Matrix out = value(a).unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
        return push(Op::LeakyRelu, a.id, -1, slope, std::move(out));
    }

    Var sigmoid(Var a) {
        Matrix out = value(a).unaryExpr([](double x) { return stable_sigmoid(x); });
        return push(Op::Sigmoid, a.id, -1, 0.0, std::move(out));
    }

    /// log(1 + exp(x)), evaluated without overflow.
    Var softplus(Var a) {
        Matrix out = value(a).unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
        return push(Op::Softplus, a.id, -1, 0.0, std::move(out));
    }

    Var sum(Var a) { return push(Op::Sum, a.id, -1, 0.0, Matrix::Constant(1, 1, value(a).sum())); }

    Var mean(Var a) {
        const auto n = static_cast<double>(value(a).size());
        return push(Op::Mean, a.id, -1, 0.0, Matrix::Constant(1, 1, value(a).sum() / n));
    }

    Var concat_rows(Var a, Var b) {
        const Matrix& x = value(a);
        const Matrix& y = value(b);
        if (x.cols() != y.cols()) throw std::invalid_argument("concat_rows: column counts differ");
        Matrix out(x.rows() + y.rows(), x.cols());
        out << x, y;
        return push(Op::ConcatRows, a.id, b.id, 0.0, std::move(out));
    }

    const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    /// Reverse accumulation from a scalar node. Returns d loss / d parameter
    /// for every parameter leaf, in registration order.
    std::vector<Matrix> grad(Var loss) {
        const Matrix& lv = value(loss);
        if (lv.rows() != 1 || lv.cols() != 1)
            throw std::invalid_argument("grad: loss must be a 1x1 node, got " + std::to_string(lv.rows()) + "x" +
                                        std::to_string(lv.cols()));
        adjoints_.assign(nodes_.size(), Matrix());
        adjoints_[static_cast<std::size_t>(loss.id)] = Matrix::Ones(1, 1);
        for (std::int32_t i = loss.id; i >= 0; --i) backward_node(i);

        std::vector<Matrix> out;
        out.reserve(params_.size());
        for (auto id : params_) out.push_back(adjoint(Var{id}));
        return out;
    }

    /// Adjoint after grad(); zero for nodes the loss does not depend on.
    Matrix adjoint(Var v) const {
        const auto i = static_cast<std::size_t>(v.id);
        if (i < adjoints_.size() && adjoints_[i].size() != 0) return adjoints_[i];
        const Matrix& val = nodes_.at(i).value;
        return Matrix::Zero(val.rows(), val.cols());
    }

private:
    struct Node {
        Op op;
        std::int32_t lhs;
        std::int32_t rhs;
        double scalar;
        Matrix value;
    };

    static double stable_sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    static bool same_shape(const Matrix& x, const Matrix& y) { return x.rows() == y.rows() && x.cols() == y.cols(); }

    static void check_inner(Eigen::Index a, Eigen::Index b, const char* who) {
        if (a != b)
            throw std::invalid_argument(std::string(who) + ": inner dimensions differ (" + std::to_string(a) +
                                        " vs " + std::to_string(b) + ")");
    }

    static void check_broadcast(const Matrix& x, const Matrix& y, const char* who) {
        if (y.cols() != 1 || y.rows() != x.rows())
            throw std::invalid_argument(std::string(who) + ": shapes are neither equal nor column-broadcastable");
    }

    Var push(Op op, std::int32_t lhs, std::int32_t rhs, double scalar, Matrix value) {
        nodes_.push_back(Node{op, lhs, rhs, scalar, std::move(value)});
        return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    void accumulate(std::int32_t id, const Matrix& g) {
        auto& slot = adjoints_[static_cast<std::size_t>(id)];
        if (slot.size() == 0)
            slot = g;
        else
            slot += g;
    }

    // Gradient w.r.t. a possibly column-broadcast operand.
    void accumulate_broadcast(std::int32_t id, const Matrix& g) {
        const Matrix& target = nodes_[static_cast<std::size_t>(id)].value;
        if (target.cols() == g.cols())
            accumulate(id, g);
        else
            accumulate(id, g.rowwise().sum());
    }

    void backward_node(std::int32_t i) {
        const Matrix& g = adjoints_[static_cast<std::size_t>(i)];
        if (g.size() == 0) return;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        auto val = [&](std::int32_t id) -> const Matrix& { return nodes_[static_cast<std::size_t>(id)].value; };

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul:
                accumulate(n.lhs, g * val(n.rhs).transpose());
                accumulate(n.rhs, val(n.lhs).transpose() * g);
                break;
            case Op::MatMulTN:
                accumulate(n.lhs, val(n.rhs) * g.transpose());
                accumulate(n.rhs, val(n.lhs) * g);
                break;
            case Op::Add:
                accumulate(n.lhs, g);
                accumulate_broadcast(n.rhs, g);
                break;
            case Op::Hadamard: {
                const Matrix& x = val(n.lhs);
                const Matrix& y = val(n.rhs);
                if (y.cols() == x.cols()) {
                    accumulate(n.lhs, g.cwiseProduct(y));
                    accumulate(n.rhs, g.cwiseProduct(x));
                } else {
                    accumulate(n.lhs, (g.array().colwise() * y.col(0).array()).matrix());
                    accumulate(n.rhs, g.cwiseProduct(x).rowwise().sum());
                }
                break;
            }
            case Op::Scale:
                accumulate(n.lhs, n.scalar * g);
                break;
            case Op::Tanh:
                accumulate(n.lhs, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
                break;
            case Op::Relu:
                accumulate(n.lhs, g.cwiseProduct(val(n.lhs).unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; })));
                break;
            case Op::LeakyRelu: {
                const double slope = n.scalar;
                accumulate(n.lhs,
                           g.cwiseProduct(val(n.lhs).unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; })));
                break;
            }
            case Op::Sigmoid:
                accumulate(n.lhs, g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
                break;
            case Op::Softplus:
                accumulate(n.lhs, g.cwiseProduct(val(n.lhs).unaryExpr([](double x) { return stable_sigmoid(x); })));
                break;
            case Op::Sum: {
                const Matrix& x = val(n.lhs);
                accumulate(n.lhs, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                break;
            }
            case Op::Mean: {
                const Matrix& x = val(n.lhs);
                accumulate(n.lhs, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
                break;
            }
            case Op::ConcatRows: {
                const auto top = val(n.lhs).rows();
                accumulate(n.lhs, g.topRows(top));
                accumulate(n.rhs, g.bottomRows(g.rows() - top));
                break;
            }
        }
    }

    std::vector<Node> nodes_;
    std::vector<std::int32_t> params_;
    std::vector<Matrix> adjoints_;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::int64_t step = 0;
};

/// One bias-corrected Adam update, in place.
inline void adam_step(std::span<const ParamRef> params, std::span<const Matrix> grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Matrix::Zero(p.rows, p.cols));
            state.v.push_back(Matrix::Zero(p.rows, p.cols));
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = grads[i];
        if (g.rows() != params[i].rows || g.cols() != params[i].cols)
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[i].name);
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.cwiseAbs2();
        auto p = params[i].map();
        p.array() -= cfg.lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + cfg.eps);
    }
}

}  // namespace polygan

#endif  // POLYGAN_AUTODIFF_HPP
