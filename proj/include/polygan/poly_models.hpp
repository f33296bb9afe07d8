/**
 * @file poly_models.hpp
 * @details
 * Polynomial generators G: R^d -> R^o of order N.
 *
 *  - ExplicitPolyParams: the full expansion beta + sum_n W^[n] x_2 z ... x_{n+1} z,
 *    optionally with a per-order scaling vector contracted on mode 2 first.
 *    This is the ground-truth evaluator used by the equivalence checks.
 *  - Model1Params (coupled CP): kappa = U1^T z; kappa += (Un^T z) * kappa; x = beta + C kappa.
 *  - Model2Params (coupled nested CP):
 *    kappa = (B1^T b1) * (A1^T z); kappa = (Sn kappa + Bn^T bn) * (An^T z); x = beta + C kappa.
 *
 * The batched forwards take latent vectors as the columns of a d x batch matrix.
 */
#ifndef POLYGAN_POLY_MODELS_HPP
#define POLYGAN_POLY_MODELS_HPP

#include "polygan/random.hpp"
#include "polygan/tensor_core.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polygan {

/// Materialization would exceed the configured order cap.
class ResourceLimitError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// The requested order has no explicit nested factorization.
class UnsupportedOrderError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ExplicitPolyParams {
    Vector beta;
    /// weights[n-1] has shape o x d^n, or o x omega x d^n when scalers are present.
    std::vector<DenseTensor> weights;
    /// scalers[n-1] is contracted with mode 2 of weights[n-1]; empty for the plain form.
    std::vector<Vector> scalers;

    std::size_t order() const noexcept { return weights.size(); }
    bool scaled() const noexcept { return !scalers.empty(); }

    void validate() const {
        if (scaled() && scalers.size() != weights.size())
            throw std::invalid_argument("ExplicitPolyParams: one scaler per order required");
        const auto o = static_cast<std::size_t>(beta.size());
        for (std::size_t n = 1; n <= weights.size(); ++n) {
            const auto& w = weights[n - 1];
            const std::size_t expected = n + (scaled() ? 2 : 1);
            if (w.order() != expected)
                throw std::invalid_argument("ExplicitPolyParams: W^[" + std::to_string(n) +
                                            "] has order " + std::to_string(w.order()) +
                                            ", expected " + std::to_string(expected));
            if (w.dim(1) != o)
                throw std::invalid_argument("ExplicitPolyParams: leading dimension mismatch");
            if (scaled() && static_cast<std::size_t>(scalers[n - 1].size()) != w.dim(2))
                throw std::invalid_argument("ExplicitPolyParams: scaler length mismatch");
        }
    }
};

struct Model1Params {
    Matrix c;
    Vector beta;
    std::vector<Matrix> u;

    std::size_t order() const noexcept { return u.size(); }
    Eigen::Index rank() const noexcept { return c.cols(); }
    Eigen::Index latent_dim() const { return u.empty() ? 0 : u.front().rows(); }
    Eigen::Index output_dim() const noexcept { return c.rows(); }

    void validate() const {
        if (u.empty()) throw std::invalid_argument("Model1Params: order N must be >= 1");
        if (beta.size() != c.rows()) throw std::invalid_argument("Model1Params: beta length != rows of C");
        for (const auto& un : u) {
            if (un.cols() != c.cols())
                throw std::invalid_argument("Model1Params: U^[n] column count != rank k");
            if (un.rows() != u.front().rows())
                throw std::invalid_argument("Model1Params: U^[n] row counts differ");
        }
    }

    /// Gaussian entries with standard deviation 1/sqrt(k); beta = 0.
    static Model1Params random(Eigen::Index d, Eigen::Index o, Eigen::Index k, std::size_t order,
                               CounterRng& rng) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(k));
        Model1Params p;
        p.c = rng.normal_matrix(o, k, sd);
        p.beta = Vector::Zero(o);
        for (std::size_t n = 0; n < order; ++n) p.u.push_back(rng.normal_matrix(d, k, sd));
        return p;
    }
};

struct Model2Params {
    Matrix c;
    Vector beta;
    std::vector<Matrix> a;
    /// s[0] is allocated for a uniform layout but never applied.
    std::vector<Matrix> s;
    std::vector<Matrix> bmat;
    std::vector<Vector> bvec;

    std::size_t order() const noexcept { return a.size(); }
    Eigen::Index rank() const noexcept { return c.cols(); }
    Eigen::Index omega() const { return bmat.empty() ? 0 : bmat.front().rows(); }
    Eigen::Index latent_dim() const { return a.empty() ? 0 : a.front().rows(); }
    Eigen::Index output_dim() const noexcept { return c.rows(); }

    void validate() const {
        const auto n = a.size();
        if (n == 0) throw std::invalid_argument("Model2Params: order N must be >= 1");
        if (s.size() != n || bmat.size() != n || bvec.size() != n)
            throw std::invalid_argument("Model2Params: per-order lists must all have length N");
        if (beta.size() != c.rows()) throw std::invalid_argument("Model2Params: beta length != rows of C");
        const auto k = c.cols();
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].cols() != k || a[i].rows() != a.front().rows())
                throw std::invalid_argument("Model2Params: A^[n] must be d x k");
            if (s[i].rows() != k || s[i].cols() != k)
                throw std::invalid_argument("Model2Params: S^[n] must be k x k");
            if (bmat[i].cols() != k || bmat[i].rows() != omega())
                throw std::invalid_argument("Model2Params: B^[n] must be omega x k");
            if (bvec[i].size() != omega())
                throw std::invalid_argument("Model2Params: b^[n] must have length omega");
        }
    }

    /// C, A, S ~ N(0, 1/k); B ~ N(0, 1/omega); b = 1; beta = 0; S^[1] = I.
    static Model2Params random(Eigen::Index d, Eigen::Index o, Eigen::Index k, Eigen::Index omega,
                               std::size_t order, CounterRng& rng) {
        const double sk = 1.0 / std::sqrt(static_cast<double>(k));
        const double sw = 1.0 / std::sqrt(static_cast<double>(omega));
        Model2Params p;
        p.c = rng.normal_matrix(o, k, sk);
        p.beta = Vector::Zero(o);
        for (std::size_t n = 0; n < order; ++n) {
            p.a.push_back(rng.normal_matrix(d, k, sk));
            p.s.push_back(n == 0 ? Matrix(Matrix::Identity(k, k)) : rng.normal_matrix(k, k, sk));
            p.bmat.push_back(rng.normal_matrix(omega, k, sw));
            p.bvec.push_back(Vector::Ones(omega));
        }
        return p;
    }
};

namespace detail {

inline void check_latent(Eigen::Index expected, Eigen::Index got, const char* who) {
    if (expected != got)
        throw std::invalid_argument(std::string(who) + ": latent dimension " + std::to_string(got) +
                                    " does not match parameters (" + std::to_string(expected) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Explicit polynomial
// ---------------------------------------------------------------------------

inline Vector forward_explicit(const ExplicitPolyParams& p, const Vector& z) {
    p.validate();
    Vector out = p.beta;
    for (std::size_t n = 1; n <= p.order(); ++n) {
        DenseTensor t = p.weights[n - 1];
        if (p.scaled()) t = mode_vec_product(t, 2, p.scalers[n - 1]);
        if (t.dim(2) != static_cast<std::size_t>(z.size()))
            throw std::invalid_argument("forward_explicit: latent dimension mismatch");
        for (std::size_t j = 0; j < n; ++j) t = mode_vec_product(t, 2, z);
        out += t.to_vector();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model 1
// ---------------------------------------------------------------------------

inline Matrix forward_model1(const Model1Params& p, const Matrix& z) {
    if (p.u.empty()) throw std::invalid_argument("forward_model1: order N must be >= 1");
    p.validate();
    detail::check_latent(p.latent_dim(), z.rows(), "forward_model1");
    Matrix kappa = p.u[0].transpose() * z;
    for (std::size_t n = 1; n < p.order(); ++n)
        kappa += (p.u[n].transpose() * z).cwiseProduct(kappa);
    return (p.c * kappa).colwise() + p.beta;
}

inline Vector forward_model1(const Model1Params& p, const Vector& z) {
    return forward_model1(p, Matrix(z)).col(0);
}

/// Literal nested sums over strictly decreasing chains j_1 > ... > j_{n-1} >= 2:
/// beta + C sum_n sum_chain (U^[j_1]^T z) * ... * (U^[j_{n-1}]^T z) * (U^[1]^T z).
inline Vector forward_model1_sumform(const Model1Params& p, const Vector& z) {
    if (p.u.empty()) throw std::invalid_argument("forward_model1_sumform: order N must be >= 1");
    p.validate();
    detail::check_latent(p.latent_dim(), z.size(), "forward_model1_sumform");
    const auto big_n = static_cast<int>(p.order());
    const Vector base = p.u[0].transpose() * z;
    Vector x = Vector::Zero(p.rank());

    // Extends a chain whose last index is `upper`; `remaining` indices still to pick.
    std::function<void(int, int, const Vector&)> extend = [&](int remaining, int upper,
                                                              const Vector& partial) {
        if (remaining == 0) {
            x += partial.cwiseProduct(base);
            return;
        }
        for (int j = upper - 1; j >= remaining + 1; --j)
            extend(remaining - 1, j, partial.cwiseProduct(p.u[j - 1].transpose() * z));
    };
    for (int n = 1; n <= big_n; ++n) extend(n - 1, big_n + 1, Vector::Ones(p.rank()));
    return p.beta + p.c * x;
}

/// Explicit weights of Model 1 for N <= max_order (tensor sizes grow as d^n).
inline ExplicitPolyParams materialize_model1(const Model1Params& p, std::size_t max_order = 4) {
    p.validate();
    if (p.order() > max_order)
        throw ResourceLimitError("materialize_model1: order " + std::to_string(p.order()) +
                                 " exceeds cap " + std::to_string(max_order));
    const auto o = static_cast<std::size_t>(p.output_dim());
    const auto d = static_cast<std::size_t>(p.latent_dim());
    const auto big_n = static_cast<int>(p.order());

    ExplicitPolyParams out;
    out.beta = p.beta;
    for (int n = 1; n <= big_n; ++n) {
        Shape shape{o};
        shape.insert(shape.end(), static_cast<std::size_t>(n), d);
        DenseTensor w(shape);
        // Each chain j_1 > ... > j_{n-1} >= 2 contributes the CP tensor
        // [[C, U^[1], U^[j_{n-1}], ..., U^[j_1]]], whose mode-1 unfolding is
        // C (U^[j_1] kr ... kr U^[j_{n-1}] kr U^[1])^T.
        std::vector<int> chain;
        std::function<void(int, int)> extend = [&](int remaining, int upper) {
            if (remaining == 0) {
                std::vector<Matrix> factors{p.c, p.u[0]};
                for (auto it = chain.rbegin(); it != chain.rend(); ++it) factors.push_back(p.u[*it - 1]);
                w += cp_reconstruct(FactorMatrixSet(std::move(factors)));
                return;
            }
            for (int j = upper - 1; j >= remaining + 1; --j) {
                chain.push_back(j);
                extend(remaining - 1, j);
                chain.pop_back();
            }
        };
        extend(n - 1, big_n + 1);
        out.weights.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model 2
// ---------------------------------------------------------------------------

inline Matrix forward_model2(const Model2Params& p, const Matrix& z) {
    if (p.a.empty()) throw std::invalid_argument("forward_model2: order N must be >= 1");
    p.validate();
    detail::check_latent(p.latent_dim(), z.rows(), "forward_model2");
    Matrix kappa = (p.a[0].transpose() * z).array().colwise() *
                   (p.bmat[0].transpose() * p.bvec[0]).array();
    for (std::size_t n = 1; n < p.order(); ++n) {
        Matrix lhs = (p.s[n] * kappa).colwise() + p.bmat[n].transpose() * p.bvec[n];
        kappa = lhs.cwiseProduct(p.a[n].transpose() * z);
    }
    return (p.c * kappa).colwise() + p.beta;
}

inline Vector forward_model2(const Model2Params& p, const Vector& z) {
    return forward_model2(p, Matrix(z)).col(0);
}

/// Unfolded factor matrices F_m (m = 1..N) with
///   kappa_N = sum_m F_m^T (z kr ... kr z kr b^[N-m+1])   (m copies of z).
/// F_1 = A^[N] kr B^[N];  F_{m+1} at layer n = A^[n] kr (F_m at layer n-1) S^[n]^T.
/// The transpose on S reflects that the layer applies S^[n] kappa.
inline std::vector<Matrix> model2_unfolded_factors(const Model2Params& p) {
    p.validate();
    std::vector<Matrix> f{khatri_rao(p.a[0], p.bmat[0])};
    for (std::size_t n = 1; n < p.order(); ++n) {
        std::vector<Matrix> next{khatri_rao(p.a[n], p.bmat[n])};
        for (const auto& fm : f) next.push_back(khatri_rao(p.a[n], fm * p.s[n].transpose()));
        f = std::move(next);
    }
    return f;
}

/// Explicit weights (scaled form) of Model 2. The n-th order tensor is
/// paired with b^[N-n+1]: the first layer's scaler multiplies the top order.
inline ExplicitPolyParams materialize_model2(const Model2Params& p, std::size_t max_order = 3) {
    p.validate();
    if (p.order() > max_order)
        throw UnsupportedOrderError("materialize_model2: order " + std::to_string(p.order()) +
                                    " exceeds supported maximum " + std::to_string(max_order));
    const auto o = static_cast<std::size_t>(p.output_dim());
    const auto d = static_cast<std::size_t>(p.latent_dim());
    const auto omega = static_cast<std::size_t>(p.omega());
    const auto factors = model2_unfolded_factors(p);
    const std::size_t big_n = p.order();

    ExplicitPolyParams out;
    out.beta = p.beta;
    for (std::size_t n = 1; n <= big_n; ++n) {
        Shape shape{o, omega};
        shape.insert(shape.end(), n, d);
        out.weights.push_back(mode_refold(p.c * factors[n - 1].transpose(), 1, shape));
        out.scalers.push_back(p.bvec[big_n - n]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameter counts
// ---------------------------------------------------------------------------

/// o * sum_{n=0}^{N} d^n = (d^{N+1} - 1) o / (d - 1); o (N + 1) when d = 1.
inline std::uint64_t param_count_explicit(std::uint64_t d, std::uint64_t o, std::uint64_t order) {
    if (d == 0 || o == 0) throw std::invalid_argument("param_count_explicit: d and o must be positive");
    if (d == 1) return o * (order + 1);
    std::uint64_t power = 1;
    for (std::uint64_t n = 0; n <= order; ++n) power *= d;
    return (power - 1) * o / (d - 1);
}

inline std::uint64_t param_count_model1(std::uint64_t d, std::uint64_t o, std::uint64_t k,
                                        std::uint64_t order) {
    if (d == 0 || o == 0 || k == 0) throw std::invalid_argument("param_count_model1: positive arguments required");
    if (order == 0) return o;
    return o * k + o + order * d * k;
}

/// Excludes the inert S^[1].
inline std::uint64_t param_count_model2(std::uint64_t d, std::uint64_t o, std::uint64_t k,
                                        std::uint64_t omega, std::uint64_t order) {
    if (d == 0 || o == 0 || k == 0 || omega == 0)
        throw std::invalid_argument("param_count_model2: positive arguments required");
    if (order == 0) return o;
    return o * k + o + order * (d * k + omega * k + omega) + (order - 1) * k * k;
}

}  // namespace polygan

#endif  // POLYGAN_POLY_MODELS_HPP
