/**
 * @file identity_oracle.hpp
 * @details
 * Numerical checks of the Khatri-Rao/Hadamard identities and of the
 * equivalences between the explicit polynomial and its two network forms.
 * Each check evaluates both sides independently and reports the relative
 * error max|lhs - rhs| / (1 + max|lhs|).
 */
#ifndef POLYGAN_IDENTITY_ORACLE_HPP
#define POLYGAN_IDENTITY_ORACLE_HPP

#include "polygan/poly_models.hpp"
#include "polygan/random.hpp"
#include "polygan/tensor_core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace polygan {

struct IdentityReport {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t instances = 0;
    bool passed = false;
};

inline void to_json(nlohmann::json& j, const IdentityReport& r) {
    j = nlohmann::json{{"name", r.name},
                       {"max_rel_error", r.max_rel_error},
                       {"instances", r.instances},
                       {"passed", r.passed}};
}

template <typename DerivedA, typename DerivedB>
double relative_error(const Eigen::MatrixBase<DerivedA>& lhs, const Eigen::MatrixBase<DerivedB>& rhs) {
    if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    if (lhs.size() == 0) return 0.0;
    const double diff = (lhs - rhs).cwiseAbs().maxCoeff();
    const double scale = lhs.cwiseAbs().maxCoeff();
    if (!std::isfinite(diff)) return std::numeric_limits<double>::infinity();
    return diff / (1.0 + scale);
}

/// Accumulates the worst error over several instances of one identity.
class ReportBuilder {
public:
    ReportBuilder(std::string name, double tol) : name_(std::move(name)), tol_(tol) {}

    void add(double err) {
        worst_ = std::max(worst_, err);
        ++instances_;
    }

    IdentityReport finish() const { return {name_, worst_, instances_, worst_ <= tol_}; }

private:
    std::string name_;
    double tol_;
    double worst_ = 0.0;
    std::size_t instances_ = 0;
};

/// (A1 kr A2)^T (B1 kr B2) == (A1^T B1) * (A2^T B2).
inline IdentityReport check_lemma_two_factors(const Matrix& a1, const Matrix& a2, const Matrix& b1,
                                              const Matrix& b2, double tol) {
    if (a1.rows() != b1.rows() || a2.rows() != b2.rows())
        throw std::invalid_argument("check_lemma_two_factors: paired row counts differ");
    if (a1.cols() != a2.cols() || b1.cols() != b2.cols())
        throw std::invalid_argument("check_lemma_two_factors: column counts differ within a side");
    const Matrix lhs = khatri_rao(a1, a2).transpose() * khatri_rao(b1, b2);
    const Matrix rhs = hadamard(a1.transpose() * b1, a2.transpose() * b2);
    const double err = relative_error(lhs, rhs);
    return {"lemma_two_factors", err, 1, err <= tol};
}

/// (kr_nu A_nu)^T (kr_nu B_nu) == *_nu (A_nu^T B_nu).
inline IdentityReport check_lemma_n_factors(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                                            double tol) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("check_lemma_n_factors: factor lists must be non-empty and paired");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].rows() != b[i].rows())
            throw std::invalid_argument("check_lemma_n_factors: paired row counts differ");
        if (a[i].cols() != a[0].cols() || b[i].cols() != b[0].cols())
            throw std::invalid_argument("check_lemma_n_factors: column counts differ within a side");
    }
    const Matrix lhs = khatri_rao(a).transpose() * khatri_rao(b);
    Matrix rhs = a[0].transpose() * b[0];
    for (std::size_t i = 1; i < a.size(); ++i) rhs = hadamard(rhs, a[i].transpose() * b[i]);
    const double err = relative_error(lhs, rhs);
    return {"lemma_n_factors", err, 1, err <= tol};
}

namespace detail {

inline Eigen::Index pick(CounterRng& rng, std::span<const Eigen::Index> choices) {
    return choices[static_cast<std::size_t>(rng() % choices.size())];
}

inline Model2Params transposed_s_convention(Model2Params p) {
    // The closed-form expansion writes S where the layer applies S^T.
    for (auto& s : p.s) s.transposeInPlace();
    return p;
}

}  // namespace detail

inline IdentityReport lemma_two_factor_suite(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 101);
    ReportBuilder rep("hadamard_kr_two_factors", tol);
    for (std::size_t i = 0; i < instances; ++i) {
        const auto i1 = 1 + static_cast<Eigen::Index>(rng() % 5);
        const auto i2 = 1 + static_cast<Eigen::Index>(rng() % 5);
        const auto k = 1 + static_cast<Eigen::Index>(rng() % 5);
        const auto l = 1 + static_cast<Eigen::Index>(rng() % 5);
        rep.add(check_lemma_two_factors(rng.uniform_matrix(i1, k, -1, 1), rng.uniform_matrix(i2, k, -1, 1),
                                        rng.uniform_matrix(i1, l, -1, 1), rng.uniform_matrix(i2, l, -1, 1), tol)
                    .max_rel_error);
    }
    return rep.finish();
}

inline IdentityReport lemma_n_factor_suite(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 102);
    ReportBuilder rep("hadamard_kr_n_factors", tol);
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng() % 4);  // 2..5
        const auto k = 1 + static_cast<Eigen::Index>(rng() % 4);
        const auto l = 1 + static_cast<Eigen::Index>(rng() % 4);
        std::vector<Matrix> a, b;
        for (std::size_t v = 0; v < n; ++v) {
            const auto rows = 1 + static_cast<Eigen::Index>(rng() % 4);
            a.push_back(rng.uniform_matrix(rows, k, -1, 1));
            b.push_back(rng.uniform_matrix(rows, l, -1, 1));
        }
        rep.add(check_lemma_n_factors(a, b, tol).max_rel_error);
    }
    return rep.finish();
}

/// Random instance dimensions for the claim suites; instance 0 is the scalar case.
struct ClaimDims {
    Eigen::Index d, o, k, omega;
};

inline ClaimDims random_claim_dims(CounterRng& rng, std::size_t instance) {
    static constexpr std::array<Eigen::Index, 4> kChoices{1, 2, 3, 5};
    if (instance == 0) return {1, 1, 1, 1};
    return {detail::pick(rng, kChoices), detail::pick(rng, kChoices), detail::pick(rng, kChoices),
            detail::pick(rng, kChoices)};
}

inline Model1Params uniform_model1(CounterRng& rng, const ClaimDims& dims, std::size_t order) {
    Model1Params p;
    p.c = rng.uniform_matrix(dims.o, dims.k, -1, 1);
    p.beta = rng.uniform_vector(dims.o, -1, 1);
    for (std::size_t n = 0; n < order; ++n) p.u.push_back(rng.uniform_matrix(dims.d, dims.k, -1, 1));
    return p;
}

inline Model2Params uniform_model2(CounterRng& rng, const ClaimDims& dims, std::size_t order) {
    Model2Params p;
    p.c = rng.uniform_matrix(dims.o, dims.k, -1, 1);
    p.beta = rng.uniform_vector(dims.o, -1, 1);
    for (std::size_t n = 0; n < order; ++n) {
        p.a.push_back(rng.uniform_matrix(dims.d, dims.k, -1, 1));
        p.s.push_back(rng.uniform_matrix(dims.k, dims.k, -1, 1));
        p.bmat.push_back(rng.uniform_matrix(dims.omega, dims.k, -1, 1));
        p.bvec.push_back(rng.uniform_vector(dims.omega, -1, 1));
    }
    return p;
}

/// Third-order Model 1 written as beta + C{(U3^T z) * w + w}, w = (U2^T z) * (U1^T z) + U1^T z.
inline IdentityReport claim_model1_third_order(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 201);
    ReportBuilder rep("model1_third_order", tol);
    for (std::size_t i = 0; i < instances; ++i) {
        const auto dims = random_claim_dims(rng, i);
        const auto p = uniform_model1(rng, dims, 3);
        const Vector z = rng.uniform_vector(dims.d, -1, 1);
        const Vector u1z = p.u[0].transpose() * z;
        const Vector w = (p.u[1].transpose() * z).cwiseProduct(u1z) + u1z;
        const Vector network = p.beta + p.c * ((p.u[2].transpose() * z).cwiseProduct(w) + w);
        const Vector explicit_form = forward_explicit(materialize_model1(p), z);
        rep.add(std::max(relative_error(explicit_form, network),
                         relative_error(explicit_form, forward_model1(p, z))));
    }
    return rep.finish();
}

/// Second layer of Model 2: Hadamard form vs Khatri-Rao form, and vs the
/// materialized N = 2 polynomial.
inline IdentityReport claim_model2_second_layer(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 202);
    ReportBuilder rep("model2_second_order", tol);
    for (std::size_t i = 0; i < instances; ++i) {
        const auto dims = random_claim_dims(rng, i);
        const auto q = uniform_model2(rng, dims, 2);  // S in the claim's convention
        const Vector z = rng.uniform_vector(dims.d, -1, 1);
        const Matrix zm = z;
        const Matrix b1 = q.bvec[0], b2 = q.bvec[1];

        const Vector inner = (q.a[0].transpose() * z).cwiseProduct(q.bmat[0].transpose() * q.bvec[0]);
        const Vector hadamard_form = (q.a[1].transpose() * z)
                                         .cwiseProduct(q.bmat[1].transpose() * q.bvec[1] +
                                                       q.s[1].transpose() * inner);
        const Matrix m1 = khatri_rao(q.a[1], khatri_rao(q.a[0], q.bmat[0]) * q.s[1]);
        const Matrix m2 = khatri_rao(q.a[1], q.bmat[1]);
        const Vector kr_form = m1.transpose() * khatri_rao(zm, khatri_rao(zm, b1)) +
                               m2.transpose() * khatri_rao(zm, b2);

        Model2Params net = detail::transposed_s_convention(q);
        net.c = Matrix::Identity(dims.k, dims.k);
        net.beta = Vector::Zero(dims.k);
        const Vector explicit_form = forward_explicit(materialize_model2(net), z);
        rep.add(std::max({relative_error(kr_form, hadamard_form), relative_error(kr_form, explicit_form),
                          relative_error(kr_form, forward_model2(net, z))}));
    }
    return rep.finish();
}

/// Third-order Model 2: lambda = beta + C{(A3^T z) * [B3^T b3 + S3^T w]} vs the
/// materialized polynomial and the layer recursion.
inline IdentityReport claim_model2_third_order(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 203);
    ReportBuilder rep("model2_third_order", tol);
    for (std::size_t i = 0; i < instances; ++i) {
        const auto dims = random_claim_dims(rng, i);
        const auto p = uniform_model2(rng, dims, 3);
        const Vector z = rng.uniform_vector(dims.d, -1, 1);
        const auto q = detail::transposed_s_convention(p);

        const Vector inner = (q.a[0].transpose() * z).cwiseProduct(q.bmat[0].transpose() * q.bvec[0]);
        const Vector w = (q.a[1].transpose() * z)
                             .cwiseProduct(q.bmat[1].transpose() * q.bvec[1] + q.s[1].transpose() * inner);
        const Vector lambda =
            q.beta + q.c * (q.a[2].transpose() * z)
                               .cwiseProduct(q.bmat[2].transpose() * q.bvec[2] + q.s[2].transpose() * w);

        const Vector explicit_form = forward_explicit(materialize_model2(p), z);
        rep.add(std::max(relative_error(explicit_form, forward_model2(p, z)),
                         relative_error(explicit_form, lambda)));
    }
    return rep.finish();
}

/// N-th order Model 1 for N in 1..4: recursion vs nested sums vs explicit polynomial.
inline IdentityReport claim_model1_nth_order(std::uint64_t seed, double tol, std::size_t instances = 100) {
    CounterRng rng(seed, 204);
    ReportBuilder rep("model1_nth_order", tol);
    for (std::size_t order = 1; order <= 4; ++order)
        for (std::size_t i = 0; i < instances; ++i) {
            const auto dims = random_claim_dims(rng, i);
            const auto p = uniform_model1(rng, dims, order);
            const Vector z = rng.uniform_vector(dims.d, -1, 1);
            const Vector explicit_form = forward_explicit(materialize_model1(p), z);
            rep.add(std::max(relative_error(explicit_form, forward_model1(p, z)),
                             relative_error(explicit_form, forward_model1_sumform(p, z))));
        }
    return rep.finish();
}

inline std::vector<IdentityReport> run_claim_suite(std::uint64_t seed, double tol, std::size_t instances = 100) {
    return {claim_model1_third_order(seed, tol, instances), claim_model2_second_layer(seed, tol, instances),
            claim_model2_third_order(seed, tol, instances), claim_model1_nth_order(seed, tol, instances)};
}

// ---------------------------------------------------------------------------
// Degree probe
// ---------------------------------------------------------------------------

/// Chebyshev nodes on [-1, 1].
inline std::vector<double> chebyshev_nodes(std::size_t count) {
    std::vector<double> nodes(count);
    for (std::size_t i = 0; i < count; ++i)
        nodes[i] = std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) /
                            (2.0 * static_cast<double>(count)));
    return nodes;
}

/// Monomial coefficients (degree+1 rows, one column per output) of the
/// interpolant of alpha -> g(alpha z) through `nodes`.
inline Matrix interpolation_coefficients(const std::function<Vector(const Vector&)>& g, const Vector& z,
                                         std::span<const double> nodes) {
    const auto count = static_cast<Eigen::Index>(nodes.size());
    Matrix vander(count, count);
    Matrix values;
    for (Eigen::Index i = 0; i < count; ++i) {
        const double alpha = nodes[static_cast<std::size_t>(i)];
        double power = 1.0;
        for (Eigen::Index j = 0; j < count; ++j, power *= alpha) vander(i, j) = power;
        const Vector gi = g(alpha * z);
        if (i == 0) values.resize(count, gi.size());
        values.row(i) = gi.transpose();
    }
    return vander.fullPivLu().solve(values);
}

inline Vector evaluate_monomials(const Matrix& coeffs, double alpha) {
    Vector out = Vector::Zero(coeffs.cols());
    for (Eigen::Index j = coeffs.rows(); j-- > 0;) out = out * alpha + coeffs.row(j).transpose();
    return out;
}

/// Fits a degree-`degree` interpolant at Chebyshev nodes and returns the worst
/// relative error at `held_out` extra nodes (midpoints between fit nodes).
inline double degree_probe(const std::function<Vector(const Vector&)>& g, const Vector& z, std::size_t degree,
                           std::size_t held_out = 5) {
    const auto nodes = chebyshev_nodes(degree + 1);
    const Matrix coeffs = interpolation_coefficients(g, z, nodes);
    double worst = 0.0;
    for (std::size_t h = 0; h < held_out; ++h) {
        const double alpha = -0.95 + 1.9 * (static_cast<double>(h) + 0.5) / static_cast<double>(held_out);
        const Vector actual = g(alpha * z);
        worst = std::max(worst, relative_error(actual, evaluate_monomials(coeffs, alpha)));
    }
    return worst;
}

/// Degree probe over both models, N = 1..max_order, latent z uniform on [-1, 1]^d.
inline IdentityReport degree_probe_suite(std::uint64_t seed, double tol, std::size_t max_order = 6,
                                         std::size_t instances = 20) {
    CounterRng rng(seed, 301);
    ReportBuilder rep("degree_probe", tol);
    for (std::size_t order = 1; order <= max_order; ++order)
        for (std::size_t i = 0; i < instances; ++i) {
            const auto dims = random_claim_dims(rng, i);
            const Vector z = rng.uniform_vector(dims.d, -1, 1);
            const auto p1 = uniform_model1(rng, dims, order);
            const auto p2 = uniform_model2(rng, dims, order);
            rep.add(degree_probe([&](const Vector& x) { return forward_model1(p1, x); }, z, order));
            rep.add(degree_probe([&](const Vector& x) { return forward_model2(p2, x); }, z, order));
        }
    return rep.finish();
}

}  // namespace polygan

#endif  // POLYGAN_IDENTITY_ORACLE_HPP
