/**
 * @file tensor_core.hpp
 * @details
 * Dense tensor container and the multilinear primitives used by the
 * polynomial generators: mode-m unfolding/refolding, mode-m vector product,
 * Khatri-Rao and Hadamard products, and CP reconstruction.
 *
 * Index conventions
 * -----------------
 * Tensor data is stored row-major with 0-based element indices (the last
 * mode varies fastest in memory). Mode numbers are 1-based, as in the
 * multilinear algebra literature: mode 1 is the first dimension.
 *
 * The mode-m unfolding places element (i_1, ..., i_M) at row i_m and column
 *
 *     j = sum_{k != m} i_k * J_k,   J_k = prod_{n < k, n != m} I_n
 *
 * (0-based), i.e. the lowest remaining mode varies fastest along the
 * columns. With this layout the mode-1 unfolding of a CP tensor is
 * U1 * (UM kr ... kr U2)^T, where kr is the Khatri-Rao product whose left
 * operand varies slowest along the rows.
 *
 * An order-1 tensor (a vector of length I_1) unfolds along mode 1 into an
 * I_1 x 1 matrix.
 */
#ifndef POLYGAN_TENSOR_CORE_HPP
#define POLYGAN_TENSOR_CORE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polygan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(std::span<const std::size_t> shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

/// Arbitrary-order dense real tensor, row-major.
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_size(shape_), 0.0);
    }

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != shape_size(shape_))
            throw std::invalid_argument("DenseTensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
    }

    /// Wraps a matrix as an order-2 tensor.
    static DenseTensor from_matrix(const Matrix& m) {
        DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                t.data_[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
        return t;
    }

    static DenseTensor from_vector(const Vector& v) {
        return DenseTensor({static_cast<std::size_t>(v.size())},
                           std::vector<double>(v.data(), v.data() + v.size()));
    }

    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    const Shape& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode - 1); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Flat offset of a 0-based multi-index.
    std::size_t offset(std::span<const std::size_t> index) const {
        if (index.size() != shape_.size())
            throw std::invalid_argument("DenseTensor: index arity does not match order");
        std::size_t off = 0;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            if (index[k] >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
            off = off * shape_[k] + index[k];
        }
        return off;
    }

    double& operator()(std::span<const std::size_t> index) { return data_[offset(index)]; }
    double operator()(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    double& at(std::initializer_list<std::size_t> index) {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }
    double at(std::initializer_list<std::size_t> index) const {
        return (*this)(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Order-1 tensor as vector, order-2 tensor as matrix.
    Vector to_vector() const {
        return Eigen::Map<const Vector>(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }
    Matrix to_matrix() const {
        if (order() != 2) throw std::invalid_argument("DenseTensor::to_matrix: order must be 2");
        Matrix m(shape_[0], shape_[1]);
        for (std::size_t i = 0; i < shape_[0]; ++i)
            for (std::size_t j = 0; j < shape_[1]; ++j) m(i, j) = data_[i * shape_[1] + j];
        return m;
    }

    DenseTensor& operator+=(const DenseTensor& other) {
        if (other.shape_ != shape_)
            throw std::invalid_argument("DenseTensor: shape mismatch in +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    void validate_shape() const {
        if (shape_.empty()) throw std::invalid_argument("DenseTensor: order must be >= 1");
        for (auto s : shape_)
            if (s == 0) throw std::invalid_argument("DenseTensor: dimensions must be positive");
    }

    Shape shape_;
    std::vector<double> data_;
};

namespace detail {

inline void check_mode(std::size_t order, std::size_t mode) {
    if (mode < 1 || mode > order)
        throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for order " +
                                    std::to_string(order));
}

// Column strides J_k of the mode-m unfolding (0 for k == m).
inline std::vector<std::size_t> unfolding_strides(const Shape& shape, std::size_t mode) {
    std::vector<std::size_t> strides(shape.size(), 0);
    std::size_t running = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k + 1 == mode) continue;
        strides[k] = running;
        running *= shape[k];
    }
    return strides;
}

// Calls f(flat_offset, multi_index) for every element in row-major order.
template <typename F>
void for_each_index(const Shape& shape, F&& f) {
    std::vector<std::size_t> idx(shape.size(), 0);
    const std::size_t total = shape_size(shape);
    for (std::size_t flat = 0; flat < total; ++flat) {
        f(flat, std::as_const(idx));
        for (std::size_t k = shape.size(); k-- > 0;) {
            if (++idx[k] < shape[k]) break;
            idx[k] = 0;
        }
    }
}

}  // namespace detail

/// Mode-m unfolding (1-based mode) into an I_m x prod_{k != m} I_k matrix.
inline Matrix mode_unfold(const DenseTensor& t, std::size_t mode) {
    detail::check_mode(t.order(), mode);
    const auto& shape = t.shape();
    const auto strides = detail::unfolding_strides(shape, mode);
    const std::size_t rows = shape[mode - 1];
    Matrix out(rows, t.size() / rows);
    auto data = t.data();
    detail::for_each_index(shape, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
        std::size_t col = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) col += idx[k] * strides[k];
        out(idx[mode - 1], col) = data[flat];
    });
    return out;
}

/// Inverse of mode_unfold for the given target shape.
inline DenseTensor mode_refold(const Matrix& m, std::size_t mode, const Shape& shape) {
    detail::check_mode(shape.size(), mode);
    DenseTensor t(shape);
    const std::size_t rows = shape[mode - 1];
    if (static_cast<std::size_t>(m.rows()) != rows ||
        static_cast<std::size_t>(m.cols()) != t.size() / rows)
        throw std::invalid_argument("mode_refold: matrix is not an unfolding of shape " +
                                    shape_string(shape));
    const auto strides = detail::unfolding_strides(shape, mode);
    auto data = t.data();
    detail::for_each_index(shape, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
        std::size_t col = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) col += idx[k] * strides[k];
        data[flat] = m(idx[mode - 1], col);
    });
    return t;
}

/// Contracts mode m with u. The result has mode m removed; contracting an
/// order-1 tensor yields a length-1 tensor holding the scalar.
inline DenseTensor mode_vec_product(const DenseTensor& t, std::size_t mode, const Vector& u) {
    detail::check_mode(t.order(), mode);
    const auto& shape = t.shape();
    const std::size_t im = shape[mode - 1];
    if (static_cast<std::size_t>(u.size()) != im)
        throw std::invalid_argument("mode_vec_product: vector length " + std::to_string(u.size()) +
                                    " does not match mode " + std::to_string(mode) + " size " +
                                    std::to_string(im));
    Shape out_shape;
    for (std::size_t k = 0; k < shape.size(); ++k)
        if (k + 1 != mode) out_shape.push_back(shape[k]);
    if (out_shape.empty()) out_shape.push_back(1);

    // View the row-major data as (outer, im, inner) and reduce the middle axis.
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k + 1 < mode; ++k) outer *= shape[k];
    for (std::size_t k = mode; k < shape.size(); ++k) inner *= shape[k];

    DenseTensor out(std::move(out_shape));
    auto src = t.data();
    auto dst = out.data();
    for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t i = 0; i < im; ++i) {
            const double w = u[static_cast<Eigen::Index>(i)];
            const double* row = src.data() + (a * im + i) * inner;
            double* acc = dst.data() + a * inner;
            for (std::size_t c = 0; c < inner; ++c) acc[c] += row[c] * w;
        }
    return out;
}

/// Column-wise Kronecker product; row (i, j) of the result is i * J + j.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.cols()) + ")");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        out.middleRows(i * b.rows(), b.rows()) = b.array().rowwise() * a.row(i).array();
    return out;
}

/// Left fold A_1 kr A_2 kr ... kr A_n; the first matrix varies slowest.
inline Matrix khatri_rao(std::span<const Matrix> factors) {
    if (factors.empty()) throw std::invalid_argument("khatri_rao: empty factor list");
    Matrix out = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) out = khatri_rao(out, factors[i]);
    return out;
}

/// Elementwise product of equally shaped matrices (or vectors).
template <typename DerivedA, typename DerivedB>
auto hadamard(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("hadamard: shape mismatch");
    return a.cwiseProduct(b).eval();
}

/// Factor matrices U^(1..M) of a rank-R CP decomposition.
struct FactorMatrixSet {
    std::vector<Matrix> factors;

    FactorMatrixSet() = default;
    explicit FactorMatrixSet(std::vector<Matrix> f) : factors(std::move(f)) { validate(); }

    std::size_t order() const noexcept { return factors.size(); }
    Eigen::Index rank() const { return factors.empty() ? 0 : factors.front().cols(); }

    Shape shape() const {
        Shape s;
        for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
        return s;
    }

    void validate() const {
        if (factors.empty()) throw std::invalid_argument("FactorMatrixSet: no factors");
        const auto r = factors.front().cols();
        if (r < 1) throw std::invalid_argument("FactorMatrixSet: rank must be >= 1");
        for (const auto& f : factors) {
            if (f.cols() != r)
                throw std::invalid_argument("FactorMatrixSet: factors disagree on column count");
            if (f.rows() < 1) throw std::invalid_argument("FactorMatrixSet: empty factor");
        }
    }
};

/// Sum over r of the outer products u_r^(1) o ... o u_r^(M).
inline DenseTensor cp_reconstruct(const FactorMatrixSet& f) {
    f.validate();
    DenseTensor out(f.shape());
    auto data = out.data();
    const auto rank = f.rank();
    detail::for_each_index(out.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
        double sum = 0.0;
        for (Eigen::Index r = 0; r < rank; ++r) {
            double prod = 1.0;
            for (std::size_t m = 0; m < idx.size(); ++m)
                prod *= f.factors[m](static_cast<Eigen::Index>(idx[m]), r);
            sum += prod;
        }
        data[flat] = sum;
    });
    return out;
}

/// Mode-1 unfolded CP tensor: U^(1) (U^(M) kr ... kr U^(2))^T.
inline Matrix cp_mode1_matrix(const FactorMatrixSet& f) {
    f.validate();
    if (f.order() < 2) throw std::invalid_argument("cp_mode1_matrix: order must be >= 2");
    std::vector<Matrix> reversed(f.factors.rbegin(), f.factors.rend() - 1);
    return f.factors.front() * khatri_rao(reversed).transpose();
}

}  // namespace polygan

#endif  // POLYGAN_TENSOR_CORE_HPP
