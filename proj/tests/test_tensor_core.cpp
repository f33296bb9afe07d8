#include "polygan/tensor_core.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace polygan;
using polygan::testing::for_each_multi_index;
using polygan::testing::random_tensor;

namespace {

// Column of element idx in the mode-m unfolding, written straight from the
// 1-based index map: j = 1 + sum_{k != m} (i_k - 1) J_k, J_k = prod_{n < k, n != m} I_n.
std::size_t unfold_column_oracle(const Shape& shape, std::size_t mode, const std::vector<std::size_t>& idx0) {
    std::size_t j = 1;
    for (std::size_t k = 1; k <= shape.size(); ++k) {
        if (k == mode) continue;
        std::size_t jk = 1;
        for (std::size_t n = 1; n < k; ++n)
            if (n != mode) jk *= shape[n - 1];
        j += ((idx0[k - 1] + 1) - 1) * jk;
    }
    return j - 1;
}

}  // namespace

TEST(DenseTensor, RejectsBadShapes) {
    EXPECT_THROW(DenseTensor(Shape{}), std::invalid_argument);
    EXPECT_THROW(DenseTensor(Shape{2, 0}), std::invalid_argument);
    EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), std::invalid_argument);
}

TEST(DenseTensor, RowMajorLayout) {
    DenseTensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.at({1, 0}), 4.0);
    EXPECT_EQ(t.at({0, 2}), 3.0);
    EXPECT_THROW(t.at({2, 0}), std::out_of_range);
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(t.to_matrix(), m);
    EXPECT_EQ(DenseTensor::from_matrix(m), t);
}

TEST(ModeUnfold, MatrixModeOneIsIdentity) {
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(mode_unfold(DenseTensor::from_matrix(m), 1), m);
    EXPECT_EQ(mode_unfold(DenseTensor::from_matrix(m), 2), m.transpose());
}

TEST(ModeUnfold, CubeOneToEightFollowsIndexMap) {
    std::vector<double> data(8);
    std::iota(data.begin(), data.end(), 1.0);
    DenseTensor t({2, 2, 2}, data);
    // Row-major entries: t(i,j,k) = 1 + 4i + 2j + k. Mode 1: column = j + 2k.
    Matrix expected(2, 4);
    expected << 1, 3, 2, 4,
                5, 7, 6, 8;
    EXPECT_EQ(mode_unfold(t, 1), expected);
}

TEST(ModeUnfold, MatchesIndexFormulaForAllModes) {
    CounterRng rng(1, 0);
    for (const Shape& shape : {Shape{3}, Shape{2, 3, 4}, Shape{3, 1, 2, 2}, Shape{2, 3, 2, 1, 2}}) {
        const auto t = random_tensor(shape, rng);
        for (std::size_t m = 1; m <= shape.size(); ++m) {
            const Matrix u = mode_unfold(t, m);
            ASSERT_EQ(static_cast<std::size_t>(u.rows()), shape[m - 1]);
            ASSERT_EQ(static_cast<std::size_t>(u.size()), t.size());
            for_each_multi_index(shape, [&](const std::vector<std::size_t>& idx) {
                EXPECT_EQ(u(idx[m - 1], unfold_column_oracle(shape, m, idx)), t(idx));
            });
        }
    }
}

TEST(ModeUnfold, OrderOneIsAColumn) {
    const auto t = DenseTensor::from_vector(Vector::LinSpaced(4, 1, 4));
    const Matrix u = mode_unfold(t, 1);
    EXPECT_EQ(u.rows(), 4);
    EXPECT_EQ(u.cols(), 1);
}

TEST(ModeUnfold, RejectsBadMode) {
    DenseTensor t({2, 2});
    EXPECT_THROW(mode_unfold(t, 0), std::invalid_argument);
    EXPECT_THROW(mode_unfold(t, 3), std::invalid_argument);
    EXPECT_THROW(mode_refold(Matrix::Zero(2, 2), 1, Shape{2, 3}), std::invalid_argument);
}

TEST(ModeUnfold, RoundTripUpToOrderFive) {
    CounterRng rng(2, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto order = 1 + rng() % 5;
        Shape shape;
        for (std::size_t k = 0; k < order; ++k) shape.push_back(1 + rng() % 4);
        const auto t = random_tensor(shape, rng);
        for (std::size_t m = 1; m <= order; ++m) EXPECT_EQ(mode_refold(mode_unfold(t, m), m, shape), t);
    }
}

TEST(ModeVecProduct, SelectsColumnOfIdentity) {
    const auto eye = DenseTensor::from_matrix(Matrix::Identity(2, 2));
    const auto r = mode_vec_product(eye, 2, Vector::Unit(2, 0));
    EXPECT_EQ(r.shape(), Shape{2});
    EXPECT_EQ(r.to_vector(), Vector::Unit(2, 0));
}

TEST(ModeVecProduct, SumsUnitSlices) {
    DenseTensor ones({2, 2, 2}, std::vector<double>(8, 1.0));
    const auto r = mode_vec_product(ones, 3, Vector::Ones(2));
    EXPECT_EQ(r.to_matrix(), Matrix::Constant(2, 2, 2.0));
}

TEST(ModeVecProduct, MatchesTripleLoop) {
    CounterRng rng(3, 0);
    const auto t = random_tensor({3, 4, 2}, rng);
    const Vector u = rng.uniform_vector(4, -1, 1);
    const auto r = mode_vec_product(t, 2, u);
    ASSERT_EQ(r.shape(), (Shape{3, 2}));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < 4; ++j) s += t.at({i, j, k}) * u[static_cast<Eigen::Index>(j)];
            EXPECT_NEAR(r.at({i, k}), s, 1e-14);
        }
}

TEST(ModeVecProduct, IsLinearInVector) {
    CounterRng rng(4, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = random_tensor({3, 2, 4, 2}, rng);
        const std::size_t m = 1 + rng() % 4;
        const Vector u = rng.uniform_vector(static_cast<Eigen::Index>(t.dim(m)), -1, 1);
        const Vector v = rng.uniform_vector(static_cast<Eigen::Index>(t.dim(m)), -1, 1);
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        const Vector lhs = mode_vec_product(t, m, a * u + b * v).to_vector();
        const Vector rhs = a * mode_vec_product(t, m, u).to_vector() + b * mode_vec_product(t, m, v).to_vector();
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + lhs.cwiseAbs().maxCoeff()), 1e-12);
    }
}

TEST(ModeVecProduct, RejectsLengthMismatch) {
    DenseTensor t({2, 3});
    EXPECT_THROW(mode_vec_product(t, 2, Vector::Ones(2)), std::invalid_argument);
}

TEST(KhatriRao, HandExpansion) {
    Matrix a(2, 1), b(2, 1), expected(4, 1);
    a << 1, 2;
    b << 3, 4;
    expected << 3, 4, 6, 8;
    EXPECT_EQ(khatri_rao(a, b), expected);
}

TEST(KhatriRao, RowOfOnesIsNeutral) {
    CounterRng rng(5, 0);
    const Matrix b = rng.uniform_matrix(3, 4, -1, 1);
    EXPECT_EQ(khatri_rao(Matrix::Ones(1, 4), b), b);
}

TEST(KhatriRao, ColumnsAreKroneckerProducts) {
    CounterRng rng(6, 0);
    const Matrix a = rng.uniform_matrix(3, 4, -1, 1), b = rng.uniform_matrix(5, 4, -1, 1);
    const Matrix kr = khatri_rao(a, b);
    for (Eigen::Index n = 0; n < 4; ++n)
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 5; ++j) EXPECT_EQ(kr(i * 5 + j, n), a(i, n) * b(j, n));
}

TEST(KhatriRao, FoldIsAssociative) {
    CounterRng rng(7, 0);
    const Matrix a = rng.uniform_matrix(2, 2, -1, 1), b = rng.uniform_matrix(2, 2, -1, 1),
                 c = rng.uniform_matrix(2, 2, -1, 1);
    const std::vector<Matrix> list{a, b, c};
    const Matrix left = khatri_rao(list);
    const Matrix right = khatri_rao(a, khatri_rao(b, c));
    EXPECT_LE((left - right).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KhatriRao, RejectsColumnMismatch) {
    EXPECT_THROW(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), std::invalid_argument);
    EXPECT_THROW(khatri_rao(std::span<const Matrix>{}), std::invalid_argument);
}

TEST(Hadamard, IdentityAnnihilatorAndLoop) {
    CounterRng rng(8, 0);
    const Matrix a = rng.uniform_matrix(3, 2, -1, 1), b = rng.uniform_matrix(3, 2, -1, 1);
    EXPECT_EQ(hadamard(a, Matrix::Ones(3, 2)), a);
    EXPECT_EQ(hadamard(a, Matrix::Zero(3, 2)), Matrix::Zero(3, 2));
    const Matrix h = hadamard(a, b);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) EXPECT_EQ(h(i, j), a(i, j) * b(i, j));
    EXPECT_THROW(hadamard(a, Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST(CpReconstruct, RankOneIndicator) {
    const FactorMatrixSet f({Vector::Unit(2, 0), Vector::Unit(3, 0), Vector::Unit(2, 0)});
    const auto t = cp_reconstruct(f);
    EXPECT_EQ(t.shape(), (Shape{2, 3, 2}));
    EXPECT_EQ(t.at({0, 0, 0}), 1.0);
    double total = 0.0;
    for (double x : t.data()) total += x;
    EXPECT_EQ(total, 1.0);
}

TEST(CpReconstruct, MatchesOuterProductLoop) {
    CounterRng rng(9, 0);
    const FactorMatrixSet f({rng.uniform_matrix(2, 2, -1, 1), rng.uniform_matrix(3, 2, -1, 1),
                             rng.uniform_matrix(4, 2, -1, 1)});
    const auto t = cp_reconstruct(f);
    for_each_multi_index(t.shape(), [&](const std::vector<std::size_t>& idx) {
        double s = 0.0;
        for (Eigen::Index r = 0; r < 2; ++r) {
            double p = 1.0;
            for (std::size_t m = 0; m < 3; ++m) p *= f.factors[m](static_cast<Eigen::Index>(idx[m]), r);
            s += p;
        }
        EXPECT_NEAR(t(idx), s, 1e-15);
    });
}

TEST(CpReconstruct, RejectsInconsistentRanks) {
    EXPECT_THROW(FactorMatrixSet({Matrix::Ones(2, 2), Matrix::Ones(2, 3)}), std::invalid_argument);
    EXPECT_THROW(FactorMatrixSet(std::vector<Matrix>{}), std::invalid_argument);
}

TEST(CpMode1Matrix, TwoFactors) {
    CounterRng rng(10, 0);
    const Matrix u1 = rng.uniform_matrix(3, 2, -1, 1), u2 = rng.uniform_matrix(4, 2, -1, 1);
    EXPECT_LE((cp_mode1_matrix(FactorMatrixSet({u1, u2})) - u1 * u2.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(cp_mode1_matrix(FactorMatrixSet({u1})), std::invalid_argument);
}

TEST(CpMode1Matrix, OnesGiveRankOneOnes) {
    const FactorMatrixSet f({Matrix::Ones(2, 1), Matrix::Ones(3, 1), Matrix::Ones(2, 1)});
    EXPECT_EQ(cp_mode1_matrix(f), Matrix::Ones(2, 6));
}

TEST(CpMode1Matrix, EqualsUnfoldedReconstruction) {
    CounterRng rng(11, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto order = 2 + rng() % 4;
        const Eigen::Index rank = 1 + static_cast<Eigen::Index>(rng() % 4);
        std::vector<Matrix> factors;
        for (std::size_t m = 0; m < order; ++m)
            factors.push_back(rng.uniform_matrix(1 + static_cast<Eigen::Index>(rng() % 3), rank, -1, 1));
        const FactorMatrixSet f(factors);
        const Matrix lhs = cp_mode1_matrix(f);
        const Matrix rhs = mode_unfold(cp_reconstruct(f), 1);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + lhs.cwiseAbs().maxCoeff()), 1e-10);
    }
}
