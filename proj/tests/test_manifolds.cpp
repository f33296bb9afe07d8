#include "polygan/manifolds.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace polygan;

namespace {

constexpr ManifoldId kAll[] = {ManifoldId::sin2d, ManifoldId::astroid, ManifoldId::sin3d, ManifoldId::swissroll,
                               ManifoldId::gabriels_horn};

// Upper 0.1% point of the chi-square distribution with 15 degrees of freedom.
constexpr double kChiSquare15At001 = 37.697;

double point_residual(ManifoldId id, std::initializer_list<double> coords, double alpha = 1.0) {
    ManifoldSpec spec{id, alpha};
    Vector p(static_cast<Eigen::Index>(coords.size()));
    Eigen::Index i = 0;
    for (double c : coords) p[i++] = c;
    return residual(spec, p);
}

}  // namespace

TEST(Manifolds, Names) {
    for (auto id : kAll) EXPECT_EQ(parse_manifold(to_string(id)), id);
    EXPECT_FALSE(parse_manifold("torus").has_value());
    EXPECT_EQ(manifold_dim(ManifoldId::astroid), 2);
    EXPECT_EQ(manifold_dim(ManifoldId::gabriels_horn), 3);
}

TEST(Manifolds, SpecValidation) {
    EXPECT_THROW((ManifoldSpec{ManifoldId::astroid, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ManifoldSpec{ManifoldId::swissroll, 1.0, -0.1}.validate()), std::invalid_argument);
}

TEST(Manifolds, ParametricExamples) {
    const double zero = 0.0;
    EXPECT_EQ(manifold_point({ManifoldId::sin2d}, std::span(&zero, 1)), Vector::Zero(2));
    EXPECT_EQ(manifold_point({ManifoldId::astroid}, std::span(&zero, 1)), Vector::Unit(2, 0));
    const double horn[] = {0.0, 2.0};
    const Vector h = manifold_point({ManifoldId::gabriels_horn}, horn);
    EXPECT_EQ(h, (Vector{{2.0, 0.5, 0.0}}));
}

TEST(Manifolds, ResidualExamples) {
    EXPECT_DOUBLE_EQ(point_residual(ManifoldId::sin2d, {std::numbers::pi / 2, 0.0}), 1.0);
    EXPECT_EQ(point_residual(ManifoldId::gabriels_horn, {2.0, 0.5, 0.0}), 0.0);
    EXPECT_TRUE(std::isinf(point_residual(ManifoldId::sin2d, {-1.5, std::sin(-1.5)})));
    EXPECT_TRUE(std::isinf(point_residual(ManifoldId::sin2d, {8.0, std::sin(8.0)})));
    EXPECT_LT(point_residual(ManifoldId::sin2d, {-0.5 * kSin2dDomainMargin, 0.0}), 1.0);
    EXPECT_NEAR(point_residual(ManifoldId::astroid, {0.0, 0.0}), 1.0, 1e-15);
    EXPECT_NEAR(point_residual(ManifoldId::astroid, {8.0, 0.0}, 8.0), 0.0, 1e-14);
    EXPECT_NEAR(point_residual(ManifoldId::sin3d, {0.0, 0.0, 0.5}), 0.5, 1e-15);
    EXPECT_NEAR(point_residual(ManifoldId::swissroll, {0.0, 0.5, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(point_residual(ManifoldId::swissroll, {0.0, 1.5, 0.0}), 0.5, 1e-12);
    EXPECT_THROW(point_residual(ManifoldId::sin3d, {0.0, 0.0}), std::invalid_argument);
}

TEST(Manifolds, SamplesLieOnManifold) {
    for (auto id : kAll) {
        ManifoldSpec spec{id};
        spec.noise = 0.0;
        for (double alpha : {1.0, 2.5}) {
            spec.alpha = alpha;
            const Matrix pts = sample(spec, 2000, 1);
            ASSERT_EQ(pts.rows(), manifold_dim(id));
            for (double r : residuals(spec, pts)) EXPECT_LE(r, id == ManifoldId::swissroll ? 1.0 / (kSwissRollGrid - 1) : 1e-12);
        }
    }
    ManifoldSpec full{ManifoldId::astroid};
    full.astroid_full_curve = true;
    for (double r : residuals(full, sample(full, 1000, 2))) EXPECT_LE(r, 1e-12);
}

// The swiss-roll residual is a 2000-node grid search, so exact points sit within the grid spacing.
TEST(Manifolds, SwissRollGridResolution) {
    ManifoldSpec spec{ManifoldId::swissroll};
    spec.noise = 0.0;
    double worst = 0.0;
    for (double r : residuals(spec, sample(spec, 5000, 3))) worst = std::max(worst, r);
    EXPECT_LE(worst, 1.0 / (kSwissRollGrid - 1));
}

TEST(Manifolds, NoisySwissRollWithinThreeSigma) {
    ManifoldSpec spec{ManifoldId::swissroll};
    const auto res = residuals(spec, sample(spec, 10000, 4));
    const auto within = std::count_if(res.begin(), res.end(), [&](double r) { return r <= 3.0 * spec.noise; });
    EXPECT_GE(static_cast<double>(within) / static_cast<double>(res.size()), 0.99);
}

TEST(Manifolds, DeterministicPerSeed) {
    for (auto id : kAll) {
        EXPECT_EQ(sample({id}, 100, 9), sample({id}, 100, 9));
        EXPECT_NE(sample({id}, 100, 9), sample({id}, 100, 10));
    }
}

TEST(Manifolds, ParameterMarginalsAreUniform) {
    constexpr std::size_t n = 100000, bins = 16;
    for (auto id : kAll) {
        ManifoldSpec spec{id};
        spec.noise = 0.0;
        const Matrix pts = sample(spec, n, 11);
        const auto ranges = coverage_ranges(spec);
        for (std::size_t r = 0; r < ranges.size(); ++r) {
            std::vector<double> counts(bins, 0.0);
            for (Eigen::Index i = 0; i < pts.cols(); ++i) {
                const double v = coverage_parameters(spec, pts.col(i))[r];
                const auto b = static_cast<std::size_t>((v - ranges[r].lo) / (ranges[r].hi - ranges[r].lo) * bins);
                counts[std::min(b, bins - 1)] += 1.0;
            }
            const double expected = static_cast<double>(n) / bins;
            double chi2 = 0.0;
            for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
            EXPECT_LT(chi2, kChiSquare15At001) << to_string(id) << " parameter " << r;
        }
    }
}

TEST(Coverage, ExactSamplesCoverEverything) {
    for (auto id : kAll) {
        ManifoldSpec spec{id};
        spec.noise = 0.0;
        EXPECT_EQ(coverage(spec, sample(spec, 2000, 5), 16), 1.0) << to_string(id);
    }
}

TEST(Coverage, CollapsedPointsFillOneBin) {
    for (auto id : kAll) {
        ManifoldSpec spec{id};
        spec.noise = 0.0;
        const Matrix one = sample(spec, 1, 6);
        const Matrix pts = one.replicate(1, 500);
        EXPECT_DOUBLE_EQ(coverage(spec, pts, 16), 1.0 / 16.0) << to_string(id);
    }
}

TEST(Coverage, HalfRangeIsAboutHalf) {
    ManifoldSpec spec{ManifoldId::sin2d};
    Matrix pts = sample(spec, 4000, 7);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        pts(0, i) *= 0.5;
        pts(1, i) = std::sin(pts(0, i));
    }
    EXPECT_NEAR(coverage(spec, pts, 16), 0.5, 1.0 / 16.0);
}

TEST(Coverage, GridShapes) {
    EXPECT_EQ(coverage_grid(16, 2), (std::pair<std::size_t, std::size_t>{4, 4}));
    EXPECT_EQ(coverage_grid(12, 2), (std::pair<std::size_t, std::size_t>{3, 4}));
    EXPECT_EQ(coverage_grid(7, 2), (std::pair<std::size_t, std::size_t>{1, 7}));
    EXPECT_EQ(coverage_grid(16, 1), (std::pair<std::size_t, std::size_t>{16, 1}));
    EXPECT_THROW(coverage({ManifoldId::sin2d}, Matrix::Zero(2, 3), 1), std::invalid_argument);
}

TEST(Coverage, OutOfRangePointsAreIgnored) {
    ManifoldSpec spec{ManifoldId::sin2d};
    Matrix pts = Matrix::Constant(2, 10, 100.0);
    EXPECT_EQ(coverage(spec, pts, 16), 0.0);
}
