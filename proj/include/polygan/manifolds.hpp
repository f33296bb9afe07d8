/**
 * @file manifolds.hpp
 * @details
 * Analytic target distributions for the activation-free experiments, with
 * samplers, distance-to-manifold residuals and a bin-coverage score for
 * detecting mode collapse. Points are stored as the columns of a matrix.
 */
#ifndef POLYGAN_MANIFOLDS_HPP
#define POLYGAN_MANIFOLDS_HPP

#include "polygan/random.hpp"
#include "polygan/tensor_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polygan {

enum class ManifoldId { sin2d, astroid, sin3d, swissroll, gabriels_horn };

inline constexpr std::array<std::pair<ManifoldId, std::string_view>, 5> kManifoldNames{{
    {ManifoldId::sin2d, "sin2d"},
    {ManifoldId::astroid, "astroid"},
    {ManifoldId::sin3d, "sin3d"},
    {ManifoldId::swissroll, "swissroll"},
    {ManifoldId::gabriels_horn, "gabriels_horn"},
}};

inline std::string_view to_string(ManifoldId id) {
    for (const auto& [key, name] : kManifoldNames)
        if (key == id) return name;
    return "unknown";
}

inline std::optional<ManifoldId> parse_manifold(std::string_view name) {
    for (const auto& [key, n] : kManifoldNames)
        if (n == name) return key;
    return std::nullopt;
}

struct ManifoldSpec {
    ManifoldId id = ManifoldId::sin2d;
    /// Scale for the astroid and Gabriel's horn.
    double alpha = 1.0;
    /// Gaussian noise per coordinate (swiss roll only).
    double noise = 0.05;
    /// Astroid parameter range: false samples t in [-alpha, alpha], true the full [0, 2 pi).
    bool astroid_full_curve = false;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("ManifoldSpec: alpha must be positive");
        if (!(noise >= 0.0)) throw std::invalid_argument("ManifoldSpec: noise must be non-negative");
    }
};

/// Slack around [0, 2 pi] outside which a sin2d point is infinitely far.
inline constexpr double kSin2dDomainMargin = 1.0;
/// Grid resolution for the swiss-roll residual.
inline constexpr int kSwissRollGrid = 2000;

inline Eigen::Index manifold_dim(ManifoldId id) {
    return (id == ManifoldId::sin2d || id == ManifoldId::astroid) ? 2 : 3;
}

struct ParamRange {
    double lo;
    double hi;
};

/// Ranges of the sampling parameters, in the order they are drawn.
inline std::vector<ParamRange> parameter_ranges(const ManifoldSpec& spec) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (spec.id) {
        case ManifoldId::sin2d: return {{0.0, two_pi}};
        case ManifoldId::astroid:
            return spec.astroid_full_curve ? std::vector<ParamRange>{{0.0, two_pi}}
                                           : std::vector<ParamRange>{{-spec.alpha, spec.alpha}};
        case ManifoldId::sin3d: return {{-0.5, 0.5}, {-0.5, 0.5}};
        case ManifoldId::swissroll: return {{0.0, 1.0}, {0.0, 1.0}};
        case ManifoldId::gabriels_horn: return {{0.0, 160.0 * std::numbers::pi}, {1.0, 4.0}};
    }
    throw std::invalid_argument("parameter_ranges: unknown manifold");
}

/// Noiseless point for explicit parameter values (same order as parameter_ranges).
inline Vector manifold_point(const ManifoldSpec& spec, std::span<const double> params) {
    const double a = spec.alpha;
    switch (spec.id) {
        case ManifoldId::sin2d: return Vector{{params[0], std::sin(params[0])}};
        case ManifoldId::astroid: {
            const double c = std::cos(params[0]), s = std::sin(params[0]);
            return Vector{{a * c * c * c, a * s * s * s}};
        }
        case ManifoldId::sin3d: {
            const double x = params[0], y = params[1];
            return Vector{{x, y, std::sin(10.0 * std::sqrt(x * x + y * y))}};
        }
        case ManifoldId::swissroll: {
            const double t = params[0], y = params[1];
            return Vector{{t * std::sin(t), y, t * std::cos(t)}};
        }
        case ManifoldId::gabriels_horn: {
            const double t = params[0], x = params[1];
            return Vector{{x, a * std::cos(t) / x, a * std::sin(t) / x}};
        }
    }
    throw std::invalid_argument("manifold_point: unknown manifold");
}

/// n points (dim x n) drawn from the manifold.
inline Matrix sample(const ManifoldSpec& spec, std::size_t n, CounterRng& rng) {
    spec.validate();
    const auto ranges = parameter_ranges(spec);
    Matrix out(manifold_dim(spec.id), static_cast<Eigen::Index>(n));
    std::vector<double> params(ranges.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < ranges.size(); ++r) params[r] = rng.uniform(ranges[r].lo, ranges[r].hi);
        Vector p = manifold_point(spec, params);
        if (spec.id == ManifoldId::swissroll)
            for (Eigen::Index c = 0; c < p.size(); ++c) p[c] += spec.noise * rng.normal();
        out.col(static_cast<Eigen::Index>(i)) = p;
    }
    return out;
}

inline Matrix sample(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    return sample(spec, n, rng);
}

/// Non-negative distance proxy from a point to the manifold.
inline double residual(const ManifoldSpec& spec, const Vector& p) {
    if (p.size() != manifold_dim(spec.id))
        throw std::invalid_argument("residual: point has dimension " + std::to_string(p.size()) + ", manifold " +
                                    std::string(to_string(spec.id)) + " expects " +
                                    std::to_string(manifold_dim(spec.id)));
    const double a = spec.alpha;
    switch (spec.id) {
        case ManifoldId::sin2d:
            if (!(p[0] >= -kSin2dDomainMargin && p[0] <= 2.0 * std::numbers::pi + kSin2dDomainMargin))
                return std::numeric_limits<double>::infinity();
            return std::abs(p[1] - std::sin(p[0]));
        case ManifoldId::astroid:
            return std::abs(std::cbrt(p[0] * p[0]) + std::cbrt(p[1] * p[1]) - std::cbrt(a * a));
        case ManifoldId::sin3d:
            return std::abs(p[2] - std::sin(10.0 * std::sqrt(p[0] * p[0] + p[1] * p[1])));
        case ManifoldId::gabriels_horn: {
            const double u = p[0] * p[1], v = p[0] * p[2];
            return std::abs(u * u + v * v - a * a);
        }
        case ManifoldId::swissroll: {
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < kSwissRollGrid; ++i) {
                const double t = static_cast<double>(i) / (kSwissRollGrid - 1);
                const double dx = p[0] - t * std::sin(t), dz = p[2] - t * std::cos(t);
                best = std::min(best, dx * dx + dz * dz);
            }
            const double dy = std::max({0.0, -p[1], p[1] - 1.0});
            return std::sqrt(best + dy * dy);
        }
    }
    throw std::invalid_argument("residual: unknown manifold");
}

inline std::vector<double> residuals(const ManifoldSpec& spec, const Matrix& points) {
    std::vector<double> out(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) out[static_cast<std::size_t>(i)] = residual(spec, points.col(i));
    return out;
}

/// Recovers the coverage parameters of a point (one or two values, each
/// expected in its coverage range).
inline std::vector<double> coverage_parameters(const ManifoldSpec& spec, const Vector& p) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (spec.id) {
        case ManifoldId::sin2d: return {p[0]};
        case ManifoldId::astroid: {
            double t = std::atan2(std::cbrt(p[1]), std::cbrt(p[0]));
            if (spec.astroid_full_curve && t < 0.0) t += two_pi;
            return {t};
        }
        case ManifoldId::sin3d: return {p[0], p[1]};
        case ManifoldId::swissroll: return {std::atan2(p[0], p[2]), p[1]};
        case ManifoldId::gabriels_horn: {
            double angle = std::atan2(p[2], p[1]);
            if (angle < 0.0) angle += two_pi;
            return {angle, p[0]};
        }
    }
    throw std::invalid_argument("coverage_parameters: unknown manifold");
}

inline std::vector<ParamRange> coverage_ranges(const ManifoldSpec& spec) {
    auto ranges = parameter_ranges(spec);
    // The horn angle wraps, so its coverage range is one turn; x is the second parameter.
    if (spec.id == ManifoldId::gabriels_horn) return {{0.0, 2.0 * std::numbers::pi}, ranges[1]};
    return ranges;
}

/// Splits `bins` into an nx x ny grid with nx the largest divisor <= sqrt(bins).
inline std::pair<std::size_t, std::size_t> coverage_grid(std::size_t bins, std::size_t params) {
    if (params == 1) return {bins, 1};
    std::size_t nx = 1;
    for (std::size_t c = 1; c * c <= bins; ++c)
        if (bins % c == 0) nx = c;
    return {nx, bins / nx};
}

/// Fraction of parameter-space bins holding at least 0.25 * n / bins points.
inline double coverage(const ManifoldSpec& spec, const Matrix& points, std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("coverage: bins must be >= 2");
    const auto ranges = coverage_ranges(spec);
    const auto [nx, ny] = coverage_grid(bins, ranges.size());
    std::vector<std::size_t> counts(bins, 0);

    auto bin_of = [](double v, const ParamRange& r, std::size_t n) -> std::optional<std::size_t> {
        if (!(v >= r.lo && v <= r.hi)) return std::nullopt;
        auto b = static_cast<std::size_t>((v - r.lo) / (r.hi - r.lo) * static_cast<double>(n));
        return std::min(b, n - 1);
    };

    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        const auto params = coverage_parameters(spec, points.col(i));
        const auto bx = bin_of(params[0], ranges[0], nx);
        if (!bx) continue;
        std::size_t index = *bx;
        if (ranges.size() == 2) {
            const auto by = bin_of(params[1], ranges[1], ny);
            if (!by) continue;
            index = *bx * ny + *by;
        }
        ++counts[index];
    }
    const double threshold = 0.25 * static_cast<double>(points.cols()) / static_cast<double>(bins);
    const auto occupied = std::count_if(counts.begin(), counts.end(), [&](std::size_t c) {
        return c > 0 && static_cast<double>(c) >= threshold;
    });
    return static_cast<double>(occupied) / static_cast<double>(bins);
}

}  // namespace polygan

#endif  // POLYGAN_MANIFOLDS_HPP
