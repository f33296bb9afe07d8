/**
 * @file random.hpp
 * @details
 * Counter-based random bit generator. Output n of stream s under seed k is
 * a SplitMix64 finalizer applied to a key derived from (k, s) plus n times
 * the golden-ratio increment, so any (seed, stream, counter) triple can be
 * reproduced without replaying earlier draws.
 */
#ifndef POLYGAN_RANDOM_HPP
#define POLYGAN_RANDOM_HPP

#include "polygan/tensor_core.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace polygan {

class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (counter_++) * kGolden); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(*this); }

    Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
        return m;
    }

    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * normal();
        return m;
    }

    Vector uniform_vector(Eigen::Index n, double lo, double hi) {
        return uniform_matrix(n, 1, lo, hi).col(0);
    }
    Vector normal_vector(Eigen::Index n, double stddev = 1.0) {
        return normal_matrix(n, 1, stddev).col(0);
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_;
};

}  // namespace polygan

#endif  // POLYGAN_RANDOM_HPP
