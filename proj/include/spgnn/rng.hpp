#pragma once

#include <cstdint>
#include <vector>

namespace spgnn {

/// Deterministic PRNG: xoshiro256++ with SplitMix64 state expansion.
/// Pure 64-bit integer arithmetic, so a given seed yields the same
/// sequence on every platform. Distributions are implemented here
/// rather than via <random> because the standard distributions are not
/// portable across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n); n must be positive.
    int uniform_int(int n);
    /// Box-Muller normal deviate.
    double normal(double mean = 0.0, double stddev = 1.0);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

private:
    std::uint64_t s_[4];
};

}  // namespace spgnn
