#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vidal {

// The standard distributions are implementation-defined, so every draw the
// engine makes goes through these helpers on top of std::mt19937_64, whose
// output sequence is fixed by the standard.

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t value);

/// Seed derived from a base seed and an ordered list of integer keys.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (always consumes two uniforms).
    double normal();
    /// Poisson by CDF inversion of a single uniform draw.
    unsigned poisson(double lambda) { return poisson_from_uniform(lambda, uniform()); }

    /// First `count` elements of a seeded Fisher-Yates shuffle of `pool`.
    template <typename T>
    std::vector<T> sample(std::vector<T> pool, std::size_t count)
    {
        if (count > pool.size())
            count = pool.size();
        for (std::size_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::size_t>(below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    }

    static unsigned poisson_from_uniform(double lambda, double u);

private:
    std::mt19937_64 engine_;
};

} // namespace vidal
