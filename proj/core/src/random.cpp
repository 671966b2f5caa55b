#include "vidal/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace vidal {

std::uint64_t mix_seed(std::uint64_t value)
{
    value += 0x9e3779b97f4a7c15ULL;
    value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
    value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
    return value ^ (value >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys)
{
    std::uint64_t seed = mix_seed(base);
    for (const auto key : keys)
        seed = mix_seed(seed ^ mix_seed(key + 0x632be59bd9b4e019ULL));
    return seed;
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n)
{
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t value = engine_();
    while (value >= limit)
        value = engine_();
    return value % n;
}

double Rng::normal()
{
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

unsigned Rng::poisson_from_uniform(double lambda, double u)
{
    if (lambda <= 0.0)
        return 0;
    double term = std::exp(-lambda);
    double cdf = term;
    unsigned k = 0;
    while (u > cdf && k < 10000) {
        ++k;
        term *= lambda / k;
        cdf += term;
        if (term == 0.0 && cdf <= u)
            break;
    }
    return k;
}

} // namespace vidal
