#ifndef CCP_SRC_RNG_UTIL_HPP
#define CCP_SRC_RNG_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ccp::detail {

// mt19937_64 output is fully specified by the standard; the distribution
// helpers below avoid std::*_distribution, whose streams differ across
// standard libraries, so seeded results are identical everywhere.

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform draw in {0, ..., n - 1} by rejection, bias-free.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t draw = rng();
    while (draw >= limit) {
        draw = rng();
    }
    return draw % n;
}

// Standard normal via Box-Muller; consumes exactly two draws.
inline double normal01(std::mt19937_64& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace ccp::detail

#endif
