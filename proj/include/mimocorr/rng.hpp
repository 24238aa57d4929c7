// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mimocorr {

/// SplitMix64 step; used to derive independent sub-seeds from (seed, coordinates)
/// tuples so results never depend on worker scheduling.
inline std::uint64_t splitmix64(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Order-sensitive hash of a seed tuple.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts)
{
    std::uint64_t state = 0x853C49E6748FEA9BULL;
    std::uint64_t h = 0;
    for (const auto p : parts) {
        state ^= p;
        h = splitmix64(state);
    }
    return h;
}

/// Seeded Gaussian/complex-Gaussian stream (mt19937_64 + Box-Muller).
class gauss_rng {
  public:
    explicit gauss_rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in (0, 1].
    double uniform01()
    {
        return (double(eng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }

    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * M_PI * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circular complex normal CN(0, 1): E|z|^2 = 1.
    std::complex<double> cnormal()
    {
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-std::log(u));  // |z| for unit total variance
        const double a = 2.0 * M_PI * v;
        return {r * std::cos(a), r * std::sin(a)};
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mimocorr
