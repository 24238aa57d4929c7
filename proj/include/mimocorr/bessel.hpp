// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimocorr {

namespace detail {

// Ascending power series, accurate to ~1e-12 absolute for |x| <= 11
// (largest term ~2e3, so cancellation stays below 1e-12).
inline double bessel_j0_series(double x)
{
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 80; ++k) {
        term *= -q / (double(k) * double(k));
        sum += term;
        if (std::abs(term) < 1e-18)
            break;
    }
    return sum;
}

// Hankel asymptotic expansion, truncated at the smallest term; for z >= 11 the
// smallest term is below ~1e-11 which keeps the absolute error under 1e-10.
inline double bessel_j0_asymptotic(double z)
{
    double a = 1.0;  // a_m = a_{m-1} * (2m-1)^2 / (8m)
    double p = 1.0, q = 0.0;
    double prev = std::numeric_limits<double>::max();
    for (int m = 1; m < 40; ++m) {
        a *= (2.0 * m - 1.0) * (2.0 * m - 1.0) / (8.0 * m);
        const double term = a / std::pow(z, double(m));
        if (term >= prev)
            break;  // asymptotic tail starts diverging
        prev = term;
        const int j = (m - 1) / 2;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        if (m % 2 == 1)
            q += -sign * term;  // Q0 = -a1/z + a3/z^3 - ...
        else
            p += -sign * term;  // P0 = 1 - a2/z^2 + a4/z^4 - ...
        if (term < 1e-20)
            break;
    }
    const double w = z - 0.25 * M_PI;
    return std::sqrt(2.0 / (M_PI * z)) * (std::cos(w) * p - std::sin(w) * q);
}

} // namespace detail

/// Zeroth-order Bessel function of the first kind. Absolute error <= 1e-10 on
/// |x| <= 50. Power series below |x| = 11, Hankel expansion beyond; the switch
/// point is where both branches deliver the target accuracy.
inline double bessel_j0(double x)
{
    if (!std::isfinite(x))
        throw std::invalid_argument("bessel_j0: non-finite argument");
    const double z = std::abs(x);
    return z < 11.0 ? detail::bessel_j0_series(z) : detail::bessel_j0_asymptotic(z);
}

} // namespace mimocorr
