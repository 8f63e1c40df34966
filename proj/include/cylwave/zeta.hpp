#pragma once

#include <cmath>
#include <stdexcept>

namespace cylwave {

namespace detail {

inline constexpr double kZetaSeriesRadius = 1e-3;

// zeta(1 - d) / (2^{1/3} d) as a power series in d.
inline double zeta_series_factor(double d) {
    return 1.0 + d * (3.0 / 10.0 + d * (32.0 / 175.0 + d * (1037.0 / 7875.0 + d * (103727.0 / 1010625.0))));
}

}  // namespace detail

/// Airy variable of the large-order Bessel expansions: positive for rho < 1,
/// negative for rho > 1, zero at rho = 1.
inline double zeta_tilde(double rho) {
    if (!(rho > 0.0)) throw std::domain_error("zeta_tilde: rho must be positive");
    double d = 1.0 - rho;
    if (std::fabs(d) < detail::kZetaSeriesRadius) return std::cbrt(2.0) * d * detail::zeta_series_factor(d);
    if (rho < 1.0) {
        double w = std::sqrt((1.0 - rho) * (1.0 + rho));
        double g = std::log((1.0 + w) / rho) - w;
        return std::cbrt(2.25 * g * g);
    }
    double w = std::sqrt((rho - 1.0) * (rho + 1.0));
    double f = w - std::acos(1.0 / rho);
    return -std::cbrt(2.25 * f * f);
}

/// zeta_tilde(rho) / (1 - rho^2), finite and positive through rho = 1.
inline double zeta_tilde_ratio(double rho) {
    double d = 1.0 - rho;
    if (std::fabs(d) < detail::kZetaSeriesRadius)
        return std::cbrt(2.0) * detail::zeta_series_factor(d) / (1.0 + rho);
    return zeta_tilde(rho) / ((1.0 - rho) * (1.0 + rho));
}

}  // namespace cylwave
