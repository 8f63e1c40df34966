#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "airy.hpp"
#include "zeta.hpp"

namespace cylwave {

enum class Regime { ExactSeries, UniformAiry, Transition, LargeOrder };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::ExactSeries: return "exact-series";
        case Regime::UniformAiry: return "uniform-airy";
        case Regime::Transition: return "transition";
        case Regime::LargeOrder: return "large-order";
    }
    return "unknown";
}

struct AsymptoticValue {
    Complex value;
    Regime regime = Regime::UniformAiry;
    double err_estimate = 0.0;
};

inline constexpr double kTransitionWidth = 0.1;
inline constexpr double kLargeOrderThreshold = 0.01;
inline constexpr int kUniformOrderMax = 2;

/// Transition when |rho - 1| <= 0.1 n^{-2/3}; large-order when n rho^2 < 0.01;
/// uniform Airy form otherwise.
inline Regime select_regime(int n, double rho) {
    double nu = n;
    if (std::fabs(rho - 1.0) <= kTransitionWidth * std::pow(nu, -2.0 / 3.0)) return Regime::Transition;
    if (nu * rho * rho < kLargeOrderThreshold) return Regime::LargeOrder;
    return Regime::UniformAiry;
}

/// Leading large-order terms J_n(n rho) ~ (e rho/2)^n / sqrt(2 pi n)
/// and H_n(n rho) ~ -i sqrt(2/(pi n)) (e rho/2)^{-n}.
inline double large_order_J(int n, double rho) {
    double nu = n;
    double l = nu * std::log(std::numbers::e * rho / 2.0) - 0.5 * std::log(2.0 * std::numbers::pi * nu);
    if (l < -700.0 || l > 700.0) throw std::range_error("large_order_J: value outside double range");
    return std::exp(l);
}

inline Complex large_order_H(int n, double rho) {
    double nu = n;
    double l = -nu * std::log(std::numbers::e * rho / 2.0) + 0.5 * std::log(2.0 / (std::numbers::pi * nu));
    if (l < -700.0 || l > 700.0) throw std::range_error("large_order_H: value outside double range");
    return {0.0, -std::exp(l)};
}

namespace detail {

struct UniformCoefficients {
    double b0;
    double a1;
};

inline UniformCoefficients uniform_coefficients(double rho, double zeta) {
    constexpr double v1 = -7.0 / 72.0;
    constexpr double v2 = -455.0 / 10368.0;
    double z2 = zeta * zeta;
    if (rho < 1.0) {
        double p = 1.0 / std::sqrt((1.0 - rho) * (1.0 + rho));
        double p2 = p * p;
        double u1 = (3.0 * p - 5.0 * p * p2) / 24.0;
        double u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0;
        double zh = std::sqrt(zeta);
        return {-u1 / zh - 5.0 / (48.0 * z2), u2 + 1.5 * v1 * u1 / (zeta * zh) + 2.25 * v2 / (z2 * zeta)};
    }
    double q = 1.0 / std::sqrt((rho - 1.0) * (rho + 1.0));
    double q2 = q * q;
    double w1 = q / 8.0 + 5.0 * q * q2 / 24.0;
    double w2 = -q2 * (81.0 + 462.0 * q2 + 385.0 * q2 * q2) / 1152.0;
    double mz = -zeta;
    double zh = std::sqrt(mz);
    return {w1 / zh - 5.0 / (48.0 * z2), w2 + 1.5 * v1 * w1 / (mz * zh) + 2.25 * v2 / (z2 * zeta)};
}

inline void check_order(int n, int order, const char* what) {
    if (n < 1) throw std::domain_error(std::string(what) + ": order n must be >= 1");
    if (order < 0 || order > kUniformOrderMax)
        throw std::domain_error(std::string(what) + ": expansion order must be in [0, 2]");
}

inline Complex apply_scale(Complex v, double log_scale, const char* what) {
    double mag = std::abs(v);
    if (mag == 0.0) return v;
    double l = std::log(mag) + log_scale;
    if (l > 700.0 || l < -700.0) throw std::range_error(std::string(what) + ": value outside double range");
    return v * std::exp(log_scale);
}

// Airy value and derivative in the rotated (Hankel) or plain (Bessel) form, scaled.
inline ScaledAiryPair airy_for(bool hankel, double w) {
    const Complex ep = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    if (!hankel) return airy_ai_scaled(w);
    ScaledAiryPair s = airy_ai_scaled(ep * w);
    const Complex c = 2.0 * std::polar(1.0, -std::numbers::pi / 3.0);
    return {c * s.ai, c * ep * s.dai, s.log_scale};
}

inline AsymptoticValue uniform_airy(bool hankel, int n, double rho, int order, const char* what) {
    double nu = n;
    double zeta = zeta_tilde(rho);
    double w = std::pow(nu, 2.0 / 3.0) * zeta;
    ScaledAiryPair a = airy_for(hankel, w);
    UniformCoefficients c = uniform_coefficients(rho, zeta);
    double pref = std::pow(4.0 * zeta_tilde_ratio(rho), 0.25);
    Complex t0 = std::pow(nu, -1.0 / 3.0) * a.ai;
    Complex tb = std::pow(nu, -5.0 / 3.0) * a.dai * c.b0;
    Complex ta = t0 * (c.a1 / (nu * nu));
    Complex sum = t0;
    double next = std::abs(tb);
    if (order >= 1) {
        sum += tb;
        next = std::abs(ta);
    }
    if (order >= 2) {
        sum += ta;
        next = std::abs(tb) / (nu * nu);
    }
    AsymptoticValue out;
    out.regime = Regime::UniformAiry;
    out.err_estimate = next / std::abs(sum);
    out.value = apply_scale(pref * sum, a.log_scale, what);
    return out;
}

inline AsymptoticValue transition(bool hankel, int n, double rho, int order, const char* what) {
    double nu = n;
    double tau = std::pow(nu, 2.0 / 3.0) * (rho - 1.0);
    double arg = -std::cbrt(2.0) * tau;
    ScaledAiryPair a = airy_for(hankel, arg);
    double e = std::pow(nu, -2.0 / 3.0);
    double t2 = tau * tau;
    double f1 = -tau / 5.0;
    double f2 = -9.0 * t2 * t2 * tau / 100.0 + 3.0 * t2 / 35.0;
    double g0 = 3.0 * t2 / 10.0;
    double g1 = -17.0 * t2 * tau / 70.0 + 1.0 / 70.0;
    Complex ca = std::cbrt(2.0) * std::pow(nu, -1.0 / 3.0) * a.ai;
    Complex cd = std::cbrt(4.0) / nu * a.dai;
    Complex first = ca * (f1 * e) + cd * g0;
    Complex second = ca * (f2 * e * e) + cd * (g1 * e);
    Complex sum = ca;
    double next = std::abs(first);
    if (order >= 1) {
        sum += first;
        next = std::abs(second);
    }
    if (order >= 2) {
        sum += second;
        next = std::abs(second) * e;
    }
    AsymptoticValue out;
    out.regime = Regime::Transition;
    out.err_estimate = next / std::abs(sum);
    out.value = apply_scale(sum, a.log_scale, what);
    return out;
}

}  // namespace detail

/// Airy-variable expansion of H^(1)_n(n rho) without regime selection.
inline AsymptoticValue hankel_uniform_airy(int n, double rho, int order = 2) {
    detail::check_order(n, order, "hankel_uniform_airy");
    if (!(rho > 0.0) || rho == 1.0) throw std::domain_error("hankel_uniform_airy: rho must be positive and != 1");
    return detail::uniform_airy(true, n, rho, order, "hankel_uniform_airy");
}

/// Expansion of H^(1)_n(n + tau n^{1/3}) around the turning point, tau = n^{2/3}(rho - 1).
inline AsymptoticValue hankel_transition(int n, double rho, int order = 2) {
    detail::check_order(n, order, "hankel_transition");
    if (!(rho > 0.0)) throw std::domain_error("hankel_transition: rho must be positive");
    return detail::transition(true, n, rho, order, "hankel_transition");
}

/// Large-order approximation of H^(1)_n(n rho) with regime selection.
inline AsymptoticValue hankel_uniform(int n, double rho, int order = 2) {
    detail::check_order(n, order, "hankel_uniform");
    if (!(rho > 0.0)) throw std::domain_error("hankel_uniform: rho must be positive");
    switch (select_regime(n, rho)) {
        case Regime::Transition: return detail::transition(true, n, rho, order, "hankel_uniform");
        case Regime::LargeOrder:
            return {large_order_H(n, rho), Regime::LargeOrder, n * rho * rho / 4.0 + 1.0 / (12.0 * n)};
        default: return detail::uniform_airy(true, n, rho, order, "hankel_uniform");
    }
}

/// Large-order approximation of J_n(n rho) with regime selection.
inline AsymptoticValue bessel_uniform(int n, double rho, int order = 2) {
    detail::check_order(n, order, "bessel_uniform");
    if (!(rho > 0.0)) throw std::domain_error("bessel_uniform: rho must be positive");
    switch (select_regime(n, rho)) {
        case Regime::Transition: return detail::transition(false, n, rho, order, "bessel_uniform");
        case Regime::LargeOrder:
            return {large_order_J(n, rho), Regime::LargeOrder, n * rho * rho / 4.0 + 1.0 / (12.0 * n)};
        default: return detail::uniform_airy(false, n, rho, order, "bessel_uniform");
    }
}

}  // namespace cylwave
