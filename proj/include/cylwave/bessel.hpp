#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "scaled.hpp"

namespace cylwave {

inline constexpr int kBesselOrderMax = 10000;
inline constexpr double kBesselArgMin = 1e-100;
inline constexpr double kBesselArgMax = 1e5;

/// J_n(x) and Y_n(x) for n = 0..nmax with extended exponents.
struct CylinderSequence {
    std::vector<ScaledReal> j;
    std::vector<ScaledReal> y;
};

/// I_n(a) and K_n(a) for n = 0..nmax with extended exponents.
struct ModifiedSequence {
    std::vector<ScaledReal> i;
    std::vector<ScaledReal> k;
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr double kRescaleUp = 0x1p600;
inline constexpr long kRescaleBits = 600;
inline constexpr double kNeumannSwitch = 20.0;

inline void check_bessel_window(int n, double x, const char* what) {
    if (n < 0) throw std::domain_error(std::string(what) + ": negative order");
    if (n > kBesselOrderMax) throw std::range_error(std::string(what) + ": order above window");
    if (!(x >= kBesselArgMin) || !(x <= kBesselArgMax))
        throw std::range_error(std::string(what) + ": argument outside window");
}

inline int miller_start(double x, int nmax) {
    double top = std::max(static_cast<double>(nmax), x);
    int m = static_cast<int>(std::ceil(top + 20.0 + std::sqrt(100.0 * (top + 1.0))));
    return m + (m & 1);
}

// Backward recurrence f_{k-1} = c(k) f_k + sign * f_{k+1}, rescaled to stay in range.
template <typename Coef>
inline std::vector<ScaledReal> backward_recurrence(int m, Coef coef, double sign) {
    std::vector<ScaledReal> f(static_cast<size_t>(m) + 1);
    double hi = 0.0, lo = 1.0;  // f_{k+1}, f_k
    long shift = 0;
    f[m] = ScaledReal(lo, 0);
    for (int k = m; k >= 1; --k) {
        double next = coef(k) * lo + sign * hi;
        hi = lo;
        lo = next;
        if (std::fabs(lo) > kRescaleUp) {
            lo /= kRescaleUp;
            hi /= kRescaleUp;
            shift += kRescaleBits;
        }
        f[k - 1] = ScaledReal(lo, shift);
    }
    return f;
}

// Forward recurrence g_{k+1} = c(k) g_k + sign * g_{k-1} from g_0, g_1.
template <typename Coef>
inline void forward_recurrence(std::vector<ScaledReal>& g, int nmax, Coef coef, double sign) {
    if (nmax < 1) return;
    long shift = std::max(g[0].exp, g[1].exp);
    double prev = g[0].mant * std::ldexp(1.0, static_cast<int>(std::max(g[0].exp - shift, -1100L)));
    double cur = g[1].mant * std::ldexp(1.0, static_cast<int>(std::max(g[1].exp - shift, -1100L)));
    for (int k = 1; k < nmax; ++k) {
        double next = coef(k) * cur + sign * prev;
        prev = cur;
        cur = next;
        if (std::fabs(cur) > kRescaleUp) {
            cur /= kRescaleUp;
            prev /= kRescaleUp;
            shift += kRescaleBits;
        }
        g[k + 1] = ScaledReal(cur, shift);
    }
}

// H^(1)_nu(x) for nu in {0, 1} from the large-argument series.
inline Complex hankel_large_argument(int nu, double x) {
    double mu = 4.0 * nu * nu;
    Complex sum = 1.0, term = 1.0;
    double last = 1.0;
    for (int k = 1; k < 100; ++k) {
        double odd = 2.0 * k - 1.0;
        term *= Complex(0.0, 1.0) * (mu - odd * odd) / (k * 8.0 * x);
        double mag = std::abs(term);
        if (mag > last) break;
        sum += term;
        last = mag;
        if (mag < 1e-17) break;
    }
    double phase = x - (0.5 * nu + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * std::polar(1.0, phase) * sum;
}

}  // namespace detail

/// Miller backward recurrence for J with the normalization J_0 + 2 sum J_2k = 1.
/// Y_0, Y_1 come from Neumann series (x < 20) or the Hankel asymptotic series,
/// and higher Y by forward recurrence.
inline CylinderSequence bessel_jy_sequence(double x, int nmax) {
    using namespace detail;
    check_bessel_window(nmax, x, "bessel_jy_sequence");
    int m = miller_start(x, std::max(nmax, 1));
    auto f = backward_recurrence(m, [x](int k) { return 2.0 * k / x; }, -1.0);
    ScaledReal norm = f[0];
    for (int k = 2; k <= m; k += 2) norm = norm + f[k] * 2.0;

    CylinderSequence out;
    out.j.resize(static_cast<size_t>(nmax) + 1);
    out.y.resize(std::max<size_t>(2, static_cast<size_t>(nmax) + 1));
    for (int k = 0; k <= nmax; ++k) out.j[k] = f[k] / norm;

    double y0, y1;
    if (x < kNeumannSwitch) {
        ScaledReal s0, s1;
        for (int k = 1; 2 * k <= m; ++k) {
            double sg = (k & 1) ? -1.0 : 1.0;
            s0 = s0 + f[2 * k] * (sg / k);
            if (2 * k + 1 <= m) s1 = s1 + f[2 * k + 1] * (sg * (1.0 + 2.0 * k) / (k * (k + 1.0)));
        }
        double j0 = (f[0] / norm).value();
        double j1 = (f[1] / norm).value();
        double lg = std::log(0.5 * x) + kEulerGamma;
        double inv_pi = 1.0 / std::numbers::pi;
        y0 = 2.0 * inv_pi * lg * j0 - 4.0 * inv_pi * (s0 / norm).value();
        y1 = -2.0 * inv_pi / x * j0 + 2.0 * inv_pi * (lg - 1.0) * j1 - 2.0 * inv_pi * (s1 / norm).value();
    } else {
        y0 = hankel_large_argument(0, x).imag();
        y1 = hankel_large_argument(1, x).imag();
    }
    out.y[0] = ScaledReal(y0);
    out.y[1] = ScaledReal(y1);
    forward_recurrence(out.y, nmax, [x](int k) { return 2.0 * k / x; }, -1.0);
    out.y.resize(static_cast<size_t>(nmax) + 1);
    return out;
}

/// I_n(a) by Miller recurrence normalized with I_0 + 2 sum I_k = e^a; K_0, K_1
/// by trapezoidal quadrature of the cosh integral and higher K by forward recurrence.
inline ModifiedSequence bessel_ik_sequence(double a, int nmax) {
    using namespace detail;
    check_bessel_window(nmax, a, "bessel_ik_sequence");
    int m = miller_start(a, std::max(nmax, 1));
    auto f = backward_recurrence(m, [a](int k) { return 2.0 * k / a; }, 1.0);
    ScaledReal norm = f[0];
    for (int k = 1; k <= m; ++k) norm = norm + f[k] * 2.0;
    ScaledReal ea = from_log_scale(1.0, a);

    ModifiedSequence out;
    out.i.resize(static_cast<size_t>(nmax) + 1);
    for (int k = 0; k <= nmax; ++k) out.i[k] = f[k] / norm * ea;

    // e^a K_nu(a) = int_0^inf exp(-a (cosh t - 1)) cosh(nu t) dt
    double step = std::min(0.1, 0.5 / std::sqrt(a));
    double k0 = 0.5, k1 = 0.5;
    for (int i = 1; i < 100000; ++i) {
        double t = i * step;
        double e = std::exp(-a * (std::cosh(t) - 1.0));
        double c0 = e;
        double c1 = e * std::cosh(t);
        k0 += c0;
        k1 += c1;
        if (c1 < 1e-18 * k1) break;
    }
    out.k.resize(std::max<size_t>(2, static_cast<size_t>(nmax) + 1));
    ScaledReal ema = from_log_scale(1.0, -a);
    out.k[0] = ScaledReal(k0 * step) * ema;
    out.k[1] = ScaledReal(k1 * step) * ema;
    forward_recurrence(out.k, nmax, [a](int k) { return 2.0 * k / a; }, 1.0);
    out.k.resize(static_cast<size_t>(nmax) + 1);
    return out;
}

/// J_n(x) with an extended exponent; power series for x <= 1, Miller otherwise.
inline ScaledReal bessel_J_scaled(int n, double x) {
    detail::check_bessel_window(n, x, "bessel_J");
    if (x <= 1.0) {
        double q = -0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 60; ++k) {
            term *= q / (k * static_cast<double>(n + k));
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        double lead = n * std::log(0.5 * x) - std::lgamma(n + 1.0);
        return from_log_scale(sum, lead);
    }
    return bessel_jy_sequence(x, n).j[n];
}

inline double bessel_J(int n, double x) { return bessel_J_scaled(n, x).checked_value("bessel_J"); }

inline ScaledReal bessel_Y_scaled(int n, double x) { return bessel_jy_sequence(x, n).y[n]; }

inline double bessel_Y(int n, double x) { return bessel_Y_scaled(n, x).checked_value("bessel_Y"); }

/// H^(1)_n(x) = J_n(x) + i Y_n(x) with an extended exponent.
inline ScaledComplex hankel_H1_scaled(int n, double x) {
    CylinderSequence s = bessel_jy_sequence(x, n);
    return make_complex(s.j[n], s.y[n]);
}

inline Complex hankel_H1(int n, double x) {
    CylinderSequence s = bessel_jy_sequence(x, n);
    return {s.j[n].checked_value("hankel_H1"), s.y[n].checked_value("hankel_H1")};
}

/// (-1)^n, the factor relating negative and positive integer orders.
inline double order_parity(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

/// H^(1)_n(x) for any integer n via H_{-n} = (-1)^n H_n.
inline Complex hankel_H1_any_order(int n, double x) {
    return n >= 0 ? hankel_H1(n, x) : order_parity(n) * hankel_H1(-n, x);
}

inline double bessel_J_any_order(int n, double x) {
    return n >= 0 ? bessel_J(n, x) : order_parity(n) * bessel_J(-n, x);
}

}  // namespace cylwave
