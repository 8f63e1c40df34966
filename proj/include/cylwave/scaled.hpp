#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace cylwave {

using Complex = std::complex<double>;

/// Floating value carrying an extended binary exponent: value = mant * 2^exp.
/// Used for Bessel and Airy quantities whose magnitude leaves the double range
/// at large order or small argument.
template <typename T>
struct Scaled {
    T mant{};
    long exp = 0;

    Scaled() = default;
    Scaled(T m, long e = 0) : mant(m), exp(e) { normalize(); }

    static double magnitude_of(double v) { return std::fabs(v); }
    static double magnitude_of(const Complex& v) { return std::max(std::fabs(v.real()), std::fabs(v.imag())); }

    void normalize() {
        double m = magnitude_of(mant);
        if (m == 0.0 || !std::isfinite(m)) {
            if (m == 0.0) exp = 0;
            return;
        }
        int e = 0;
        std::frexp(m, &e);
        mant = mant * std::ldexp(1.0, -e);
        exp += e;
    }

    bool is_zero() const { return magnitude_of(mant) == 0.0; }

    /// log2 of |value|; -inf for zero.
    double log2_abs() const {
        if (is_zero()) return -std::numeric_limits<double>::infinity();
        return static_cast<double>(exp) + std::log2(std::abs(mant));
    }

    /// Plain value; overflow gives inf and deep underflow gives 0.
    T value() const {
        if (is_zero()) return T{};
        if (exp > 1100) return mant * std::numeric_limits<double>::infinity();
        if (exp < -1100) return T{};
        return mant * std::ldexp(1.0, static_cast<int>(exp));
    }

    /// Plain value, throwing std::range_error when it is not a finite normal double.
    T checked_value(const char* what) const {
        if (is_zero()) return T{};
        double l = log2_abs();
        if (l > 1023.0 || l < -1021.0)
            throw std::range_error(std::string(what) + ": value outside double range (log2 |v| = " +
                                   std::to_string(l) + ")");
        return value();
    }

    Scaled operator-() const {
        Scaled r;
        r.mant = -mant;
        r.exp = exp;
        return r;
    }
};

using ScaledReal = Scaled<double>;
using ScaledComplex = Scaled<Complex>;

template <typename A, typename B>
inline auto operator*(const Scaled<A>& a, const Scaled<B>& b) {
    using R = decltype(a.mant * b.mant);
    return Scaled<R>(a.mant * b.mant, a.exp + b.exp);
}

template <typename A, typename B>
inline auto operator/(const Scaled<A>& a, const Scaled<B>& b) {
    using R = decltype(a.mant / b.mant);
    if (b.is_zero()) throw std::domain_error("Scaled: division by zero");
    return Scaled<R>(a.mant / b.mant, a.exp - b.exp);
}

template <typename T>
inline Scaled<T> operator*(const Scaled<T>& a, double s) {
    return Scaled<T>(a.mant * s, a.exp);
}

template <typename A, typename B>
inline auto operator+(const Scaled<A>& a, const Scaled<B>& b) {
    using R = decltype(a.mant + b.mant);
    if (a.is_zero()) return Scaled<R>(R(b.mant), b.exp);
    if (b.is_zero()) return Scaled<R>(R(a.mant), a.exp);
    long e = std::max(a.exp, b.exp);
    long da = a.exp - e;
    long db = b.exp - e;
    R ma = da < -1100 ? R{} : R(a.mant) * std::ldexp(1.0, static_cast<int>(da));
    R mb = db < -1100 ? R{} : R(b.mant) * std::ldexp(1.0, static_cast<int>(db));
    return Scaled<R>(ma + mb, e);
}

template <typename A, typename B>
inline auto operator-(const Scaled<A>& a, const Scaled<B>& b) {
    return a + (-b);
}

/// a + i b as a scaled complex value.
inline ScaledComplex make_complex(const ScaledReal& re, const ScaledReal& im) {
    return ScaledComplex(Complex(re.mant, 0.0), re.exp) + ScaledComplex(Complex(0.0, im.mant), im.exp);
}

/// Scaled value built from a double and a natural-log scale: v * e^{log_scale}.
template <typename T>
inline Scaled<T> from_log_scale(T v, double log_scale) {
    double l2 = log_scale / std::log(2.0);
    double fl = std::floor(l2);
    return Scaled<T>(v * std::exp2(l2 - fl), static_cast<long>(fl));
}

}  // namespace cylwave
