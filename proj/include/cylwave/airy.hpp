#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "scaled.hpp"

namespace cylwave {

struct AiryPair {
    Complex ai;
    Complex dai;
};

/// Ai and Ai' together with a natural-log scale: Ai = ai * e^{log_scale}.
struct ScaledAiryPair {
    Complex ai;
    Complex dai;
    double log_scale = 0.0;
};

/// A(w) = Ai(w) and the rotated solutions A+(w) = Ai(e^{-2i pi/3} w), A-(w) = Ai(e^{2i pi/3} w).
struct AiryBundle {
    Complex A;
    Complex Aplus;
    Complex Aminus;
    Complex dA;
    Complex dAplus;
    Complex dAminus;
};

namespace detail {

inline constexpr double kAiry0 = 0.355028053887817239260063186004;
inline constexpr double kAiryPrime0 = -0.258819403792806798405183560189;
inline constexpr double kAsymptoticRadius = 9.0;
inline constexpr double kTaylorStep = 1.0;

// Taylor re-expansion of y'' = z y about c, advanced by dz.
inline AiryPair airy_taylor_step(Complex c, AiryPair y, Complex dz) {
    Complex a_prev2 = 0.0;      // a_{k-1}
    Complex a_prev1 = y.ai;     // a_k (k = 0)
    Complex a_cur = y.dai;      // a_{k+1}
    Complex pw = 1.0;
    Complex val = y.ai;
    Complex der = y.dai;
    Complex dpw = 1.0;          // dz^{k}
    pw = dz;
    val += a_cur * pw;
    int small = 0;
    for (int k = 0; k < 200; ++k) {
        // a_{k+2} = (c a_k + a_{k-1}) / ((k+2)(k+1))
        Complex a_next = (c * a_prev1 + a_prev2) / static_cast<double>((k + 2) * (k + 1));
        a_prev2 = a_prev1;
        a_prev1 = a_cur;
        a_cur = a_next;
        dpw = pw;                 // dz^{k+1}
        pw *= dz;                 // dz^{k+2}
        Complex tv = a_cur * pw;
        Complex td = a_cur * static_cast<double>(k + 2) * dpw;
        val += tv;
        der += td;
        double scale = std::abs(val) + std::abs(der);
        if (std::abs(tv) + std::abs(td) <= 1e-18 * scale) {
            if (++small >= 3) break;
        } else {
            small = 0;
        }
    }
    return {val, der};
}

// Asymptotic expansion valid for |arg z| <= 2pi/3, |z| large; scale e^{-Re zeta} is split off.
inline ScaledAiryPair airy_asymptotic_sector(Complex z) {
    Complex sq = std::sqrt(z);
    Complex zeta = 2.0 / 3.0 * z * sq;
    Complex z14 = std::sqrt(sq);
    Complex inv = 1.0 / zeta;
    Complex su = 1.0, sv = 1.0;
    double u = 1.0;
    Complex p = 1.0;
    double last = 1e300;
    for (int k = 1; k < 60; ++k) {
        double kk = k;
        u *= (6 * kk - 5) * (6 * kk - 3) * (6 * kk - 1) / ((2 * kk - 1) * 216.0 * kk);
        double v = -(6 * kk + 1) / (6 * kk - 1) * u;
        p *= -inv;
        Complex tu = u * p;
        Complex tv = v * p;
        double mag = std::abs(tu) + std::abs(tv);
        if (mag > last) break;
        su += tu;
        sv += tv;
        last = mag;
        if (mag < 1e-18) break;
    }
    double rz = zeta.real();
    Complex phase = std::exp(Complex(0.0, -zeta.imag()));
    double norm = 0.5 / std::sqrt(std::numbers::pi);
    ScaledAiryPair r;
    r.ai = phase * norm / z14 * su;
    r.dai = -phase * norm * z14 * sv;
    r.log_scale = -rz;
    return r;
}

inline ScaledAiryPair rescale(const ScaledAiryPair& p, double target) {
    double f = std::exp(p.log_scale - target);
    return {p.ai * f, p.dai * f, target};
}

inline ScaledAiryPair airy_asymptotic(Complex z) {
    constexpr double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;
    if (std::abs(std::arg(z)) <= two_thirds_pi) return airy_asymptotic_sector(z);
    // Ai(z) = -w Ai(wz) - w^2 Ai(w^2 z), w = e^{2 i pi/3}
    const Complex w = std::polar(1.0, two_thirds_pi);
    const Complex w2 = w * w;
    ScaledAiryPair a = airy_asymptotic_sector(w * z);
    ScaledAiryPair b = airy_asymptotic_sector(w2 * z);
    double s = std::max(a.log_scale, b.log_scale);
    a = rescale(a, s);
    b = rescale(b, s);
    ScaledAiryPair r;
    r.ai = -w * a.ai - w2 * b.ai;
    r.dai = -w2 * a.dai - w * b.dai;
    r.log_scale = s;
    return r;
}

inline AiryPair walk(Complex from, AiryPair y, Complex to) {
    Complex d = to - from;
    int steps = std::max(1, static_cast<int>(std::ceil(std::abs(d) / kTaylorStep)));
    Complex dz = d / static_cast<double>(steps);
    Complex c = from;
    for (int i = 0; i < steps; ++i) {
        y = airy_taylor_step(c, y, dz);
        c += dz;
    }
    return y;
}

}  // namespace detail

/// Ai(z) and Ai'(z) for complex z with an explicit exponential scale, so that
/// arguments far outside the double range of Ai remain representable.
inline ScaledAiryPair airy_ai_scaled(Complex z) {
    using namespace detail;
    double r = std::abs(z);
    if (r >= kAsymptoticRadius) return airy_asymptotic(z);
    if (r <= 1.0) {
        AiryPair p = airy_taylor_step(0.0, {kAiry0, kAiryPrime0}, z);
        return {p.ai, p.dai, 0.0};
    }
    if (std::abs(std::arg(z)) < std::numbers::pi / 3.0) {
        // recessive sector: integrate inward from the asymptotic circle
        Complex start = z * (kAsymptoticRadius / r);
        ScaledAiryPair s = airy_asymptotic(start);
        AiryPair p = walk(start, {s.ai, s.dai}, z);
        return {p.ai, p.dai, s.log_scale};
    }
    AiryPair p = walk(0.0, {kAiry0, kAiryPrime0}, z);
    return {p.ai, p.dai, 0.0};
}

inline AiryPair airy_ai(Complex z) {
    ScaledAiryPair s = airy_ai_scaled(z);
    if (s.log_scale > 700.0) throw std::overflow_error("airy_ai: result overflows");
    double f = std::exp(s.log_scale);
    return {s.ai * f, s.dai * f};
}

/// Growth exponent 2/3 Re(w^{3/2}) maximized over the three rotated arguments.
inline double airy_growth_exponent(Complex w) {
    const Complex rot = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    double worst = 0.0;
    for (Complex z : {w, w / rot, w * rot}) {
        Complex zeta = 2.0 / 3.0 * z * std::sqrt(z);
        worst = std::max(worst, -zeta.real());
    }
    return worst;
}

inline AiryBundle airy_all(Complex w, double w_max = 50.0) {
    if (!(std::abs(w) <= w_max)) throw std::domain_error("airy_all: |w| outside evaluation window");
    if (airy_growth_exponent(w) > 690.0) throw std::overflow_error("airy_all: growing solution exceeds exponent range");
    const Complex em = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);  // e^{-2i pi/3}
    const Complex ep = std::conj(em);
    AiryPair a = airy_ai(w);
    if (w.imag() == 0.0) a = {a.ai.real(), a.dai.real()};
    AiryPair p = airy_ai(em * w);
    AiryPair m = airy_ai(ep * w);
    return {a.ai, p.ai, m.ai, a.dai, em * p.dai, ep * m.dai};
}

/// Airy quotient A+'(w) / A+(w) on the real line.
inline Complex phi_plus(double w) {
    const Complex em = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);
    ScaledAiryPair p = airy_ai_scaled(em * w);
    return em * p.dai / p.ai;
}

/// Modulus |A+(w)|, real and increasing on the real line.
inline double airy_sigma(double w) {
    return std::abs(airy_all(w).Aplus);
}

}  // namespace cylwave
