#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "bessel.hpp"
#include "errors.hpp"
#include "oscint.hpp"
#include "phases.hpp"
#include "scaled.hpp"

namespace cylwave {

/// Time frequency tau, axial frequency vartheta and angular mode n; kappa is derived.
struct ModalParams {
    double tau = 1.0;
    double vartheta = 0.0;
    int n = 0;

    bool propagating() const { return std::fabs(vartheta) <= tau; }
    /// sqrt(tau^2 - vartheta^2) on the propagating band, 0 otherwise.
    double kappa() const { return propagating() ? std::sqrt((tau - vartheta) * (tau + vartheta)) : 0.0; }
    /// sqrt(vartheta^2 - tau^2) on the evanescent band, 0 otherwise.
    double decay() const { return propagating() ? 0.0 : std::sqrt((vartheta - tau) * (vartheta + tau)); }
};

struct TruncationPolicy {
    int n_max = 4000;
    double vartheta_cut = 0.0;  // <= 0: chosen from the evanescent decay rate
    double tol = 1e-10;
};

struct KernelSample {
    Complex value;
    int n_used = 0;
    double quad_err = 0.0;
};

inline void check_policy(const TruncationPolicy& p, const char* what) {
    if (p.n_max < 1 || !(p.tol > 0.0)) throw std::domain_error(std::string(what) + ": need n_max >= 1 and tol > 0");
}

/// Factor turning the angular/axial sum of modal_green into the resolvent.
inline double resolvent_weight(double r, double s) { return -std::sqrt(r * s) / (4.0 * std::numbers::pi * std::numbers::pi); }

/// e^{i tau d} / (4 pi d).
inline Complex free_resolvent(double d, double tau) { return std::polar(1.0, tau * d) / (4.0 * std::numbers::pi * d); }

inline Complex free_resolvent(const CylPoint& q, const SourceConfig& q0, double tau) {
    return free_resolvent(dist_cyl(q, q0), tau);
}

namespace detail {

inline void check_modal(int n, double r, double rs, double kappa, const char* what) {
    if (n < 0) throw std::domain_error(std::string(what) + ": n must be >= 0");
    if (!(r >= 1.0) || !(rs >= 1.0)) throw std::domain_error(std::string(what) + ": radii must be >= 1");
    if (!(kappa > 0.0)) throw std::domain_error(std::string(what) + ": kappa must be positive");
}

inline ScaledComplex hankel_seq(const CylinderSequence& c, int n) { return make_complex(c.j[n], c.y[n]); }

inline ScaledComplex conj_scaled(const ScaledComplex& v) { return ScaledComplex(std::conj(v.mant), v.exp); }

}  // namespace detail

/// (pi/2i)(r r~)^{-1/2}[J_n(r< k) - J_n(k) H_n(r< k)/H_n(k)] H_n(r> k).
inline Complex modal_green(int n, double r, double r_src, double kappa) {
    detail::check_modal(n, r, r_src, kappa, "modal_green");
    double lo = std::min(r, r_src), hi = std::max(r, r_src);
    auto b = bessel_jy_sequence(kappa, n);
    auto bl = bessel_jy_sequence(lo * kappa, n);
    auto bh = bessel_jy_sequence(hi * kappa, n);
    ScaledComplex hk = detail::hankel_seq(b, n);
    ScaledComplex hl = detail::hankel_seq(bl, n);
    ScaledComplex hh = detail::hankel_seq(bh, n);
    ScaledComplex bracket = ScaledComplex(Complex(bl.j[n].mant), bl.j[n].exp) - ScaledComplex(Complex(b.j[n].mant), b.j[n].exp) * hl / hk;
    Complex v = (bracket * hh).checked_value("modal_green");
    return Complex(0.0, -0.5 * std::numbers::pi) / std::sqrt(r * r_src) * v;
}

struct GreenSplit {
    Complex g_plus;
    Complex g_minus;
};

/// G+ = (pi/4i)(r s)^{-1/2} conj(H_n(s k)) H_n(r k), G- = (pi/4i)(r s)^{-1/2} conj(H_n(k))/H_n(k) H_n(s k) H_n(r k),
/// with s the smaller radius.
inline GreenSplit modal_green_split(int n, double r, double r_src, double kappa) {
    detail::check_modal(n, r, r_src, kappa, "modal_green_split");
    double lo = std::min(r, r_src), hi = std::max(r, r_src);
    auto b = bessel_jy_sequence(kappa, n);
    auto bl = bessel_jy_sequence(lo * kappa, n);
    auto bh = bessel_jy_sequence(hi * kappa, n);
    ScaledComplex hk = detail::hankel_seq(b, n);
    ScaledComplex hl = detail::hankel_seq(bl, n);
    ScaledComplex hh = detail::hankel_seq(bh, n);
    Complex pref = Complex(0.0, -0.25 * std::numbers::pi) / std::sqrt(r * r_src);
    Complex gp = (detail::conj_scaled(hl) * hh).checked_value("modal_green_split");
    Complex gm = (detail::conj_scaled(hk) / hk * hl * hh).checked_value("modal_green_split");
    return {pref * gp, pref * gm};
}

/// d/dr~ of modal_green at r~ = 1 with the other radius r_src: -r_src^{-1/2} H_n(r_src k)/H_n(k).
inline Complex boundary_normal_derivative_modal(int n, double r_src, double kappa) {
    detail::check_modal(n, r_src, 1.0, kappa, "boundary_normal_derivative_modal");
    if (!(r_src > 1.0)) throw std::domain_error("boundary_normal_derivative_modal: need r_src > 1");
    auto b = bessel_jy_sequence(kappa, n);
    auto bs = bessel_jy_sequence(r_src * kappa, n);
    Complex q = (detail::hankel_seq(bs, n) / detail::hankel_seq(b, n)).checked_value("boundary_normal_derivative_modal");
    return -q / std::sqrt(r_src);
}

/// Smallest N >= 1 with (e tau r_max / (2N))^N / sqrt(2 pi N) < tol.
inline int mode_truncation(double tau, double r_max, double tol) {
    if (!(tau > 0.0) || !(r_max > 0.0) || !(tol > 0.0))
        throw std::domain_error("mode_truncation: tau, r_max, tol must be positive");
    double x = std::numbers::e * tau * r_max / 2.0;
    double lt = std::log(tol);
    for (int n = 1; n < kBesselOrderMax; ++n) {
        double l = n * std::log(x / n) - 0.5 * std::log(2.0 * std::numbers::pi * n);
        if (l < lt) return n;
    }
    return kBesselOrderMax;
}

namespace detail {

// Scattered angular sum at a single axial frequency. Propagating band:
//   S = (i/8pi) sum_n eps_n cos(n theta) (-J_n(k) H_n(s k) H_n(r k)/H_n(k)),
// evanescent band (k = i a):
//   S = -(1/4pi^2) sum_n eps_n cos(n theta) I_n(a) K_n(s a) K_n(r a)/K_n(a).
// Source-side factors are shared by every receiver radius.
class ScatterNode {
public:
    ScatterNode(double s, double k, bool propagating, int n_cap)
        : s_(s), k_(k), prop_(propagating), n_cap_(n_cap) {
        if (prop_) {
            auto b = bessel_jy_sequence(k_, n_cap_);
            auto bs = bessel_jy_sequence(s_ * k_, n_cap_);
            coef_.resize(n_cap_ + 1);
            for (int n = 0; n <= n_cap_; ++n) {
                ScaledComplex jk(Complex(b.j[n].mant), b.j[n].exp);
                coef_[n] = jk * hankel_seq(bs, n) / hankel_seq(b, n);
            }
        } else {
            auto b = bessel_ik_sequence(k_, n_cap_);
            auto bs = bessel_ik_sequence(s_ * k_, n_cap_);
            coef_.resize(n_cap_ + 1);
            for (int n = 0; n <= n_cap_; ++n) {
                ScaledReal v = b.i[n] * bs.k[n] / b.k[n];
                coef_[n] = ScaledComplex(Complex(v.mant), v.exp);
            }
        }
    }

    /// Mode terms for receiver radius r, already including the band prefactor.
    std::vector<Complex> radial_terms(double r) const {
        std::vector<Complex> t(n_cap_ + 1);
        const Complex pre = prop_ ? Complex(0.0, -1.0 / (8.0 * std::numbers::pi))
                                  : Complex(-1.0 / (4.0 * std::numbers::pi * std::numbers::pi));
        if (prop_) {
            auto br = bessel_jy_sequence(r * k_, n_cap_);
            for (int n = 0; n <= n_cap_; ++n) t[n] = pre * (coef_[n] * hankel_seq(br, n)).value();
        } else {
            auto br = bessel_ik_sequence(r * k_, n_cap_);
            for (int n = 0; n <= n_cap_; ++n) {
                ScaledComplex kr(Complex(br.k[n].mant), br.k[n].exp);
                t[n] = pre * (coef_[n] * kr).value();
            }
        }
        return t;
    }

    int n_cap() const { return n_cap_; }

private:
    double s_, k_;
    bool prop_;
    int n_cap_;
    std::vector<ScaledComplex> coef_;
};

inline Complex fold_angular(const std::vector<Complex>& t, double theta) {
    Complex sum = 0.0;
    for (size_t n = t.size(); n-- > 1;) sum += 2.0 * std::cos(n * theta) * t[n];
    return sum + t[0];
}

// Number of modes needed at one node so that the geometric tail (ratio 1/(r s))
// falls below mode_tol; capped by n_max.
inline int scatter_mode_count(double k, double r, double s, double mode_tol, int n_max) {
    double rmax = std::max(r, s);
    double base = std::ceil(1.1 * k * rmax) + 10.0;
    double ratio = r * s;
    double extra = ratio > 1.0 + 1e-12 ? std::ceil(std::log(1.0 / mode_tol) / std::log(ratio)) : 1e9;
    double n = std::min(base + extra, static_cast<double>(n_max));
    return std::max(2, static_cast<int>(n));
}

// Geometric tail bound from the last computed term.
inline double scatter_tail(const std::vector<Complex>& t, double r, double s) {
    double ratio = r * s;
    if (!(ratio > 1.0)) return std::numeric_limits<double>::infinity();
    return 2.0 * std::abs(t.back()) / (ratio - 1.0);
}

struct BandEval {
    Complex value;
    int n_used = 0;
    double tail = 0.0;
};

inline BandEval scatter_value(double k, bool prop, double r, double theta, double s, double mode_tol, int n_max) {
    int n = scatter_mode_count(k, r, s, mode_tol, n_max);
    ScatterNode node(s, k, prop, n);
    auto t = node.radial_terms(r);
    return {fold_angular(t, theta), n, scatter_tail(t, r, s)};
}

// Free angular sum: (i/8pi) H_0(k rho) on the propagating band, (1/4pi^2) K_0(a rho) on the evanescent band.
inline Complex free_band_value(double k, bool prop, double rho) {
    if (prop) return Complex(0.0, 1.0 / (8.0 * std::numbers::pi)) * hankel_H1(0, k * rho);
    return bessel_ik_sequence(k * rho, 0).k[0].value() / (4.0 * std::numbers::pi * std::numbers::pi);
}

// Upper limit of the evanescent band where exp(-a (r + s - 2)) has dropped below tol.
inline double evanescent_cut(double tau, double r, double s, double tol, double vartheta_cut) {
    double gap = r + s - 2.0;
    double amax = gap > 0.0 ? (std::log(1.0 / tol) + 5.0) / gap : std::numeric_limits<double>::infinity();
    double vmax = std::sqrt(tau * tau + amax * amax);
    if (vartheta_cut > 0.0) vmax = std::min(vmax, vartheta_cut);
    return vmax;
}

struct AxialResult {
    Complex value;
    double err = 0.0;
    int n_used = 0;
    double tail = 0.0;
};

// int_{-tau}^{tau} e^{i z v} f(v) dv for even f, with v = tau sin(phi), restricted to phi in
// [-phi_hi, -phi_lo] u [phi_lo, phi_hi].
template <typename F>
AxialResult propagating_integral(F&& f, double tau, double z, double tol, double phi_lo = 0.0,
                                 double phi_hi = std::numbers::pi / 2.0) {
    AxialResult out;
    auto amp = [&](double phi) -> Complex {
        double k = tau * std::cos(phi);
        BandEval b = f(k);
        out.n_used = std::max(out.n_used, b.n_used);
        out.tail = std::max(out.tail, b.tail);
        return k * b.value;
    };
    double az = std::fabs(z);
    if (az * tau < 1e-12) {
        QuadResult q = integrate_adaptive([&](double phi) { return amp(phi); }, phi_lo, phi_hi, 0.5 * tol);
        out.value = 2.0 * q.value;
        out.err = 2.0 * q.err_estimate;
        return out;
    }
    Phase1D ph{[tau](double p) { return tau * std::sin(p); }, [tau](double p) { return tau * std::cos(p); },
               [tau](double p) { return -tau * std::sin(p); }};
    QuadResult qp = integrate_osc(amp, ph, az, phi_lo, phi_hi, 0.5 * tol);
    QuadResult qm = integrate_osc(amp, ph, az, -phi_hi, -phi_lo, 0.5 * tol);
    out.value = qp.value + qm.value;
    out.err = qp.err_estimate + qm.err_estimate;
    return out;
}

// 2 int_tau^vmax cos(z v) f(v) dv for real-valued even f, with v = tau cosh(u).
template <typename F>
AxialResult evanescent_integral(F&& f, double tau, double z, double vmax, double tol) {
    AxialResult out;
    if (!(vmax > tau)) return out;
    double umax = std::acosh(vmax / tau);
    auto amp = [&](double u) -> Complex {
        double a = tau * std::sinh(u);
        BandEval b = f(a);
        out.n_used = std::max(out.n_used, b.n_used);
        out.tail = std::max(out.tail, b.tail);
        return a * b.value;
    };
    double az = std::fabs(z);
    QuadResult q;
    if (az * tau < 1e-12) {
        q = integrate_adaptive([&](double u) { return amp(u); }, 0.0, umax, 0.5 * tol);
    } else {
        Phase1D ph{[tau](double u) { return tau * std::cosh(u); }, [tau](double u) { return tau * std::sinh(u); },
                   [tau](double u) { return tau * std::cosh(u); }};
        q = integrate_osc(amp, ph, az, 0.0, umax, 0.5 * tol);
    }
    out.value = 2.0 * q.value.real();
    out.err = 2.0 * q.err_estimate;
    return out;
}

inline void check_resolvent_args(const CylPoint& q, const SourceConfig& q0, double tau, const TruncationPolicy& p,
                                 const char* what) {
    check_exterior(q, what);
    check_source(q0, what);
    check_policy(p, what);
    if (!(tau > 0.0)) throw std::domain_error(std::string(what) + ": tau must be positive");
}

inline void check_tail(double tail, double tol, const char* what) {
    if (tail > tol)
        throw ConvergenceError(std::string(what) + ": mode-sum tail " + std::to_string(tail) +
                               " exceeds tolerance (raise n_max)");
}

}  // namespace detail

/// Scattered part of the resolvent (everything except e^{i tau d}/(4 pi d)).
inline KernelSample scattered_resolvent(const CylPoint& q, const SourceConfig& q0, double tau,
                                        const TruncationPolicy& policy = {}) {
    detail::check_resolvent_args(q, q0, tau, policy, "scattered_resolvent");
    double r = q.r, s = q0.s, th = q.theta, z = q.z;
    double mode_tol = 1e-2 * policy.tol / std::max(1.0, tau);
    auto prop = [&](double k) { return detail::scatter_value(k, true, r, th, s, mode_tol, policy.n_max); };
    auto evan = [&](double a) { return detail::scatter_value(a, false, r, th, s, mode_tol, policy.n_max); };
    double vmax = detail::evanescent_cut(tau, r, s, policy.tol, policy.vartheta_cut);
    detail::AxialResult p = detail::propagating_integral(prop, tau, z, 0.5 * policy.tol);
    detail::AxialResult e = detail::evanescent_integral(evan, tau, z, vmax, 0.5 * policy.tol);
    detail::check_tail(std::max(p.tail, e.tail), mode_tol * 100.0, "scattered_resolvent");
    return {p.value + e.value, std::max(p.n_used, e.n_used), p.err + e.err};
}

/// Outgoing Dirichlet resolvent: closed-form free kernel plus the scattered mode sum.
inline KernelSample resolvent(const CylPoint& q, const SourceConfig& q0, double tau, const TruncationPolicy& policy = {}) {
    KernelSample k = scattered_resolvent(q, q0, tau, policy);
    k.value += free_resolvent(q, q0, tau);
    return k;
}

/// Free part of the resolvent evaluated by its mode sum
/// (i/8pi) int e^{i z v} sum_n e^{i n theta} J_n(r< k) H_n(r> k) dv; requires r != s.
inline KernelSample free_resolvent_modal(const CylPoint& q, const SourceConfig& q0, double tau,
                                         const TruncationPolicy& policy = {}) {
    detail::check_resolvent_args(q, q0, tau, policy, "free_resolvent_modal");
    double lo = std::min(q.r, q0.s), hi = std::max(q.r, q0.s);
    if (!(hi > lo)) throw std::domain_error("free_resolvent_modal: radii must differ");
    double mode_tol = 1e-2 * policy.tol / std::max(1.0, tau);
    double ratio = hi / lo;
    auto band = [&](double k, bool prop) {
        int n = std::min(policy.n_max, static_cast<int>(std::ceil(1.1 * k * hi) + 10 +
                                                         std::ceil(std::log(1.0 / mode_tol) / std::log(ratio))));
        std::vector<Complex> t(n + 1);
        if (prop) {
            auto bl = bessel_jy_sequence(lo * k, n);
            auto bh = bessel_jy_sequence(hi * k, n);
            for (int m = 0; m <= n; ++m) {
                ScaledComplex jl(Complex(bl.j[m].mant), bl.j[m].exp);
                t[m] = Complex(0.0, 1.0 / (8.0 * std::numbers::pi)) * (jl * detail::hankel_seq(bh, m)).value();
            }
        } else {
            auto bl = bessel_ik_sequence(lo * k, n);
            auto bh = bessel_ik_sequence(hi * k, n);
            for (int m = 0; m <= n; ++m)
                t[m] = (bl.i[m] * bh.k[m]).value() / (4.0 * std::numbers::pi * std::numbers::pi);
        }
        double tail = 2.0 * std::abs(t.back()) / (ratio - 1.0);
        return detail::BandEval{detail::fold_angular(t, q.theta), n, tail};
    };
    double gap = hi - lo;
    double amax = (std::log(1.0 / policy.tol) + 5.0) / gap;
    double vmax = std::sqrt(tau * tau + amax * amax);
    if (policy.vartheta_cut > 0.0) vmax = std::min(vmax, policy.vartheta_cut);
    auto p = detail::propagating_integral([&](double k) { return band(k, true); }, tau, q.z, 0.5 * policy.tol);
    auto e = detail::evanescent_integral([&](double a) { return band(a, false); }, tau, q.z, vmax, 0.5 * policy.tol);
    detail::check_tail(std::max(p.tail, e.tail), mode_tol * 100.0, "free_resolvent_modal");
    return {p.value + e.value, std::max(p.n_used, e.n_used), p.err + e.err};
}

/// Propagating part of the resolvent (|vartheta| < tau), free part summed in closed form via H_0.
inline KernelSample propagating_resolvent(const CylPoint& q, const SourceConfig& q0, double tau,
                                          const TruncationPolicy& policy = {}, double phi_lo = 0.0,
                                          double phi_hi = std::numbers::pi / 2.0);

/// Resolvent restricted to the axial frequencies weighted by psi_j(1 - (vartheta/tau)^2)
/// (psi_0 for j = 0); propagating band only.
inline KernelSample lp_resolvent(const CylPoint& q, const SourceConfig& q0, double tau, int j,
                                 const CutoffSystem& cutoffs, const TruncationPolicy& policy = {}) {
    detail::check_resolvent_args(q, q0, tau, policy, "lp_resolvent");
    if (j < 0) throw std::domain_error("lp_resolvent: j must be >= 0");
    double r = q.r, s = q0.s, th = q.theta;
    double rho = phi_tilde(r, th, s, 0.0);
    if (!(rho > 0.0)) throw std::domain_error("lp_resolvent: receiver on the source generator");
    double mode_tol = 1e-2 * policy.tol / std::max(1.0, tau);
    // beta = 1 - sin^2(phi) = cos^2(phi); weight support in cos(phi).
    double c_lo, c_hi;
    if (j == 0) {
        c_lo = std::sqrt(CutoffSystem::kPsi0Low);
        c_hi = 1.0;
    } else {
        c_lo = std::ldexp(std::sqrt(CutoffSystem::kPsi0Low), -j);
        c_hi = std::ldexp(std::sqrt(4.0 * CutoffSystem::kPsi0High), -j);
    }
    double phi_lo = std::acos(std::min(1.0, c_hi));
    double phi_hi = std::acos(c_lo);
    auto f = [&](double k) {
        double beta = (k / tau) * (k / tau);
        double w = j == 0 ? cutoffs.psi0(beta) : cutoffs.psi_j(j, beta);
        if (w == 0.0) return detail::BandEval{};
        detail::BandEval b = detail::scatter_value(k, true, r, th, s, mode_tol, policy.n_max);
        b.value = w * (b.value + detail::free_band_value(k, true, rho));
        return b;
    };
    auto p = detail::propagating_integral(f, tau, q.z, policy.tol, phi_lo, phi_hi);
    detail::check_tail(p.tail, mode_tol * 100.0, "lp_resolvent");
    return {p.value, p.n_used, p.err};
}

inline KernelSample propagating_resolvent(const CylPoint& q, const SourceConfig& q0, double tau,
                                          const TruncationPolicy& policy, double phi_lo, double phi_hi) {
    detail::check_resolvent_args(q, q0, tau, policy, "propagating_resolvent");
    double r = q.r, s = q0.s, th = q.theta;
    double rho = phi_tilde(r, th, s, 0.0);
    if (!(rho > 0.0)) throw std::domain_error("propagating_resolvent: receiver on the source generator");
    double mode_tol = 1e-2 * policy.tol / std::max(1.0, tau);
    auto f = [&](double k) {
        detail::BandEval b = detail::scatter_value(k, true, r, th, s, mode_tol, policy.n_max);
        b.value += detail::free_band_value(k, true, rho);
        return b;
    };
    auto p = detail::propagating_integral(f, tau, q.z, policy.tol, phi_lo, phi_hi);
    detail::check_tail(p.tail, mode_tol * 100.0, "propagating_resolvent");
    return {p.value, p.n_used, p.err};
}

}  // namespace cylwave
