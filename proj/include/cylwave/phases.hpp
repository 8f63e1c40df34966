#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numdiff.hpp"
#include "zeta.hpp"

namespace cylwave {

inline constexpr double kDefaultGlancingEps = 0.05;

/// Exterior point in cylindrical coordinates.
struct CylPoint {
    double r = 1.0;
    double theta = 0.0;
    double z = 0.0;

    double x() const { return r - 1.0; }
    double y() const { return std::numbers::pi / 2.0 - theta; }
};

/// Point source at (s, 0, 0).
struct SourceConfig {
    double s = 2.0;
};

inline void check_exterior(const CylPoint& q, const char* what) {
    if (!(q.r >= 1.0)) throw std::domain_error(std::string(what) + ": point must satisfy r >= 1");
}

inline void check_source(const SourceConfig& q0, const char* what) {
    if (!(q0.s >= 1.0)) throw std::domain_error(std::string(what) + ": source radius must satisfy s >= 1");
}

/// sqrt(r^2 - 2 s r cos(theta) + s^2 + z^2).
inline double phi_tilde(double r, double theta, double s, double z) {
    return std::sqrt(std::max(0.0, r * r - 2.0 * s * r * std::cos(theta) + s * s + z * z));
}

/// Planar distance from (1, theta) to (s, 0).
inline double chord(double s, double theta) { return phi_tilde(1.0, theta, s, 0.0); }

inline double dist_cyl(const CylPoint& q, const SourceConfig& q0) { return phi_tilde(q.r, q.theta, q0.s, q.z); }

inline double dist_cyl(const CylPoint& a, const CylPoint& b) {
    double rr = a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * std::cos(a.theta - b.theta);
    return std::sqrt(std::max(0.0, rr) + (a.z - b.z) * (a.z - b.z));
}

/// Distance in normal coordinates, r = 1 + x, theta = pi/2 - y.
inline double phi_normal(double x, double y, double z, double s) {
    double rr = 1.0 + x;
    return std::sqrt(std::max(0.0, rr * rr - 2.0 * s * rr * std::sin(y) + s * s + z * z));
}

struct ApparentContour {
    double theta_star;
    double y_star;
};

inline ApparentContour apparent_contour(double s) {
    if (!(s > 1.0)) throw std::domain_error("apparent_contour: degenerate for s <= 1");
    return {std::acos(1.0 / s), std::asin(1.0 / s)};
}

struct CriticalPair {
    double y_plus;
    double y_minus;
};

/// Critical points in y of y alpha_t + phi(x, y, 0, s).
inline CriticalPair critical_points_ypm(double x, double alpha_t, double s) {
    double rr = 1.0 + x;
    if (!(alpha_t > 0.0) || !(x >= 0.0)) throw std::domain_error("critical_points_ypm: need alpha_t > 0, x >= 0");
    double a2 = alpha_t * alpha_t;
    double p = s * s - a2, q = rr * rr - a2;
    if (p < 0.0 || q < 0.0) throw std::domain_error("critical_points_ypm: need s >= 1 + x >= alpha_t");
    double root = std::sqrt(p) * std::sqrt(q);
    double den = s * rr;
    double sp = std::clamp((a2 + root) / den, -1.0, 1.0);
    double sm = std::clamp((a2 - root) / den, -1.0, 1.0);
    return {std::asin(sp), std::asin(sm)};
}

/// y alpha_t + phi(x, y, 0, s).
inline double phi_bar(double x, double y, double alpha_t, double s) { return y * alpha_t + phi_normal(x, y, 0.0, s); }

namespace detail {

inline void check_glancing(double alpha_t, double eps, const char* what) {
    if (!(eps > 0.0) || !(std::fabs(1.0 - alpha_t) <= 2.0 * eps))
        throw std::domain_error(std::string(what) + ": alpha_t outside the glancing window |1 - alpha_t| <= 2 eps");
}

// Half-sum of critical values at x = 0, analytically continued to alpha_t > 1.
inline double gamma0_raw(double alpha_t, double s) {
    using C = std::complex<double>;
    double a2 = alpha_t * alpha_t;
    if (a2 > s * s) throw std::domain_error("gamma0: need alpha_t < s");
    if (alpha_t <= 1.0) {
        CriticalPair y = critical_points_ypm(0.0, alpha_t, s);
        return 0.5 * ((y.y_plus + y.y_minus) * alpha_t + phi_normal(0.0, y.y_plus, 0.0, s) +
                      phi_normal(0.0, y.y_minus, 0.0, s));
    }
    C root = std::sqrt(C(1.0 - a2)) * std::sqrt(1.0 - a2 / (s * s));
    C zp = a2 / s + root;
    C yp = std::asin(zp);
    C php = std::sqrt(1.0 + s * s - 2.0 * s * zp);
    return (yp * alpha_t + php).real();
}

}  // namespace detail

/// Half-sum of the two critical values of phi_bar at x = 0.
/// For alpha_t slightly above 1 the (complex conjugate) critical points are
/// continued analytically; the half-sum stays real.
inline double gamma0(double alpha_t, double s, double eps = kDefaultGlancingEps) {
    if (!(s > 1.0)) throw std::domain_error("gamma0: need s > 1");
    detail::check_glancing(alpha_t, eps, "gamma0");
    return detail::gamma0_raw(alpha_t, s);
}

inline double gamma_tilde(double alpha_t, double r, double y_q, double eps = kDefaultGlancingEps) {
    if (!(r > 1.0)) throw std::domain_error("gamma_tilde: need r > 1");
    detail::check_glancing(alpha_t, eps, "gamma_tilde");
    return -(y_q + std::numbers::pi / 2.0) * alpha_t + detail::gamma0_raw(alpha_t, r);
}

/// y_c = y_Q + arccos(1/r).
inline double y_critical(double r, double y_q) { return y_q + std::acos(1.0 / r); }

struct EikonalResidual {
    double res1;
    double res2;
};

/// iota = y alpha + z gamma, zeta = alpha^{2/3} zeta_tilde((1 + x) sqrt(1 - gamma^2) / alpha).
inline double mt_iota(double, double y, double z, double alpha, double gamma) { return y * alpha + z * gamma; }

inline double mt_zeta(double x, double, double, double alpha, double gamma) {
    return std::pow(alpha, 2.0 / 3.0) * zeta_tilde((1.0 + x) * std::sqrt(1.0 - gamma * gamma) / alpha);
}

/// Residuals of the two eikonal equations at (x, y, z), all partials by finite differences.
inline EikonalResidual eikonal_residual(double x, double y, double z, double alpha, double gamma) {
    if (!(alpha > 0.0) || !(gamma * gamma < 1.0))
        throw std::domain_error("eikonal_residual: need alpha > 0 and gamma^2 < 1");
    auto grad = [&](auto f) {
        return std::array<double, 3>{fd_first([&](double u) { return f(u, y, z, alpha, gamma); }, x),
                                     fd_first([&](double u) { return f(x, u, z, alpha, gamma); }, y),
                                     fd_first([&](double u) { return f(x, y, u, alpha, gamma); }, z)};
    };
    auto gi = grad(mt_iota);
    auto gz = grad(mt_zeta);
    double m = 1.0 / ((1.0 + x) * (1.0 + x));
    double zeta = mt_zeta(x, y, z, alpha, gamma);
    double qi = gi[0] * gi[0] + gi[1] * gi[1] * m + gi[2] * gi[2];
    double qz = gz[0] * gz[0] + gz[1] * gz[1] * m + gz[2] * gz[2];
    return {qi - zeta * qz - 1.0, gi[0] * gz[0] + gi[1] * gz[1] * m + gi[2] * gz[2]};
}

/// Phi(theta, z) = |P - Q| + |P - Q0| for P = (1, theta, z).
inline double boundary_phase(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    return phi_tilde(1.0, theta - q.theta, q.r, z - q.z) + phi_tilde(1.0, theta, q0.s, z);
}

struct BoundaryGradient {
    double d_theta;
    double d_z;
};

inline BoundaryGradient boundary_phase_gradient(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    double s = q0.s;
    double p1 = phi_tilde(1.0, theta, s, z);
    double p2 = phi_tilde(1.0, theta - q.theta, q.r, z - q.z);
    return {s * std::sin(theta) / p1 + q.r * std::sin(theta - q.theta) / p2, z / p1 + (z - q.z) / p2};
}

struct HessianReport {
    double d2_zz = 0.0;
    double d2_tz = 0.0;
    double d2_tt = 0.0;
    double det = 0.0;
    double fd_residual = 0.0;
    bool at_critical = false;
};

enum class SignRegime { DifferentSigns, SameSignIlluminated, SameSignShadow };

inline const char* sign_regime_name(SignRegime r) {
    switch (r) {
        case SignRegime::DifferentSigns: return "different-signs";
        case SignRegime::SameSignIlluminated: return "same-sign-illuminated";
        case SignRegime::SameSignShadow: return "same-sign-shadow";
    }
    return "unknown";
}

/// Classify a critical point by the signs of (s cos theta - 1)/phi_1 and (r cos(theta - theta_Q) - 1)/phi_2.
inline SignRegime classify_sign_regime(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    double s = q0.s;
    double a = (s * std::cos(theta) - 1.0) / phi_tilde(1.0, theta, s, z);
    double b = (q.r * std::cos(theta - q.theta) - 1.0) / phi_tilde(1.0, theta - q.theta, q.r, z - q.z);
    if (std::fabs(a + b) < std::fabs(a - b)) return SignRegime::DifferentSigns;
    return (a + b) > 0.0 ? SignRegime::SameSignIlluminated : SignRegime::SameSignShadow;
}

/// Closed-form Hessian determinant in the different-signs case.
inline double hessian_det_different_signs(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    double s = q0.s;
    double p1 = phi_tilde(1.0, theta, s, z);
    double p2 = phi_tilde(1.0, theta - q.theta, q.r, z - q.z);
    double k = 1.0 / p1 + 1.0 / p2;
    double c = (s * std::cos(theta) - 1.0) / p1;
    return k * k * c * c;
}

inline constexpr double kCriticalGradTol = 1e-12;

namespace detail {

struct RawHessian {
    double zz, tz, tt;
};

inline RawHessian boundary_hessian_general(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    double s = q0.s, r = q.r, dz = z - q.z, dt = theta - q.theta;
    double p1 = phi_tilde(1.0, theta, s, z);
    double p2 = phi_tilde(1.0, dt, r, dz);
    double p13 = p1 * p1 * p1, p23 = p2 * p2 * p2;
    double s1 = s * std::sin(theta), s2 = r * std::sin(dt);
    return {1.0 / p1 - z * z / p13 + 1.0 / p2 - dz * dz / p23, -(z * s1 / p13 + dz * s2 / p23),
            s * std::cos(theta) / p1 - s1 * s1 / p13 + r * std::cos(dt) / p2 - s2 * s2 / p23};
}

inline RawHessian boundary_hessian_fd(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    auto f = [&](double t, double u) { return boundary_phase(t, u, q, q0); };
    double ht = 1e-3 * (1.0 + std::fabs(theta));
    double hz = 1e-3 * (1.0 + std::fabs(z));
    auto mixed = [&](double a, double b) {
        return (f(theta + a, z + b) - f(theta + a, z - b) - f(theta - a, z + b) + f(theta - a, z - b)) / (4.0 * a * b);
    };
    double tz = (4.0 * mixed(0.5 * ht, 0.5 * hz) - mixed(ht, hz)) / 3.0;
    return {fd_second([&](double u) { return f(theta, u); }, z, hz), tz,
            fd_second([&](double t) { return f(t, z); }, theta, ht)};
}

}  // namespace detail

/// Analytic Hessian of Phi at (theta, z). When the gradient vanishes there (to 1e-8),
/// the zz and theta-z entries use their critical-point forms.
inline HessianReport boundary_phase_hessian(double theta, double z, const CylPoint& q, const SourceConfig& q0) {
    check_exterior(q, "boundary_phase_hessian");
    check_source(q0, "boundary_phase_hessian");
    detail::RawHessian h = detail::boundary_hessian_general(theta, z, q, q0);
    BoundaryGradient g = boundary_phase_gradient(theta, z, q, q0);
    HessianReport out;
    out.at_critical = std::hypot(g.d_theta, g.d_z) < 1e-8;
    if (out.at_critical) {
        double s = q0.s;
        double p1 = phi_tilde(1.0, theta, s, z);
        double p2 = phi_tilde(1.0, theta - q.theta, q.r, z - q.z);
        double k = 1.0 / p1 + 1.0 / p2;
        h.zz = k * (1.0 - z * z / (p1 * p1));
        h.tz = -k * z * s * std::sin(theta) / (p1 * p1);
    }
    out.d2_zz = h.zz;
    out.d2_tz = h.tz;
    out.d2_tt = h.tt;
    out.det = h.zz * h.tt - h.tz * h.tz;
    detail::RawHessian f = detail::boundary_hessian_fd(theta, z, q, q0);
    double scale = std::max({std::fabs(h.zz), std::fabs(h.tz), std::fabs(h.tt), 1e-300});
    out.fd_residual = std::max({std::fabs(h.zz - f.zz), std::fabs(h.tz - f.tz), std::fabs(h.tt - f.tt)}) / scale;
    return out;
}

/// z_c(theta) = z_Q chord(s, theta) / (chord(s, theta) + chord(r, theta - theta_Q)).
inline double z_critical(double theta, const CylPoint& q, const SourceConfig& q0) {
    double a = chord(q0.s, theta), b = chord(q.r, theta - q.theta);
    return q.z * a / (a + b);
}

struct BoundaryCritical {
    double theta = 0.0;
    double z = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    SignRegime regime = SignRegime::SameSignIlluminated;
};

/// Damped Newton with backtracking on the gradient norm of Phi.
inline BoundaryCritical solve_boundary_critical(const CylPoint& q, const SourceConfig& q0, double theta0, double z0,
                                                double tol = kCriticalGradTol, int max_iter = 100) {
    check_exterior(q, "solve_boundary_critical");
    check_source(q0, "solve_boundary_critical");
    double t = theta0, z = z0;
    auto norm = [&](double a, double b) {
        BoundaryGradient g = boundary_phase_gradient(a, b, q, q0);
        return std::hypot(g.d_theta, g.d_z);
    };
    double gn = norm(t, z);
    int it = 0;
    for (; it < max_iter && gn > tol; ++it) {
        BoundaryGradient g = boundary_phase_gradient(t, z, q, q0);
        detail::RawHessian h = detail::boundary_hessian_general(t, z, q, q0);
        double det = h.tt * h.zz - h.tz * h.tz;
        if (det == 0.0) throw DegenerateCriticalPoint("solve_boundary_critical: singular Hessian");
        double dt = -(h.zz * g.d_theta - h.tz * g.d_z) / det;
        double dz = -(h.tt * g.d_z - h.tz * g.d_theta) / det;
        double lam = 1.0;
        double trial = norm(t + dt, z + dz);
        while (!(trial < gn) && lam > 1e-6) {
            lam *= 0.5;
            trial = norm(t + lam * dt, z + lam * dz);
        }
        if (!(trial < gn)) break;
        t += lam * dt;
        z += lam * dz;
        gn = trial;
    }
    if (!(gn <= tol)) throw ConvergenceError("solve_boundary_critical: gradient norm " + std::to_string(gn) +
                                             " above tolerance");
    t = std::remainder(t, 2.0 * std::numbers::pi);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    return {t, z, gn, it, classify_sign_regime(t, z, q, q0)};
}

/// All boundary critical points: scan theta along z = z_c(theta) for sign changes
/// of the reduced angular derivative, then polish each with Newton.
inline std::vector<BoundaryCritical> find_boundary_critical_points(const CylPoint& q, const SourceConfig& q0,
                                                                   int n_scan = 720) {
    check_exterior(q, "find_boundary_critical_points");
    check_source(q0, "find_boundary_critical_points");
    auto reduced = [&](double t) { return boundary_phase_gradient(t, z_critical(t, q, q0), q, q0).d_theta; };
    std::vector<BoundaryCritical> out;
    const double step = 2.0 * std::numbers::pi / n_scan;
    double f0 = reduced(0.0);
    for (int k = 0; k < n_scan; ++k) {
        double a = k * step, b = (k + 1) * step;
        double f1 = reduced(b);
        if ((f0 <= 0.0) != (f1 <= 0.0)) {
            double fa = f0, lo = a, hi = b;
            for (int i = 0; i < 20; ++i) {
                double m = 0.5 * (lo + hi), fm = reduced(m);
                if ((fm <= 0.0) == (fa <= 0.0)) {
                    lo = m;
                    fa = fm;
                } else {
                    hi = m;
                }
            }
            double t = 0.5 * (lo + hi);
            BoundaryCritical c = solve_boundary_critical(q, q0, t, z_critical(t, q, q0));
            bool dup = std::any_of(out.begin(), out.end(), [&](const BoundaryCritical& o) {
                return std::fabs(std::remainder(o.theta - c.theta, 2.0 * std::numbers::pi)) < 1e-9;
            });
            if (!dup) out.push_back(c);
        }
        f0 = f1;
    }
    return out;
}

enum class Smoothness { C2, C4, CInf };

namespace detail {

inline double smoothstep(double u, Smoothness k) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    switch (k) {
        case Smoothness::C2: return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
        case Smoothness::C4:
            return std::clamp(u * u * u * u * u * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + 70.0 * u)))), 0.0, 1.0);
        case Smoothness::CInf: {
            double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
            return a / (a + b);
        }
    }
    return 0.0;
}

}  // namespace detail

/// Monomial coefficients of the smoothstep in u on [0, 1]; empty for the non-polynomial C-infinity step.
inline std::vector<double> smoothstep_coefficients(Smoothness k) {
    switch (k) {
        case Smoothness::C2: return {0.0, 0.0, 0.0, 10.0, -15.0, 6.0};
        case Smoothness::C4: return {0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0};
        case Smoothness::CInf: return {};
    }
    return {};
}

/// Littlewood-Paley and frequency cutoffs built from one smoothstep.
/// psi0: 0 for beta <= 1/64, 1 for beta >= 1/36; psi(beta) = psi0(beta) - psi0(beta/4);
/// chi: support [1/2, 2], 1 on [3/4, 3/2]; chi0: support [-2, 2], 1 on [-3/2, 3/2];
/// chi_eps(x) = chi0((x - 1)/eps).
class CutoffSystem {
public:
    static constexpr double kPsi0Low = 1.0 / 64.0;
    static constexpr double kPsi0High = 1.0 / 36.0;

    CutoffSystem(double eps, Smoothness k) : eps_(eps), k_(k) {}

    double eps() const { return eps_; }
    Smoothness smoothness() const { return k_; }

    double psi0(double beta) const { return ramp(beta, kPsi0Low, kPsi0High); }
    double psi(double beta) const { return psi0(beta) - psi0(beta / 4.0); }
    double psi_j(int j, double beta) const { return psi(std::ldexp(beta, 2 * j)); }
    double chi(double x) const { return ramp(x, 0.5, 0.75) * (1.0 - ramp(x, 1.5, 2.0)); }
    double chi0(double x) const { return 1.0 - ramp(std::fabs(x), 1.5, 2.0); }
    double chi_eps(double x) const { return chi0((x - 1.0) / eps_); }

    /// Number of dyadic pieces that can be nonzero at beta.
    int dyadic_count(double beta) const {
        int j = 0;
        while (std::ldexp(beta, 2 * (j + 1)) < 4.0 * kPsi0High) ++j;
        return j;
    }

    double partition_sum(double beta) const {
        double sum = psi0(beta);
        int jmax = dyadic_count(beta);
        for (int j = 1; j <= jmax; ++j) sum += psi_j(j, beta);
        return sum;
    }

    /// smoothstep((x - a)/(b - a)), 0 left of a and 1 right of b.
    double ramp(double x, double a, double b) const { return detail::smoothstep((x - a) / (b - a), k_); }

private:
    double eps_;
    Smoothness k_;
};

inline CutoffSystem make_cutoffs(double eps = kDefaultGlancingEps, Smoothness k = Smoothness::C4) {
    if (!(eps > 0.0 && eps <= 0.1)) throw std::domain_error("make_cutoffs: eps must lie in (0, 0.1]");
    return CutoffSystem(eps, k);
}

/// Largest j >= 0 with 2^{-3j} s / h >= 1.
inline int j_split(double s, double h) {
    if (!(h > 0.0) || !(s > 0.0)) throw std::domain_error("j_split: need s, h > 0");
    if (h >= s) return 0;
    int j = static_cast<int>(std::floor(std::log2(s / h) / 3.0));
    while (std::ldexp(s / h, -3 * (j + 1)) >= 1.0) ++j;
    while (j > 0 && std::ldexp(s / h, -3 * j) < 1.0) --j;
    return j;
}

}  // namespace cylwave
