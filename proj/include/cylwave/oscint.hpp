#pragma once

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gauss.hpp"
#include "numdiff.hpp"
#include "scaled.hpp"

namespace cylwave {

/// Real phase with optional analytic derivatives; missing derivatives fall
/// back to Richardson-extrapolated central differences.
struct Phase1D {
    std::function<double(double)> eval;
    std::function<double(double)> d1;
    std::function<double(double)> d2;

    double operator()(double x) const { return eval(x); }
    double first(double x) const { return d1 ? d1(x) : fd_first(eval, x); }
    double second(double x) const { return d2 ? d2(x) : fd_second(eval, x); }
};

struct QuadResult {
    Complex value;
    double err_estimate = 0.0;
    long n_evals = 0;
};

using Amplitude = std::function<Complex(double)>;

inline constexpr long kDefaultEvalBudget = 4'000'000;
inline constexpr double kFilonSwitch = 8.0;
inline constexpr unsigned kFilonNodes = 20;

namespace detail {

struct Panel {
    double a, b;
    Complex value;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

inline Panel gk15_panel(const std::function<Complex(double)>& f, double a, double b) {
    const KronrodRule& r = gauss_kronrod15();
    double m = 0.5 * (a + b), half = 0.5 * (b - a);
    Complex k = 0.0, g = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i) {
        Complex v = f(m + half * r.x[i]);
        k += r.wk[i] * v;
        g += r.wg[i] * v;
    }
    return {a, b, half * k, half * std::abs(k - g)};
}

// Legendre coefficients of samples at Gauss nodes.
inline std::vector<Complex> legendre_coefficients(const Rule& r, const std::vector<Complex>& g) {
    size_t n = r.x.size();
    std::vector<Complex> c(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        double u = r.x[j];
        double p0 = 1.0, p1 = u;
        Complex wg = r.w[j] * g[j];
        c[0] += wg * p0;
        if (n > 1) c[1] += wg * p1;
        for (size_t k = 2; k < n; ++k) {
            double p2 = ((2.0 * k - 1.0) * u * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            c[k] += wg * p2;
            p0 = p1;
            p1 = p2;
        }
    }
    for (size_t k = 0; k < n; ++k) c[k] *= (2.0 * k + 1.0) / 2.0;
    return c;
}

// int_{-1}^{1} P_k(u) e^{i w u} du = 2 i^k j_k(w).
inline std::vector<Complex> legendre_fourier_moments(size_t n, double w) {
    std::vector<Complex> m(n);
    double aw = std::fabs(w);
    Complex ik = 1.0;
    for (size_t k = 0; k < n; ++k) {
        double j = aw == 0.0 ? (k == 0 ? 1.0 : 0.0) : boost::math::sph_bessel(static_cast<unsigned>(k), aw);
        if (w < 0.0 && (k % 2 == 1)) j = -j;
        m[k] = 2.0 * ik * j;
        ik *= Complex(0.0, 1.0);
    }
    return m;
}

struct OscPanelEvaluator {
    const Amplitude& amp;
    const Phase1D& phase;
    double lambda;
    long evals = 0;

    Panel operator()(double a, double b) {
        double m = 0.5 * (a + b), half = 0.5 * (b - a);
        double slope = phase.first(m);
        double osc = std::fabs(lambda * slope) * (b - a);
        if (osc <= kFilonSwitch) {
            evals += 15;
            return gk15_panel([&](double x) { return amp(x) * std::polar(1.0, lambda * phase(x)); }, a, b);
        }
        const Rule& r = gauss_legendre(kFilonNodes);
        double pm = phase(m);
        std::vector<Complex> g(r.x.size());
        for (size_t j = 0; j < r.x.size(); ++j) {
            double x = m + half * r.x[j];
            g[j] = amp(x) * std::polar(1.0, lambda * (phase(x) - pm - slope * (x - m)));
        }
        evals += static_cast<long>(r.x.size()) + 1;
        auto c = legendre_coefficients(r, g);
        double w = lambda * slope * half;
        auto mom = legendre_fourier_moments(c.size(), w);
        Complex s = 0.0;
        for (size_t k = 0; k < c.size(); ++k) s += c[k] * mom[k];
        double tail = 0.0;
        for (size_t k = c.size() - 3; k < c.size(); ++k) tail += std::abs(c[k]);
        double decay = std::min(1.0, 2.0 / std::fabs(w));
        Complex base = std::polar(1.0, lambda * pm);
        return {a, b, half * base * s, 2.0 * half * tail * decay};
    }
};

template <typename PanelFn>
QuadResult adaptive_bisection(PanelFn& eval, double a, double b, double tol, long max_evals, const long& evals,
                              const char* what) {
    std::priority_queue<Panel> heap;
    heap.push(eval(a, b));
    double min_width = 1e-13 * std::max(1.0, std::fabs(b - a));
    std::vector<Panel> done;
    double err = heap.top().err;
    while (err > tol && !heap.empty()) {
        if (evals > max_evals)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e above tolerance %.3e", err, tol);
            throw ConvergenceError(std::string(what) + ": error estimate " + buf + " after evaluation budget");
        }
        Panel p = heap.top();
        heap.pop();
        if (p.b - p.a < min_width) {
            done.push_back(p);
            continue;
        }
        double m = 0.5 * (p.a + p.b);
        Panel l = eval(p.a, m), r = eval(m, p.b);
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
    }
    while (!heap.empty()) {
        done.push_back(heap.top());
        heap.pop();
    }
    std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    QuadResult out;
    for (const auto& p : done) {
        out.value += p.value;
        out.err_estimate += p.err;
    }
    out.n_evals = evals;
    return out;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) quadrature of a complex integrand to an absolute tolerance.
inline QuadResult integrate_adaptive(const std::function<Complex(double)>& f, double a, double b, double tol,
                                     long max_evals = kDefaultEvalBudget) {
    struct Eval {
        const std::function<Complex(double)>& f;
        long evals = 0;
        detail::Panel operator()(double x0, double x1) {
            evals += 15;
            return detail::gk15_panel(f, x0, x1);
        }
    } eval{f};
    return detail::adaptive_bisection(eval, a, b, tol, max_evals, eval.evals, "integrate_adaptive");
}

/// int_a^b amp(x) e^{i lambda phase(x)} dx to absolute tolerance tol.
/// Panels with fewer than ~1.3 local oscillations use Gauss-Kronrod; others use a
/// Legendre-Filon rule that integrates the linearized phase exactly.
inline QuadResult integrate_osc(const Amplitude& amp, const Phase1D& phase, double lambda, double a, double b,
                                double tol, long max_evals = kDefaultEvalBudget) {
    if (!(lambda > 0.0)) throw std::domain_error("integrate_osc: lambda must be positive");
    if (!(b > a)) throw std::domain_error("integrate_osc: empty interval");
    if (!(tol > 0.0)) throw std::domain_error("integrate_osc: tolerance must be positive");
    detail::OscPanelEvaluator eval{amp, phase, lambda};
    return detail::adaptive_bisection(eval, a, b, tol, max_evals, eval.evals, "integrate_osc");
}

/// Degeneracy threshold on |phase''(x_c)| used by stationary_phase_1d.
inline double degeneracy_threshold(double lambda) { return 1e-8 * std::cbrt(lambda); }

/// Leading stationary-phase term at a nondegenerate critical point x_c.
inline Complex stationary_phase_1d(const Amplitude& amp, const Phase1D& phase, double x_c, double lambda) {
    double d2 = phase.second(x_c);
    if (!(std::fabs(d2) >= degeneracy_threshold(lambda)))
        throw DegenerateCriticalPoint("stationary_phase_1d: second derivative vanishes at the critical point");
    double sg = d2 > 0.0 ? 1.0 : -1.0;
    return amp(x_c) * std::sqrt(2.0 * std::numbers::pi / (lambda * std::fabs(d2))) *
           std::polar(1.0, lambda * phase(x_c) + sg * std::numbers::pi / 4.0);
}

}  // namespace cylwave
