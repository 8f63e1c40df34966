#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bessel.hpp"
#include "errors.hpp"
#include "gauss.hpp"
#include "green.hpp"
#include "oscint.hpp"
#include "phases.hpp"

namespace cylwave {

enum class WindowKind { High, Low };

inline const char* window_kind_name(WindowKind k) { return k == WindowKind::High ? "high" : "low"; }

/// Time-frequency window: chi(h tau) (high) or chi0(tau) (low, h unused).
struct FreqWindow {
    double h = 1.0 / 16.0;
    WindowKind kind = WindowKind::High;

    double scale() const { return kind == WindowKind::High ? h : 1.0; }
    double tau_min() const { return kind == WindowKind::High ? 0.5 / h : 0.0; }
    double tau_max() const { return kind == WindowKind::High ? 2.0 / h : 2.0; }
};

inline void check_window(const FreqWindow& w, const char* what) {
    if (w.kind == WindowKind::High && !(w.h > 0.0 && w.h < 1.0))
        throw std::domain_error(std::string(what) + ": h must lie in (0, 1)");
}

/// Window value at time frequency tau >= 0.
inline double window_value(const FreqWindow& w, const CutoffSystem& c, double tau) {
    double x = tau * w.scale();
    return w.kind == WindowKind::High ? c.chi(x) : c.chi0(x);
}

/// Mode of the time synthesis: Spectral is int e^{-i t tau} W (2 tau/pi) Im R dtau,
/// Outgoing is int e^{-i t tau} W (tau/(i pi)) R dtau.
enum class KernelMode { Spectral, Outgoing };

namespace detail {

// x f(x) on one piece of the window profile, as monomials in u = (x - a)/(b - a).
struct ProfileSegment {
    double a, b;
    std::vector<double> q;
};

inline std::vector<double> poly_times_linear(const std::vector<double>& p, double c0, double c1) {
    std::vector<double> out(p.size() + 1, 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
        out[i] += c0 * p[i];
        out[i + 1] += c1 * p[i];
    }
    return out;
}

inline double poly_eval(const std::vector<double>& p, double u) {
    double v = 0.0;
    for (size_t i = p.size(); i-- > 0;) v = v * u + p[i];
    return v;
}

// k-th derivative at u = 0 and u = 1.
inline std::pair<double, double> poly_derivative_ends(const std::vector<double>& p, size_t k) {
    double at0 = 0.0, at1 = 0.0;
    for (size_t m = k; m < p.size(); ++m) {
        double f = 1.0;
        for (size_t i = 0; i < k; ++i) f *= static_cast<double>(m - i);
        at1 += f * p[m];
        if (m == k) at0 = f * p[m];
    }
    return {at0, at1};
}

// Profile pieces for polynomial smoothsteps; empty for C-infinity.
inline std::vector<ProfileSegment> profile_segments(WindowKind kind, Smoothness sm) {
    std::vector<double> up = smoothstep_coefficients(sm);
    if (up.empty()) return {};
    std::vector<double> down(up.size());
    for (size_t i = 0; i < up.size(); ++i) down[i] = -up[i];
    down[0] += 1.0;
    auto seg = [](double a, double b, const std::vector<double>& f) {
        return ProfileSegment{a, b, poly_times_linear(f, a, b - a)};
    };
    std::vector<ProfileSegment> out;
    if (kind == WindowKind::High) {
        out.push_back(seg(0.5, 0.75, up));
        out.push_back(seg(0.75, 1.5, {1.0}));
    } else {
        out.push_back(seg(0.0, 1.5, {1.0}));
    }
    out.push_back(seg(1.5, 2.0, down));
    return out;
}

inline Complex segment_transform(const ProfileSegment& s, double sigma) {
    double len = s.b - s.a, w = sigma * len;
    Complex in = 0.0;
    if (std::fabs(w) <= 8.0) {
        const Rule& g = gauss_legendre(20);
        for (size_t i = 0; i < g.x.size(); ++i) {
            double u = 0.5 * (g.x[i] + 1.0);
            in += 0.5 * g.w[i] * poly_eval(s.q, u) * std::polar(1.0, w * u);
        }
    } else {
        const Complex iw(0.0, w), ew = std::polar(1.0, w);
        Complex pw = iw;
        double sign = 1.0;
        for (size_t k = 0; k < s.q.size(); ++k) {
            auto [d0, d1] = poly_derivative_ends(s.q, k);
            in += sign * (d1 * ew - d0) / pw;
            pw *= iw;
            sign = -sign;
        }
    }
    return len * std::polar(1.0, sigma * s.a) * in;
}

}  // namespace detail

/// X(sigma) = int f(x) x e^{i sigma x} dx for the window profile f (chi or chi0 on [0, 2]).
class ProfileTransform {
public:
    ProfileTransform(WindowKind kind, const CutoffSystem& c)
        : kind_(kind), cut_(c), seg_(detail::profile_segments(kind, c.smoothness())) {}

    Complex operator()(double sigma) const {
        Complex v = 0.0;
        if (!seg_.empty()) {
            for (const auto& s : seg_) v += detail::segment_transform(s, sigma);
            return v;
        }
        double a = kind_ == WindowKind::High ? 0.5 : 0.0, b = 2.0;
        int panels = std::max(4, static_cast<int>(std::ceil(std::fabs(sigma) * (b - a) / 4.0)));
        const Rule& g = gauss_legendre(20);
        double hw = 0.5 * (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            double m = a + (2 * p + 1) * hw;
            for (size_t i = 0; i < g.x.size(); ++i) {
                double x = m + hw * g.x[i];
                double f = kind_ == WindowKind::High ? cut_.chi(x) : cut_.chi0(x);
                v += hw * g.w[i] * f * x * std::polar(1.0, sigma * x);
            }
        }
        return v;
    }

private:
    WindowKind kind_;
    CutoffSystem cut_;
    std::vector<detail::ProfileSegment> seg_;
};

namespace detail {

inline double safe_distance(double d, double hs) { return std::max(d, 1e-6 * hs); }

inline Complex free_kernel_from_transform(const ProfileTransform& x, double d, double t, double hs, KernelMode mode) {
    d = safe_distance(d, hs);
    Complex pre = 1.0 / (Complex(0.0, 4.0) * std::numbers::pi * std::numbers::pi * d * hs * hs);
    Complex v = x((d - t) / hs);
    if (mode == KernelMode::Spectral) v -= x(-(d + t) / hs);
    return pre * v;
}

}  // namespace detail

/// Free-space time kernel in closed form:
/// (1/(4 i pi^2 d h^2)) [X((d - t)/h) - X(-(d + t)/h)], outgoing mode keeps only the first term.
inline Complex free_wave_kernel(const CylPoint& q, const SourceConfig& q0, double t, const FreqWindow& window,
                                const CutoffSystem& cutoffs = make_cutoffs(),
                                KernelMode mode = KernelMode::Spectral) {
    check_window(window, "free_wave_kernel");
    double d = dist_cyl(q, q0);
    if (!(d > 0.0)) throw std::domain_error("free_wave_kernel: coincident points");
    ProfileTransform x(window.kind, cutoffs);
    return detail::free_kernel_from_transform(x, d, t, window.scale(), mode);
}

/// Bounds of the receiver set served by one WaveKernelEngine.
struct KernelGridSpec {
    double r_min = 1.0;
    double r_max = 3.0;
    double z_max = 3.0;
    double t_max = 5.0;
};

/// Axial alias guard in units of the window scale; the profile transform has decayed to ~1e-7 there.
inline constexpr double kAliasPad = 200.0;

struct KernelColumn {
    double r, theta;
};

namespace detail {

struct NodeSet {
    std::vector<double> x, w;
};

// GL-10 panels of width <= pw on [0, top]; the first panel is graded geometrically toward 0.
inline NodeSet graded_nodes(double top, double pw) {
    NodeSet ns;
    if (!(top > 0.0)) return ns;
    const Rule& g = gauss_legendre(10);
    auto panel = [&](double a, double b) {
        double m = 0.5 * (a + b), hw = 0.5 * (b - a);
        for (size_t i = 0; i < g.x.size(); ++i) {
            ns.x.push_back(m + hw * g.x[i]);
            ns.w.push_back(hw * g.w[i]);
        }
    };
    int n = std::max(1, static_cast<int>(std::ceil(top / pw)));
    double width = top / n;
    const int levels = 14;
    panel(0.0, std::ldexp(width, -levels));
    for (int l = levels; l > 0; --l) panel(std::ldexp(width, -l), std::ldexp(width, -l + 1));
    for (int p = 1; p < n; ++p) panel(p * width, (p + 1) * width);
    return ns;
}

template <class F>
void parallel_for(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += threads) f(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Time-domain synthesis of the scattered resolvent on a family of receivers.
/// After the change of variables (tau, vartheta) -> (kappa, vartheta), tau = hypot(kappa, vartheta):
///   Spectral: K_scat = (4/pi) int_0^inf cos(z v) H(v) dv, H(v) = int kappa W(tau) e^{-i t tau} Im S(kappa) dkappa,
///   Outgoing: K_scat = (2/(i pi)) int cos(z v) [int kappa W e^{-i t tau} S dkappa + int_0^v a W(tau') e^{-i t tau'} S_ev(a) da],
/// with S the angular mode sum of the scattered part. S is tabulated once per column (r, theta);
/// each t is a real/complex contraction over kappa and each z a cosine sum over vartheta.
class WaveKernelEngine {
public:
    WaveKernelEngine(const SourceConfig& q0, const FreqWindow& window, const CutoffSystem& cutoffs, KernelMode mode,
                     const KernelGridSpec& grid, const TruncationPolicy& policy = {}, double refine = 1.0,
                     int threads = 1)
        : q0_(q0), win_(window), cut_(cutoffs), mode_(mode), grid_(grid), pol_(policy), threads_(threads) {
        check_source(q0, "WaveKernelEngine");
        check_window(window, "WaveKernelEngine");
        check_policy(policy, "WaveKernelEngine");
        if (!(grid.r_min >= 1.0 && grid.r_max >= grid.r_min && grid.z_max >= 0.0 && grid.t_max >= 0.0))
            throw std::domain_error("WaveKernelEngine: invalid receiver grid");
        if (mode == KernelMode::Outgoing && window.kind == WindowKind::Low)
            throw std::domain_error("WaveKernelEngine: outgoing synthesis needs the high window");
        double s = q0.s, tmax = win_.tau_max();
        double freq = grid.r_max + s + grid.t_max + 1.0;
        double ramp = win_.kind == WindowKind::High ? 0.25 / win_.h : 0.5;
        double pw = std::min(6.0 / freq, 0.5 * ramp) / refine;
        kappa_ = detail::graded_nodes(tmax, pw);
        double vmax = tmax;
        if (mode == KernelMode::Outgoing) {
            double gap = grid.r_min + s - 2.0;
            double amax = (std::log(1.0 / policy.tol) + 5.0) / gap;
            if (policy.vartheta_cut > 0.0) amax = std::min(amax, policy.vartheta_cut);
            decay_ = detail::graded_nodes(amax, pw);
            vmax = std::sqrt(tmax * tmax + amax * amax);
        }
        double pad = 2.0 + kAliasPad * win_.scale();
        double dv = 2.0 * std::numbers::pi / ((grid.z_max + grid.t_max + pad) * refine);
        int m = static_cast<int>(std::ceil(vmax / dv)) + 1;
        for (int i = 0; i <= m; ++i) {
            vt_.push_back(i * dv);
            vw_.push_back(i == 0 ? 0.5 * dv : dv);
        }
        mode_tol_ = 1e-2 * policy.tol;
        auto count = [&](double k) {
            return std::max(detail::scatter_mode_count(k, grid.r_min, s, mode_tol_ / std::max(1.0, k), policy.n_max),
                            detail::scatter_mode_count(k, grid.r_max, s, mode_tol_ / std::max(1.0, k), policy.n_max));
        };
        nodes_.resize(kappa_.x.size());
        detail::parallel_for(static_cast<int>(kappa_.x.size()), threads_, [&](int k) {
            nodes_[k] = std::make_unique<detail::ScatterNode>(s, kappa_.x[k], true, count(kappa_.x[k]));
        });
        ev_nodes_.resize(decay_.x.size());
        detail::parallel_for(static_cast<int>(decay_.x.size()), threads_, [&](int k) {
            ev_nodes_[k] = std::make_unique<detail::ScatterNode>(s, decay_.x[k], false, count(decay_.x[k]));
        });
        for (const auto& n : nodes_) n_used_ = std::max(n_used_, n->n_cap());
        for (const auto& n : ev_nodes_) n_used_ = std::max(n_used_, n->n_cap());
    }

    WaveKernelEngine(const WaveKernelEngine&) = delete;
    WaveKernelEngine& operator=(const WaveKernelEngine&) = delete;

    /// Mode sums S per kappa node (and S_ev per decay node) for each column.
    struct Table {
        std::vector<KernelColumn> cols;
        std::vector<double> re, im;  // [k * ncol + c]
        std::vector<double> ev;      // [k * ncol + c]
        double max_tail = 0.0;
    };

    Table tabulate(const std::vector<KernelColumn>& cols) const {
        for (const auto& c : cols)
            if (!(c.r >= grid_.r_min - 1e-12 && c.r <= grid_.r_max + 1e-12))
                throw std::domain_error("WaveKernelEngine::tabulate: column radius outside the grid");
        Table t;
        t.cols = cols;
        size_t nc = cols.size();
        std::map<double, std::vector<size_t>> by_r;
        for (size_t c = 0; c < nc; ++c) by_r[cols[c].r].push_back(c);
        t.re.assign(kappa_.x.size() * nc, 0.0);
        t.im.assign(kappa_.x.size() * nc, 0.0);
        t.ev.assign(decay_.x.size() * nc, 0.0);
        std::vector<double> tails(std::max<size_t>(1, nodes_.size() + ev_nodes_.size()), 0.0);
        auto fill = [&](const detail::ScatterNode& node, size_t k, bool prop, double& tail) {
            for (const auto& [r, idx] : by_r) {
                auto terms = node.radial_terms(r);
                tail = std::max(tail, detail::scatter_tail(terms, r, q0_.s) /
                                          std::max(1.0, std::abs(terms.front())));
                for (size_t c : idx) {
                    Complex v = fold(terms, cols[c].theta);
                    if (prop) {
                        t.re[k * nc + c] = v.real();
                        t.im[k * nc + c] = v.imag();
                    } else {
                        t.ev[k * nc + c] = v.real();
                    }
                }
            }
        };
        detail::parallel_for(static_cast<int>(nodes_.size()), threads_,
                             [&](int k) { fill(*nodes_[k], k, true, tails[k]); });
        detail::parallel_for(static_cast<int>(ev_nodes_.size()), threads_,
                             [&](int k) { fill(*ev_nodes_[k], k, false, tails[nodes_.size() + k]); });
        t.max_tail = *std::max_element(tails.begin(), tails.end());
        if (t.max_tail > 100.0 * mode_tol_)
            throw ConvergenceError("WaveKernelEngine: mode-sum tail exceeds tolerance (raise n_max)");
        return t;
    }

    /// H(vartheta_m) for every column at time t.
    struct Spectrum {
        double t;
        size_t ncol;
        std::vector<double> re, im;  // [m * ncol + c]
    };

    Spectrum contract(const Table& tab, double t) const {
        if (std::fabs(t) > grid_.t_max * (1.0 + 1e-12) + 1e-12)
            throw std::domain_error("WaveKernelEngine::contract: t exceeds the grid's t_max");
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const Weights& wt = weights(t);
        size_t nc = tab.cols.size(), nm = vt_.size(), nk = kappa_.x.size(), na = decay_.x.size();
        Spectrum sp{t, nc, std::vector<double>(nm * nc, 0.0), std::vector<double>(nm * nc, 0.0)};
        detail::parallel_for(static_cast<int>(nm), threads_, [&](int m) {
            double* hr = sp.re.data() + m * nc;
            double* hi = sp.im.data() + m * nc;
            for (size_t k = 0; k < nk; ++k) {
                Complex w = wt.prop[m * nk + k];
                if (w == 0.0) continue;
                const double* sr = tab.re.data() + k * nc;
                const double* si = tab.im.data() + k * nc;
                if (mode_ == KernelMode::Spectral) {
                    for (size_t c = 0; c < nc; ++c) {
                        hr[c] += w.real() * si[c];
                        hi[c] += w.imag() * si[c];
                    }
                } else {
                    for (size_t c = 0; c < nc; ++c) {
                        hr[c] += w.real() * sr[c] - w.imag() * si[c];
                        hi[c] += w.real() * si[c] + w.imag() * sr[c];
                    }
                }
            }
            for (size_t k = 0; k < na; ++k) {
                Complex w = wt.ev[m * na + k];
                if (w == 0.0) continue;
                const double* se = tab.ev.data() + k * nc;
                for (size_t c = 0; c < nc; ++c) {
                    hr[c] += w.real() * se[c];
                    hi[c] += w.imag() * se[c];
                }
            }
        });
        return sp;
    }

    /// Scattered kernel at column c and height z.
    Complex scattered(const Spectrum& sp, size_t c, double z) const {
        double sr = 0.0, si = 0.0;
        for (size_t m = 0; m < vt_.size(); ++m) {
            double w = vw_[m] * std::cos(z * vt_[m]);
            sr += w * sp.re[m * sp.ncol + c];
            si += w * sp.im[m * sp.ncol + c];
        }
        Complex h(sr, si);
        if (mode_ == KernelMode::Spectral) return (4.0 / std::numbers::pi) * h;
        return h * Complex(0.0, -2.0 / std::numbers::pi);
    }

    /// Free plus scattered kernel.
    Complex kernel(const Spectrum& sp, size_t c, const KernelColumn& col, double z) const {
        CylPoint q{col.r, col.theta, z};
        return free_part(q, sp.t) + scattered(sp, c, z);
    }

    Complex free_part(const CylPoint& q, double t) const {
        ProfileTransform x(win_.kind, cut_);
        return detail::free_kernel_from_transform(x, dist_cyl(q, q0_), t, win_.scale(), mode_);
    }

    const FreqWindow& window() const { return win_; }
    const KernelGridSpec& grid() const { return grid_; }
    KernelMode mode() const { return mode_; }
    int n_used() const { return n_used_; }
    size_t kappa_nodes() const { return kappa_.x.size(); }
    size_t vartheta_nodes() const { return vt_.size(); }

private:
    struct Weights {
        double t = std::numeric_limits<double>::quiet_NaN();
        std::vector<Complex> prop, ev;  // [m * nk + k], [m * na + k]
    };

    // kappa W(tau) e^{-i t tau} dkappa per (vartheta, kappa) node, cached for the last t.
    const Weights& weights(double t) const {
        if (cache_.t == t) return cache_;
        size_t nm = vt_.size(), nk = kappa_.x.size(), na = decay_.x.size();
        cache_.prop.assign(nm * nk, 0.0);
        cache_.ev.assign(nm * na, 0.0);
        for (size_t m = 0; m < nm; ++m) {
            double v = vt_[m];
            for (size_t k = 0; k < nk; ++k) {
                double kap = kappa_.x[k], tau = std::hypot(kap, v);
                double f = window_value(win_, cut_, tau);
                if (f != 0.0) cache_.prop[m * nk + k] = kappa_.w[k] * kap * f * std::polar(1.0, -t * tau);
            }
            for (size_t k = 0; k < na; ++k) {
                double a = decay_.x[k];
                if (!(a < v)) break;
                double tau = std::sqrt((v - a) * (v + a));
                double f = window_value(win_, cut_, tau);
                if (f != 0.0) cache_.ev[m * na + k] = decay_.w[k] * a * f * std::polar(1.0, -t * tau);
            }
        }
        cache_.t = t;
        return cache_;
    }

    Complex fold(const std::vector<Complex>& terms, double theta) const {
        // cos(n theta) by the Chebyshev recurrence.
        double c1 = std::cos(theta), cm = 1.0, cn = c1;
        Complex sum = terms[0];
        for (size_t n = 1; n < terms.size(); ++n) {
            sum += 2.0 * cn * terms[n];
            double nx = 2.0 * c1 * cn - cm;
            cm = cn;
            cn = nx;
        }
        return sum;
    }

    SourceConfig q0_;
    FreqWindow win_;
    CutoffSystem cut_;
    KernelMode mode_;
    KernelGridSpec grid_;
    TruncationPolicy pol_;
    int threads_;
    double mode_tol_ = 0.0;
    int n_used_ = 0;
    detail::NodeSet kappa_, decay_;
    std::vector<double> vt_, vw_;
    std::vector<std::unique_ptr<detail::ScatterNode>> nodes_, ev_nodes_;
    mutable Weights cache_;
    mutable std::mutex cache_mutex_;
};

/// Band-limited wave kernel at one receiver: spectral mode gives
/// int_0^inf e^{-i t tau} W(tau) (2 tau/pi) Im R(Q, Q0, tau) dtau, outgoing mode
/// int_0^inf e^{-i t tau} W(tau) (tau/(i pi)) R dtau. quad_err compares two grid densities.
inline KernelSample wave_kernel(const CylPoint& q, const SourceConfig& q0, double t, const FreqWindow& window,
                                const TruncationPolicy& policy = {}, const CutoffSystem& cutoffs = make_cutoffs(),
                                KernelMode mode = KernelMode::Spectral) {
    check_exterior(q, "wave_kernel");
    if (!(t > 0.0)) throw std::domain_error("wave_kernel: t must be positive");
    KernelGridSpec g{q.r, q.r, std::fabs(q.z), t};
    auto run = [&](double refine) {
        WaveKernelEngine e(q0, window, cutoffs, mode, g, policy, refine);
        auto tab = e.tabulate({{q.r, q.theta}});
        auto sp = e.contract(tab, t);
        return std::make_pair(e.kernel(sp, 0, {q.r, q.theta}, q.z), e.n_used());
    };
    auto [v1, n1] = run(1.0);
    auto [v2, n2] = run(1.5);
    return {v2, std::max(n1, n2), std::abs(v2 - v1)};
}

/// Reference evaluation by direct tau quadrature of the resolvent (tau = x/h, lambda = t/h).
inline KernelSample wave_kernel_direct(const CylPoint& q, const SourceConfig& q0, double t, const FreqWindow& window,
                                       const TruncationPolicy& policy = {},
                                       const CutoffSystem& cutoffs = make_cutoffs(),
                                       KernelMode mode = KernelMode::Spectral, double quad_tol = 1e-8) {
    check_exterior(q, "wave_kernel_direct");
    check_window(window, "wave_kernel_direct");
    double hs = window.scale();
    int n_used = 0;
    auto amp = [&](double x) -> Complex {
        double tau = x / hs;
        double f = window_value(window, cutoffs, tau);
        if (f == 0.0 || tau <= 0.0) return 0.0;
        KernelSample r = resolvent(q, q0, tau, policy);
        n_used = std::max(n_used, r.n_used);
        if (mode == KernelMode::Spectral) return f * (2.0 * tau / std::numbers::pi) * r.value.imag() / hs;
        return f * tau / Complex(0.0, std::numbers::pi) * r.value / hs;
    };
    Phase1D ph{[](double x) { return -x; }, [](double) { return -1.0; }, [](double) { return 0.0; }};
    double lo = window.kind == WindowKind::High ? 0.5 : 1e-9;
    QuadResult r = integrate_osc(amp, ph, std::max(t / hs, 1e-6), lo, 2.0, quad_tol);
    return {r.value, n_used, r.err_estimate};
}

/// Dyadic piece w_j of the incoming wave w_in = (i tau/4pi) e^{-i tau d}/d: the axial Fourier multiplier
/// psi_j(1 - gamma^2) applied to w_in. The transverse (alpha, y) integrals reproduce the identity and the
/// z-transform of w_in is -i pi H0^(2)(tau rho sqrt(1 - gamma^2)) on |gamma| < 1, leaving
///   w_j = (tau^2/8pi) int psi_j(1 - gamma^2) e^{i tau z gamma} H0^(2)(tau rho sqrt(1 - gamma^2)) dgamma.
inline KernelSample freq_localized_incoming(const CylPoint& q, const SourceConfig& q0, double tau, int j,
                                            const CutoffSystem& cutoffs = make_cutoffs(), double tol = 1e-10) {
    check_exterior(q, "freq_localized_incoming");
    check_source(q0, "freq_localized_incoming");
    if (!(tau > 0.0)) throw std::domain_error("freq_localized_incoming: tau must be positive");
    if (j < 0) throw std::domain_error("freq_localized_incoming: j must be >= 0");
    double rho = phi_tilde(q.r, q.theta, q0.s, 0.0), z = q.z;
    if (!(rho > 0.0)) throw std::domain_error("freq_localized_incoming: receiver on the source generator");
    double c_lo, c_hi;
    if (j == 0) {
        c_lo = std::sqrt(CutoffSystem::kPsi0Low);
        c_hi = 1.0;
    } else {
        c_lo = std::ldexp(std::sqrt(CutoffSystem::kPsi0Low), -j);
        c_hi = std::min(1.0, std::ldexp(std::sqrt(4.0 * CutoffSystem::kPsi0High), -j));
    }
    double phi_lo = std::acos(c_hi), phi_hi = std::acos(c_lo);
    const double pre = tau * tau / (8.0 * std::numbers::pi);
    auto amp = [&](double phi) -> Complex {
        double c = std::cos(phi), beta = c * c;
        double w = j == 0 ? cutoffs.psi0(beta) : cutoffs.psi_j(j, beta);
        if (w == 0.0) return 0.0;
        double x = tau * rho * c;
        Complex h2 = std::conj(hankel_H1(0, x)) * std::polar(1.0, x);
        return pre * c * w * h2;
    };
    Phase1D ph{[&](double p) { return z * std::sin(p) - rho * std::cos(p); },
               [&](double p) { return z * std::cos(p) + rho * std::sin(p); },
               [&](double p) { return -z * std::sin(p) + rho * std::cos(p); }};
    QuadResult a = integrate_osc(amp, ph, tau, phi_lo, phi_hi, 0.5 * tol);
    QuadResult b = integrate_osc(amp, ph, tau, -phi_hi, -phi_lo, 0.5 * tol);
    return {a.value + b.value, 0, a.err_estimate + b.err_estimate};
}

/// Axial frequencies |gamma| > 1 of w_in, which no dyadic piece covers:
/// (i tau^2/(2 pi^2)) Re int_0^inf e^{i tau z cosh u} K0(tau rho sinh u) sinh u du.
inline KernelSample incoming_evanescent_remainder(const CylPoint& q, const SourceConfig& q0, double tau,
                                                  double tol = 1e-10) {
    check_exterior(q, "incoming_evanescent_remainder");
    check_source(q0, "incoming_evanescent_remainder");
    if (!(tau > 0.0)) throw std::domain_error("incoming_evanescent_remainder: tau must be positive");
    double rho = phi_tilde(q.r, q.theta, q0.s, 0.0), z = std::fabs(q.z);
    if (!(rho > 0.0)) throw std::domain_error("incoming_evanescent_remainder: receiver on the source generator");
    double umax = std::asinh((std::log(1.0 / tol) + 10.0) / (tau * rho));
    auto amp = [&](double u) -> Complex {
        double x = tau * rho * std::sinh(u);
        return bessel_ik_sequence(x, 0).k[0].value() * std::sinh(u);
    };
    QuadResult r = z > 0.0
                       ? integrate_osc(amp, Phase1D{[&](double u) { return z * std::cosh(u); },
                                                    [&](double u) { return z * std::sinh(u); },
                                                    [&](double u) { return z * std::cosh(u); }},
                                       tau, 0.0, umax, 1e-3 * tol)
                       : integrate_adaptive(amp, 0.0, umax, 1e-3 * tol);
    double pre = tau * tau / (2.0 * std::numbers::pi * std::numbers::pi);
    return {Complex(0.0, pre * r.value.real()), 0, pre * r.err_estimate};
}

/// (i tau / 4pi) e^{-i tau d}/d.
inline Complex incoming_wave(const CylPoint& q, const SourceConfig& q0, double tau) {
    double d = dist_cyl(q, q0);
    if (!(d > 0.0)) throw std::domain_error("incoming_wave: coincident points");
    return Complex(0.0, tau / (4.0 * std::numbers::pi)) * std::polar(1.0, -tau * d) / d;
}

/// Boundary discretization for the single-layer synthesis.
struct BoundaryPolicy {
    double spacing = 0.5;     // boundary grid step in units of h
    double margin = 60.0;     // retarded-support margin in units of h
    double period_pad = 2.0;  // extra time span guarding the tau-trapezoid against aliasing
};

/// One receiver/time pair for the single-layer check.
struct KirchhoffProbe {
    CylPoint q;
    double t;
};

struct KirchhoffResult {
    Complex u_free;   // outgoing free kernel
    Complex u_sharp;  // single-layer term
    Complex u_ref;    // outgoing wave kernel from the mode sums
    double rel_err;   // |u_free - u_sharp - u_ref| / |u_ref|
};

namespace detail {

// Normal derivative d_r R(P, Q0, tau) on the unit circle grid (theta_i in [0, pi], z_k >= 0):
//   d_r R = 2 int_0^inf cos(z v) B(kappa, theta) dv, B = (1/4pi^2) sum eps_n cos(n theta) H_n(s kappa)/H_n(kappa),
// evanescent band with K_n(s a)/K_n(a).
inline std::vector<Complex> boundary_normal_trace(double s, double tau, const std::vector<double>& thetas,
                                                  const std::vector<double>& zs, double z_extent,
                                                  const TruncationPolicy& pol) {
    const Rule& g = gauss_legendre(10);
    double mode_tol = 1e-2 * pol.tol;
    struct Node {
        double v, w, k;
        bool prop;
    };
    std::vector<Node> nodes;
    double osc = z_extent + s + 1.0;
    // Propagating band v = tau sin(phi).
    {
        int n = std::max(2, static_cast<int>(std::ceil(tau * osc * (std::numbers::pi / 2.0) / 6.0)));
        double width = (std::numbers::pi / 2.0) / n;
        std::vector<std::pair<double, double>> panels;
        for (int p = 0; p < n - 1; ++p) panels.emplace_back(p * width, (p + 1) * width);
        double top = (n - 1) * width, end = std::numbers::pi / 2.0;
        for (int l = 1; l <= 12; ++l) {
            double mid = end - std::ldexp(end - top, -l);
            panels.emplace_back(top, mid);
            top = mid;
        }
        panels.emplace_back(top, end);
        for (auto [a, b] : panels) {
            double m = 0.5 * (a + b), hw = 0.5 * (b - a);
            for (size_t i = 0; i < g.x.size(); ++i) {
                double phi = m + hw * g.x[i];
                nodes.push_back({tau * std::sin(phi), hw * g.w[i] * tau * std::cos(phi), tau * std::cos(phi), true});
            }
        }
    }
    // Evanescent band v = tau cosh(u), a = tau sinh(u).
    {
        double amax = (std::log(1.0 / pol.tol) + 5.0) / (s - 1.0);
        if (pol.vartheta_cut > 0.0) amax = std::min(amax, pol.vartheta_cut);
        double umax = std::asinh(amax / tau);
        double rate = std::max(1.0, amax * (z_extent + s));
        int n = std::max(2, static_cast<int>(std::ceil(umax * rate / 6.0)));
        double width = umax / n;
        std::vector<std::pair<double, double>> panels;
        double lo = width;
        for (int l = 12; l >= 1; --l) panels.emplace_back(std::ldexp(width, -l), std::ldexp(width, -l + 1));
        panels.emplace_back(0.0, std::ldexp(width, -12));
        for (int p = 1; p < n; ++p) panels.emplace_back(p * width, (p + 1) * width);
        (void)lo;
        for (auto [a, b] : panels) {
            double m = 0.5 * (a + b), hw = 0.5 * (b - a);
            for (size_t i = 0; i < g.x.size(); ++i) {
                double u = m + hw * g.x[i];
                double av = tau * std::sinh(u);
                nodes.push_back({tau * std::cosh(u), hw * g.w[i] * av, av, false});
            }
        }
    }
    size_t nt = thetas.size(), nz = zs.size();
    std::vector<Complex> bhat(nodes.size() * nt);
    double scale = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
    for (size_t m = 0; m < nodes.size(); ++m) {
        const Node& nd = nodes[m];
        int n = scatter_mode_count(nd.k, 1.0, s, mode_tol / std::max(1.0, nd.k), pol.n_max);
        std::vector<Complex> c(n + 1);
        if (nd.prop) {
            auto b = bessel_jy_sequence(nd.k, n);
            auto bs = bessel_jy_sequence(s * nd.k, n);
            for (int i = 0; i <= n; ++i) c[i] = scale * (hankel_seq(bs, i) / hankel_seq(b, i)).value();
        } else {
            auto b = bessel_ik_sequence(nd.k, n);
            auto bs = bessel_ik_sequence(s * nd.k, n);
            for (int i = 0; i <= n; ++i) c[i] = scale * (bs.k[i] / b.k[i]).value();
        }
        if (std::abs(c.back()) * 2.0 / (s - 1.0) > 100.0 * mode_tol * std::max(1.0, std::abs(c[0])))
            throw ConvergenceError("boundary_normal_trace: mode-sum tail exceeds tolerance (raise n_max)");
        for (size_t i = 0; i < nt; ++i) {
            double c1 = std::cos(thetas[i]), cm = 1.0, cn = c1;
            Complex sum = c[0];
            for (int q = 1; q <= n; ++q) {
                sum += 2.0 * cn * c[q];
                double nx = 2.0 * c1 * cn - cm;
                cm = cn;
                cn = nx;
            }
            bhat[m * nt + i] = sum;
        }
    }
    std::vector<Complex> out(nz * nt, 0.0);
    for (size_t m = 0; m < nodes.size(); ++m) {
        for (size_t k = 0; k < nz; ++k) {
            double w = 2.0 * nodes[m].w * std::cos(zs[k] * nodes[m].v);
            const Complex* b = bhat.data() + m * nt;
            Complex* o = out.data() + k * nt;
            for (size_t i = 0; i < nt; ++i) o[i] += w * b[i];
        }
    }
    return out;
}

}  // namespace detail

/// Single-layer terms u#(Q, t) = int dtau e^{-i t tau} W(tau) (tau/(i pi)) int_{boundary} G0(Q, P, tau) d_r R(P, Q0, tau) dsigma(P)
/// for a batch of probes, with G0 = e^{i tau |Q-P|}/(4 pi |Q-P|). Compared against the outgoing wave kernel:
/// u_ref = u_free - u#.
inline std::vector<KirchhoffResult> kirchhoff_check(const std::vector<KirchhoffProbe>& probes, const SourceConfig& q0,
                                                    const FreqWindow& window, const TruncationPolicy& policy = {},
                                                    const CutoffSystem& cutoffs = make_cutoffs(),
                                                    const BoundaryPolicy& bp = {}, int threads = 1) {
    check_source(q0, "kirchhoff_check");
    check_window(window, "kirchhoff_check");
    if (window.kind != WindowKind::High) throw std::domain_error("kirchhoff_check: needs the high window");
    if (probes.empty()) throw std::domain_error("kirchhoff_check: no probes");
    double h = window.h, s = q0.s;
    double zb = 0.0, tmax = 0.0, rmax = 1.0, rmin = 1e300, zq = 0.0;
    for (const auto& p : probes) {
        check_exterior(p.q, "kirchhoff_check");
        if (!(p.q.r > 1.0)) throw std::domain_error("kirchhoff_check: receiver must be strictly exterior");
        if (!(p.t > 0.0)) throw std::domain_error("kirchhoff_check: t must be positive");
        zb = std::max(zb, 0.5 * (std::fabs(p.q.z) + p.t + bp.margin * h));
        tmax = std::max(tmax, p.t);
        rmax = std::max(rmax, p.q.r);
        rmin = std::min(rmin, p.q.r);
        zq = std::max(zq, std::fabs(p.q.z));
    }
    double step = bp.spacing * h;
    int nth = 2 * static_cast<int>(std::ceil(std::numbers::pi / step));
    int nzh = static_cast<int>(std::ceil(zb / step));
    double dth = 2.0 * std::numbers::pi / nth, dz = zb / nzh;
    std::vector<double> th_half, z_half;
    for (int i = 0; i <= nth / 2; ++i) th_half.push_back(i * dth);
    for (int k = 0; k <= nzh; ++k) z_half.push_back(k * dz);
    // Longest boundary path inside the truncated grid sets the tau spacing.
    double longest = (zq + zb) + zb + rmax + 1.0 + s + 1.0;
    double dtau = 2.0 * std::numbers::pi / (2.0 * (longest + tmax) + bp.period_pad);
    double t0 = window.tau_min(), t1 = window.tau_max();
    int ntau = static_cast<int>(std::ceil((t1 - t0) / dtau));
    dtau = (t1 - t0) / ntau;
    size_t np = probes.size();
    // Distances from each probe to the full boundary grid; theta index over [0, 2 pi), z over [-zb, zb].
    int nzf = 2 * nzh + 1;
    std::vector<std::vector<double>> dist(np, std::vector<double>(static_cast<size_t>(nth) * nzf));
    for (size_t p = 0; p < np; ++p)
        for (int i = 0; i < nth; ++i)
            for (int k = 0; k < nzf; ++k) {
                double th = i * dth, z = (k - nzh) * dz;
                dist[p][static_cast<size_t>(i) * nzf + k] = dist_cyl(probes[p].q, CylPoint{1.0, th, z});
            }
    double wz = dz, wth = dth;
    std::vector<Complex> usharp(np, 0.0);
    std::vector<std::vector<Complex>> contrib(ntau + 1, std::vector<Complex>(np, 0.0));
    detail::parallel_for(ntau + 1, threads, [&](int it) {
        double tau = t0 + it * dtau;
        double f = window_value(window, cutoffs, tau);
        if (f == 0.0) return;
        double wt = (it == 0 || it == ntau) ? 0.5 * dtau : dtau;
        auto b = detail::boundary_normal_trace(s, tau, th_half, z_half, zb + zq + rmax, policy);
        size_t nt = th_half.size();
        for (size_t p = 0; p < np; ++p) {
            Complex acc = 0.0;
            for (int i = 0; i < nth; ++i) {
                int ii = i <= nth / 2 ? i : nth - i;
                for (int k = 0; k < nzf; ++k) {
                    int kk = std::abs(k - nzh);
                    double d = dist[p][static_cast<size_t>(i) * nzf + k];
                    acc += std::polar(1.0 / (4.0 * std::numbers::pi * d), tau * d) * b[kk * nt + ii];
                }
            }
            acc *= wz * wth;
            contrib[it][p] = wt * f * tau / Complex(0.0, std::numbers::pi) * acc *
                             std::polar(1.0, -probes[p].t * tau);
        }
    });
    for (int it = 0; it <= ntau; ++it)
        for (size_t p = 0; p < np; ++p) usharp[p] += contrib[it][p];
    // Reference: outgoing kernel from the mode sums, one column per probe.
    std::vector<KirchhoffResult> out(np);
    for (size_t p = 0; p < np; ++p) {
        const auto& q = probes[p].q;
        KernelGridSpec g{q.r, q.r, std::fabs(q.z), probes[p].t};
        WaveKernelEngine e(q0, window, cutoffs, KernelMode::Outgoing, g, policy, 1.0, threads);
        auto tab = e.tabulate({{q.r, q.theta}});
        auto sp = e.contract(tab, probes[p].t);
        Complex ref = e.kernel(sp, 0, {q.r, q.theta}, q.z);
        Complex uf = free_wave_kernel(q, q0, probes[p].t, window, cutoffs, KernelMode::Outgoing);
        out[p] = {uf, usharp[p], ref, std::abs(uf - usharp[p] - ref) / std::abs(ref)};
    }
    return out;
}

/// Single-layer term u#(Q, t) for one receiver.
inline Complex kirchhoff_single_layer(const CylPoint& q, const SourceConfig& q0, double t, const FreqWindow& window,
                                      const TruncationPolicy& policy = {},
                                      const CutoffSystem& cutoffs = make_cutoffs(), const BoundaryPolicy& bp = {}) {
    return kirchhoff_check({{q, t}}, q0, window, policy, cutoffs, bp).front().u_sharp;
}

}  // namespace cylwave
