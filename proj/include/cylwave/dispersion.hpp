#pragma once

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "propagator.hpp"

namespace cylwave {

/// Receiver search: coarse (r, theta, z) grid, points on the shells |Q - Q0| = t + k h,
/// then Nelder-Mead refinement of |kernel| from the best candidates.
struct SearchPolicy {
    double r_max = 3.0;
    double z_max = 3.0;
    int n_r = 24;
    int n_theta = 16;
    int n_z = 16;
    int n_refine = 5;
    int refine_iters = 30;
    std::vector<double> shell_offsets{-1.0, -0.5, 0.0, 0.5, 1.0};
    double jitter = 0.0;  // fraction of the grid spacing
    unsigned long long seed = 0;
};

struct DispersionRow {
    double h, t, sup_abs, bound, ratio;
    CylPoint argmax;
    long n_points;
};

struct DispersionReport {
    WindowKind kind;
    double s;
    bool free_only;
    std::vector<DispersionRow> rows;
};

inline double dispersion_bound(WindowKind kind, double h, double t) {
    return kind == WindowKind::High ? std::pow(h, -3.0) * std::min(1.0, h / t) : 1.0 / (1.0 + t);
}

inline void check_search(const SearchPolicy& sp, const char* what) {
    if (!(sp.r_max > 1.0) || !(sp.z_max >= 0.0) || sp.n_r < 1 || sp.n_theta < 2 || sp.n_z < 1 || sp.n_refine < 0 ||
        sp.refine_iters < 0 || !(sp.jitter >= 0.0 && sp.jitter < 0.5))
        throw std::domain_error(std::string(what) + ": invalid search policy");
}

namespace detail {

struct Candidate {
    double value;
    CylPoint q;
};

inline CylPoint clamp_point(const CylPoint& q, const SearchPolicy& sp) {
    return {std::clamp(q.r, 1.0, sp.r_max), std::clamp(q.theta, 0.0, std::numbers::pi), std::clamp(q.z, 0.0, sp.z_max)};
}

template <class F>
Candidate nelder_mead(F& eval, const Candidate& start, const double step[3], int iters, const SearchPolicy& sp) {
    struct Ctx {
        F* f;
        const SearchPolicy* sp;
        Candidate best;
    } ctx{&eval, &sp, start};
    gsl_multimin_function fn;
    fn.n = 3;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* x, void* p) -> double {
        auto* c = static_cast<Ctx*>(p);
        CylPoint q = clamp_point({gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2)}, *c->sp);
        double v = (*c->f)(q);
        if (v > c->best.value) c->best = {v, q};
        return -v;
    };
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* ss = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, start.q.r);
    gsl_vector_set(x, 1, start.q.theta);
    gsl_vector_set(x, 2, start.q.z);
    for (int i = 0; i < 3; ++i) gsl_vector_set(ss, i, step[i]);
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(m, &fn, x, ss);
    for (int i = 0; i < iters; ++i) {
        if (gsl_multimin_fminimizer_iterate(m)) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-6) == GSL_SUCCESS) break;
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(x);
    gsl_vector_free(ss);
    return ctx.best;
}

}  // namespace detail

/// sup over the search set of |wave kernel| for every (h, t), against h^{-3} min(1, h/t)
/// (high window) or 1/(1 + t) (low window, grid_h ignored). free_only scans the free kernel.
inline DispersionReport dispersion_scan(const std::vector<double>& grid_h, const std::vector<double>& grid_t,
                                        WindowKind kind, const SearchPolicy& search = {},
                                        const TruncationPolicy& policy = {}, const SourceConfig& q0 = {},
                                        const CutoffSystem& cutoffs = make_cutoffs(), bool free_only = false,
                                        int threads = 1) {
    check_search(search, "dispersion_scan");
    check_source(q0, "dispersion_scan");
    check_policy(policy, "dispersion_scan");
    if (grid_t.empty() || (kind == WindowKind::High && grid_h.empty()))
        throw std::domain_error("dispersion_scan: empty grid");
    for (double t : grid_t)
        if (!(t > 0.0)) throw std::domain_error("dispersion_scan: t must be positive");
    std::vector<double> hs = kind == WindowKind::High ? grid_h : std::vector<double>{1.0};
    std::sort(hs.begin(), hs.end(), std::greater<>());
    std::vector<double> ts = grid_t;
    std::sort(ts.begin(), ts.end());
    double t_max = ts.back();

    // Coarse columns and heights.
    std::mt19937_64 rng(search.seed);
    std::uniform_real_distribution<double> jit(-search.jitter, search.jitter);
    double dr = (search.r_max - 1.0) / search.n_r, dth = std::numbers::pi / (search.n_theta - 1);
    double dzc = search.n_z > 1 ? search.z_max / (search.n_z - 1) : search.z_max;
    std::vector<KernelColumn> cols;
    for (int i = 0; i < search.n_r; ++i)
        for (int j = 0; j < search.n_theta; ++j) {
            double r = 1.0 + (i + 0.5) * dr, th = j * dth;
            if (search.jitter > 0.0) {
                r = std::clamp(r + jit(rng) * dr, 1.0, search.r_max);
                th = std::clamp(th + jit(rng) * dth, 0.0, std::numbers::pi);
            }
            cols.push_back({r, th});
        }
    std::vector<double> zc;
    for (int k = 0; k < search.n_z; ++k) zc.push_back(k * dzc);

    DispersionReport rep{kind, q0.s, free_only, {}};
    for (double h : hs) {
        FreqWindow win{h, kind};
        check_window(win, "dispersion_scan");
        std::unique_ptr<WaveKernelEngine> eng;
        WaveKernelEngine::Table tab;
        KernelGridSpec g{1.0, search.r_max, search.z_max, t_max};
        if (!free_only) {
            eng = std::make_unique<WaveKernelEngine>(q0, win, cutoffs, KernelMode::Spectral, g, policy, 1.0, threads);
            tab = eng->tabulate(cols);
        }
        ProfileTransform xf(kind, cutoffs);
        double hsc = win.scale();
        for (double t : ts) {
            WaveKernelEngine::Spectrum sp;
            if (eng) sp = eng->contract(tab, t);
            auto free_val = [&](const CylPoint& q) {
                return detail::free_kernel_from_transform(xf, dist_cyl(q, q0), t, hsc, KernelMode::Spectral);
            };
            auto at_column = [&](size_t c, double z) {
                CylPoint q{cols[c].r, cols[c].theta, z};
                Complex v = free_val(q);
                if (eng) v += eng->scattered(sp, c, z);
                return std::abs(v);
            };
            std::vector<detail::Candidate> cand;
            for (size_t c = 0; c < cols.size(); ++c) {
                std::vector<double> zs = zc;
                double rho = phi_tilde(cols[c].r, cols[c].theta, q0.s, 0.0);
                for (double off : search.shell_offsets) {
                    double d = t + off * hsc;
                    if (d > rho) {
                        double z = std::sqrt((d - rho) * (d + rho));
                        if (z <= search.z_max) zs.push_back(z);
                    }
                }
                for (double z : zs) cand.push_back({at_column(c, z), {cols[c].r, cols[c].theta, z}});
            }
            long n_points = static_cast<long>(cand.size());
            std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
                if (a.value != b.value) return a.value > b.value;
                if (a.q.r != b.q.r) return a.q.r < b.q.r;
                if (a.q.theta != b.q.theta) return a.q.theta < b.q.theta;
                return a.q.z < b.q.z;
            });
            detail::Candidate best = cand.front();
            auto eval_any = [&](const CylPoint& q) {
                ++n_points;
                Complex v = free_val(q);
                if (eng) {
                    auto t1 = eng->tabulate({{q.r, q.theta}});
                    auto s1 = eng->contract(t1, t);
                    v += eng->scattered(s1, 0, q.z);
                }
                return std::abs(v);
            };
            double step[3] = {0.5 * dr, 0.5 * dth, 0.5 * std::max(dzc, hsc)};
            int nref = std::min<int>(search.n_refine, static_cast<int>(cand.size()));
            for (int i = 0; i < nref && search.refine_iters > 0; ++i) {
                detail::Candidate c = detail::nelder_mead(eval_any, cand[i], step, search.refine_iters, search);
                if (c.value > best.value) best = c;
            }
            double b = dispersion_bound(kind, h, t);
            rep.rows.push_back({h, t, best.value, b, best.value / b, best.q, n_points});
        }
    }
    return rep;
}

}  // namespace cylwave
