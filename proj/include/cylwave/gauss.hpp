#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <stdexcept>
#include <vector>

namespace cylwave {

/// Quadrature rule on [-1, 1].
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

namespace detail {

template <unsigned N>
Rule expand_gauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    Rule r;
    for (size_t i = a.size(); i-- > 0;) {
        if (a[i] == 0.0) continue;
        r.x.push_back(-a[i]);
        r.w.push_back(wt[i]);
    }
    for (size_t i = 0; i < a.size(); ++i) {
        r.x.push_back(a[i]);
        r.w.push_back(wt[i]);
    }
    return r;
}

}  // namespace detail

/// Gauss-Legendre rule; N in {7, 10, 15, 20, 25, 30}.
inline const Rule& gauss_legendre(unsigned n) {
    static const Rule g7 = detail::expand_gauss<7>();
    static const Rule g10 = detail::expand_gauss<10>();
    static const Rule g15 = detail::expand_gauss<15>();
    static const Rule g20 = detail::expand_gauss<20>();
    static const Rule g25 = detail::expand_gauss<25>();
    static const Rule g30 = detail::expand_gauss<30>();
    switch (n) {
        case 7: return g7;
        case 10: return g10;
        case 15: return g15;
        case 20: return g20;
        case 25: return g25;
        case 30: return g30;
        default: throw std::invalid_argument("gauss_legendre: unsupported rule size");
    }
}

/// 15-point Kronrod extension with the embedded 7-point Gauss weights
/// (gw[i] = 0 at the Kronrod-only nodes).
struct KronrodRule {
    std::vector<double> x;
    std::vector<double> wk;
    std::vector<double> wg;
};

inline const KronrodRule& gauss_kronrod15() {
    static const KronrodRule rule = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 15>;
        using G = boost::math::quadrature::gauss<double, 7>;
        const auto& a = K::abscissa();
        const auto& wk = K::weights();
        const auto& wg = G::weights();
        KronrodRule r;
        auto gauss_weight = [&](size_t i) { return (i % 2 == 0) ? wg[i / 2] : 0.0; };
        for (size_t i = a.size(); i-- > 1;) {
            r.x.push_back(-a[i]);
            r.wk.push_back(wk[i]);
            r.wg.push_back(gauss_weight(i));
        }
        for (size_t i = 0; i < a.size(); ++i) {
            r.x.push_back(a[i]);
            r.wk.push_back(wk[i]);
            r.wg.push_back(gauss_weight(i));
        }
        return r;
    }();
    return rule;
}

}  // namespace cylwave
