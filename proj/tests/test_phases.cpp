#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cylwave/numdiff.hpp"
#include "cylwave/phases.hpp"

using namespace cylwave;

namespace {

constexpr double kPi = std::numbers::pi;

struct Cart {
    double x, y, z;
};

Cart cartesian(const CylPoint& q) { return {q.r * std::cos(q.theta), q.r * std::sin(q.theta), q.z}; }

double euclid(const Cart& a, const Cart& b) { return std::sqrt(std::pow(a.x - b.x, 2) + std::pow(a.y - b.y, 2) + std::pow(a.z - b.z, 2)); }

}  // namespace

TEST(DistCyl, Examples) {
    EXPECT_EQ(dist_cyl(CylPoint{2.0, 0.0, 0.0}, SourceConfig{2.0}), 0.0);
    EXPECT_NEAR(dist_cyl(CylPoint{2.0, kPi, 0.0}, SourceConfig{2.0}), 4.0, 1e-15);
    EXPECT_NEAR(dist_cyl(CylPoint{1.0, kPi / 2, 0.0}, SourceConfig{1.0}), std::sqrt(2.0), 1e-15);
}

TEST(DistCyl, EuclideanAndTriangleInequality) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> r(1.0, 4.0), th(0.0, 2 * kPi), z(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        CylPoint a{r(rng), th(rng), z(rng)}, b{r(rng), th(rng), z(rng)}, c{r(rng), th(rng), z(rng)};
        EXPECT_NEAR(dist_cyl(a, b), euclid(cartesian(a), cartesian(b)), 1e-12);
        EXPECT_LE(dist_cyl(a, c), dist_cyl(a, b) + dist_cyl(b, c) + 1e-12);
        SourceConfig s{a.r};
        EXPECT_NEAR(dist_cyl(b, s), euclid(cartesian(b), {a.r, 0.0, 0.0}), 1e-12);
    }
}

TEST(ApparentContour, Values) {
    EXPECT_NEAR(apparent_contour(std::sqrt(2.0)).theta_star, kPi / 4, 1e-15);
    EXPECT_NEAR(apparent_contour(1e8).theta_star, kPi / 2, 1e-7);
    for (double s : {1.1, 2.0, 10.0}) {
        auto c = apparent_contour(s);
        EXPECT_NEAR(c.theta_star + c.y_star, kPi / 2, 1e-14);
    }
    EXPECT_THROW(apparent_contour(1.0), std::domain_error);
}

TEST(CriticalPoints, GlancingDoubleRoot) {
    double x = 0.2, s = 2.0;
    auto c = critical_points_ypm(x, 1.0 + x, s);
    EXPECT_NEAR(c.y_plus, std::asin((1.0 + x) / s), 1e-12);
    EXPECT_NEAR(c.y_minus, c.y_plus, 1e-12);
}

TEST(CriticalPoints, BoundaryExample) {
    auto c = critical_points_ypm(0.0, 1.0, 2.0);
    EXPECT_NEAR(c.y_plus, kPi / 6, 1e-14);
    EXPECT_NEAR(c.y_minus, kPi / 6, 1e-14);
}

TEST(CriticalPoints, DefiningRelationsAndStationarity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 0.5), ua(0.3, 1.0);
    for (int i = 0; i < 200; ++i) {
        double x = ux(rng), a = ua(rng), s = 1.0 + x + 1.5 * ua(rng);
        auto c = critical_points_ypm(x, a, s);
        double p = std::sqrt(s * s - a * a), q = std::sqrt((1 + x) * (1 + x) - a * a);
        EXPECT_NEAR(s * (1 + x) * std::sin(c.y_plus), a * a + p * q, 1e-10);
        EXPECT_NEAR(s * (1 + x) * std::sin(c.y_minus), a * a - p * q, 1e-10);
        EXPECT_NEAR(phi_normal(x, c.y_plus, 0.0, s), p - q, 1e-10);
        EXPECT_NEAR(phi_normal(x, c.y_minus, 0.0, s), p + q, 1e-10);
        for (double y : {c.y_plus, c.y_minus}) {
            double d = fd_first([&](double u) { return phi_bar(x, u, a, s); }, y);
            EXPECT_LT(std::fabs(d), 1e-8);
        }
    }
    EXPECT_THROW(critical_points_ypm(0.0, 1.5, 1.2), std::domain_error);
    EXPECT_THROW(critical_points_ypm(0.0, 1.5, 2.0), std::domain_error);
}

TEST(Gamma0, TaylorDataAtGlancing) {
    EXPECT_NEAR(gamma0(1.0, std::sqrt(2.0)), 1.0 + kPi / 4, 1e-14);
    for (double s : {1.5, std::sqrt(2.0), 2.0, 5.0}) {
        auto f = [&](double a) { return gamma0(a, s); };
        EXPECT_NEAR(f(1.0), std::sqrt(s * s - 1) + std::asin(1 / s), 1e-14);
        EXPECT_NEAR(fd_first(f, 1.0), std::asin(1 / s), 1e-6) << s;
        EXPECT_NEAR(fd_second(f, 1.0), 1 / std::sqrt(s * s - 1), 1e-4) << s;
    }
}

TEST(Gamma0, HalfSumAndDifferenceRelations) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ua(0.9, 1.0), ux(0.0, 0.2);
    for (int i = 0; i < 100; ++i) {
        double a = ua(rng), x = ux(rng), s = 2.0;
        auto c = critical_points_ypm(x, a, s);
        double fp = phi_bar(x, c.y_plus, a, s), fm = phi_bar(x, c.y_minus, a, s);
        EXPECT_NEAR(0.5 * (fp + fm), gamma0(a, s, 0.05), 1e-6);
        EXPECT_NEAR(0.75 * (fm - fp), a * std::pow(-zeta_tilde((1 + x) / a), 1.5), 1e-6);
    }
}

TEST(Gamma0, GlancingWindowGuard) {
    EXPECT_THROW(gamma0(0.5, 2.0), std::domain_error);
    EXPECT_THROW(gamma0(1.0, 1.0), std::domain_error);
    EXPECT_NO_THROW(gamma0(1.08, 2.0));
}

TEST(GammaTilde, TaylorData) {
    EXPECT_NEAR(gamma_tilde(1.0, std::sqrt(2.0), 0.0), 1.0 - kPi / 4, 1e-14);
    for (double r : {1.5, std::sqrt(2.0), 2.0, 5.0})
        for (double yq : {0.0, 0.3}) {
            auto f = [&](double a) { return gamma_tilde(a, r, yq); };
            double yc = y_critical(r, yq);
            EXPECT_NEAR(f(1.0), std::sqrt(r * r - 1) - yc, 1e-14);
            EXPECT_NEAR(fd_first(f, 1.0), -yc, 1e-6);
            EXPECT_NEAR(fd_second(f, 1.0), 1 / std::sqrt(r * r - 1), 1e-4);
        }
    EXPECT_NEAR(fd_second([](double a) { return gamma_tilde(a, 2.0, 0.0); }, 1.0), 1 / std::sqrt(3.0), 1e-4);
}

TEST(GammaTilde, RelationToGamma0) {
    for (double a : {0.92, 0.96, 1.0, 1.04, 1.08})
        EXPECT_NEAR(gamma_tilde(a, 2.5, 0.2), -(0.2 + kPi / 2) * a + gamma0(a, 2.5), 1e-10);
}

TEST(Eikonal, RandomWindowResiduals) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        auto r = eikonal_residual(0.5 * U(rng), -kPi + 2 * kPi * U(rng), -5 + 10 * U(rng), 0.5 + U(rng),
                                  -0.9 + 1.8 * U(rng));
        EXPECT_LT(std::fabs(r.res1), 1e-6);
        EXPECT_LT(std::fabs(r.res2), 1e-6);
    }
}

TEST(Eikonal, GlancingSurfaceAndOrigin) {
    auto r = eikonal_residual(0.0, 0.3, 0.0, 1.0, 0.0);
    EXPECT_EQ(mt_zeta(0.0, 0.3, 0.0, 1.0, 0.0), 0.0);
    EXPECT_LT(std::fabs(r.res1), 1e-9);
    double g = 0.6, a = 0.8 * std::sqrt(1 - g * g) / 0.8;  // (1 + x) sqrt(1 - g^2)/a = 1 at x = 0
    EXPECT_NEAR(mt_zeta(0.0, 0.0, 0.0, a, g), 0.0, 1e-15);
    EXPECT_LT(std::fabs(eikonal_residual(0.0, 0.1, 0.4, a, g).res1), 1e-8);
}

TEST(BoundaryPhase, AxialCriticalPoint) {
    CylPoint q{2.5, 1.2, 1.7};
    SourceConfig q0{2.0};
    for (double th : {0.1, 0.6, 1.0, 2.0}) {
        double zc = z_critical(th, q, q0);
        EXPECT_LT(std::fabs(boundary_phase_gradient(th, zc, q, q0).d_z), 1e-10);
    }
}

TEST(BoundaryPhase, SymmetricConfiguration) {
    CylPoint q{2.0, 0.0, 0.0};
    SourceConfig q0{2.0};
    EXPECT_NEAR(boundary_phase_gradient(0.0, 0.0, q, q0).d_theta, 0.0, 1e-15);
    EXPECT_NEAR(boundary_phase_gradient(kPi, 0.0, q, q0).d_theta, 0.0, 1e-14);
}

TEST(BoundaryPhase, GradientMatchesFiniteDifferences) {
    CylPoint q{1.7, 2.1, -0.4};
    SourceConfig q0{3.0};
    for (double th : {0.3, 1.1, 2.9})
        for (double z : {-1.0, 0.2}) {
            auto g = boundary_phase_gradient(th, z, q, q0);
            EXPECT_NEAR(g.d_theta, fd_first([&](double t) { return boundary_phase(t, z, q, q0); }, th), 1e-8);
            EXPECT_NEAR(g.d_z, fd_first([&](double u) { return boundary_phase(th, u, q, q0); }, z), 1e-8);
        }
}

TEST(BoundaryPhase, HessianAtNewtonCriticalPoints) {
    struct Cfg {
        CylPoint q;
        double s;
    };
    const Cfg cfgs[] = {{{3, kPi, 1}, 3},        {{2, 1.0, 0.5}, 2},   {{1.5, 2.5, -2}, 4}, {{2, 0, 0}, 2},
                        {{2.5, 2.0, 1.5}, 1.5}, {{4, 0.7, -1}, 2.5}, {{1.2, 3.0, 2.0}, 1.8}, {{3.5, 1.6, -0.5}, 3.0}};
    int n = 0, regimes[3] = {0, 0, 0};
    for (const auto& c : cfgs) {
        for (const auto& p : find_boundary_critical_points(c.q, {c.s})) {
            EXPECT_LT(p.grad_norm, 1e-12);
            HessianReport h = boundary_phase_hessian(p.theta, p.z, c.q, {c.s});
            EXPECT_TRUE(h.at_critical);
            EXPECT_LT(h.fd_residual, 1e-6);
            EXPECT_NEAR(h.det, h.d2_zz * h.d2_tt - h.d2_tz * h.d2_tz, 1e-14 * (1 + std::fabs(h.det)));
            if (p.regime == SignRegime::DifferentSigns) {
                double cf = hessian_det_different_signs(p.theta, p.z, c.q, {c.s});
                EXPECT_LT(std::fabs(h.det - cf), 1e-6 * std::fabs(cf));
            }
            ++regimes[static_cast<int>(p.regime)];
            ++n;
        }
    }
    EXPECT_GE(n, 20);
    for (int k : regimes) EXPECT_GT(k, 0);
}

TEST(Cutoffs, Examples) {
    CutoffSystem c = make_cutoffs();
    EXPECT_EQ(c.psi0(0.5), 1.0);
    for (int j = 1; j < 10; ++j) EXPECT_EQ(c.psi_j(j, 0.5), 0.0);
    EXPECT_EQ(c.chi(1.0), 1.0);
    EXPECT_EQ(c.chi(0.4), 0.0);
    EXPECT_EQ(c.chi0(1.5), 1.0);
    EXPECT_EQ(c.chi0(-2.0), 0.0);
    EXPECT_THROW(make_cutoffs(0.2), std::domain_error);
    EXPECT_THROW(make_cutoffs(0.0), std::domain_error);
}

TEST(Cutoffs, PartitionOfUnity) {
    for (Smoothness k : {Smoothness::C2, Smoothness::C4, Smoothness::CInf}) {
        CutoffSystem c = make_cutoffs(0.05, k);
        for (int i = 1; i <= 6; ++i) EXPECT_NEAR(c.partition_sum(std::pow(10.0, -i)), 1.0, 1e-10);
        for (double b = 1e-8; b <= 1.0; b *= 1.013) EXPECT_NEAR(c.partition_sum(b), 1.0, 1e-10) << b;
    }
}

TEST(Cutoffs, BoundsSupportsAndPlateaus) {
    CutoffSystem c = make_cutoffs();
    for (double x = -3.0; x <= 3.0; x += 0.001) {
        for (double v : {c.psi0(std::fabs(x)), c.psi(std::fabs(x)), c.chi(x), c.chi0(x), c.chi_eps(x)}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        if (x >= 0.75 && x <= 1.5) {
            EXPECT_EQ(c.chi(x), 1.0);
        }
        if (x < 0.5 || x > 2.0) {
            EXPECT_EQ(c.chi(x), 0.0);
        }
        if (std::fabs(x) <= 1.5) {
            EXPECT_EQ(c.chi0(x), 1.0);
        }
        if (std::fabs(x) >= 2.0) {
            EXPECT_EQ(c.chi0(x), 0.0);
        }
    }
    for (double b = 1e-4; b < 1.0; b *= 1.01) {
        if (b <= CutoffSystem::kPsi0Low || b >= 4 * CutoffSystem::kPsi0High) {
            EXPECT_EQ(c.psi(b), 0.0) << b;
        }
        if (b >= CutoffSystem::kPsi0High) {
            EXPECT_EQ(c.psi0(b), 1.0);
        }
        if (b <= CutoffSystem::kPsi0Low) {
            EXPECT_EQ(c.psi0(b), 0.0);
        }
    }
    EXPECT_EQ(c.chi_eps(1.0), 1.0);
    EXPECT_EQ(c.chi_eps(1.0 + 2.0 * c.eps()), 0.0);
}

TEST(Cutoffs, SmoothstepMatchesCoefficients) {
    for (Smoothness k : {Smoothness::C2, Smoothness::C4}) {
        auto p = smoothstep_coefficients(k);
        for (double u = 0.0; u <= 1.0; u += 0.05) {
            double v = 0.0;
            for (size_t i = p.size(); i-- > 0;) v = v * u + p[i];
            EXPECT_NEAR(v, detail::smoothstep(u, k), 1e-13);
        }
    }
    EXPECT_TRUE(smoothstep_coefficients(Smoothness::CInf).empty());
}

TEST(JSplit, Examples) {
    EXPECT_EQ(j_split(std::sqrt(2.0), 1.0 / 64.0), 2);
    EXPECT_EQ(j_split(1.0, 0.9), 0);
    EXPECT_EQ(j_split(1.0, 1.5), 0);
}

TEST(JSplit, DyadicBracket) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> us(1.0, 10.0), lh(-12.0, -0.01);
    for (int i = 0; i < 1000; ++i) {
        double s = us(rng), h = std::exp(lh(rng));
        int j = j_split(s, h);
        if (h < s) {
            EXPECT_GE(std::ldexp(s / h, -3 * j), 1.0);
            EXPECT_LT(std::ldexp(s / h, -3 * (j + 1)), 1.0);
        }
    }
}
