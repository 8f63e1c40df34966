#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cylwave/green.hpp"

using namespace cylwave;

namespace {

constexpr double kPi = std::numbers::pi;

Complex scattered_mode_term(int n, double r, double s, double kappa) {
    ScaledReal j = bessel_J_scaled(n, kappa);
    ScaledComplex jc(Complex(j.mant), j.exp);
    ScaledComplex v = jc * hankel_H1_scaled(n, s * kappa) * hankel_H1_scaled(n, r * kappa) / hankel_H1_scaled(n, kappa);
    return v.value();
}

double envelope(const std::function<double(double)>& f, double a, double b) {
    double m = 0.0;
    for (int i = 0; i < 8; ++i) m = std::max(m, f(a * std::pow(b / a, i / 7.0)));
    return m;
}

}  // namespace

TEST(ModalGreen, VanishesOnBoundary) {
    for (int n : {0, 1, 7, 40})
        for (double k : {0.3, 4.0, 25.0}) {
            Complex g = modal_green(n, 2.5, 1.0, k);
            GreenSplit sp = modal_green_split(n, 2.5, 1.0, k);
            EXPECT_LE(std::abs(g), 1e-15 * std::abs(sp.g_plus)) << n << " " << k;
            EXPECT_LE(std::abs(sp.g_plus - sp.g_minus), 1e-13 * std::abs(sp.g_plus)) << n << " " << k;
        }
}

TEST(ModalGreen, SymmetricInRadii) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> R(1.0, 6.0), K(0.05, 30.0);
    std::uniform_int_distribution<int> N(0, 60);
    for (int i = 0; i < 200; ++i) {
        int n = N(rng);
        double a = R(rng), b = R(rng), k = K(rng);
        Complex g1 = modal_green(n, a, b, k), g2 = modal_green(n, b, a, k);
        EXPECT_LE(std::abs(g1 - g2), 1e-12 * std::abs(g1));
    }
}

TEST(ModalGreen, SolvesRadialBesselEquation) {
    const double h = 3e-4;
    for (int n : {0, 2, 5})
        for (double k : {0.7, 2.0, 3.5})
            for (double r : {1.6, 3.0}) {
                double rs = 2.2;
                auto u = [&](double x) { return std::sqrt(x) * modal_green(n, x, rs, k); };
                Complex c = u(r), p = u(r + h), m = u(r - h);
                Complex d2 = (p - 2.0 * c + m) / (h * h), d1 = (p - m) / (2 * h);
                Complex res = d2 + d1 / r + (k * k - n * n / (r * r)) * c;
                EXPECT_LT(std::abs(res), 1e-5 * std::abs(c)) << n << " " << k << " " << r;
            }
}

TEST(ModalGreen, InvalidArguments) {
    EXPECT_THROW(modal_green(-1, 2, 2, 1), std::domain_error);
    EXPECT_THROW(modal_green(1, 0.5, 2, 1), std::domain_error);
    EXPECT_THROW(modal_green(1, 2, 2, 0.0), std::domain_error);
    EXPECT_THROW(modal_green_split(1, 2, 0.9, 1), std::domain_error);
    EXPECT_THROW(boundary_normal_derivative_modal(1, 1.0, 1), std::domain_error);
}

TEST(ModalGreenSplit, RecombinesToModalGreen) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> R(1.0, 6.0), K(0.05, 30.0);
    std::uniform_int_distribution<int> N(0, 60);
    double worst_rel = 0.0, worst_scaled = 0.0;
    int n_rel = 0;
    for (int i = 0; i < 1000; ++i) {
        int n = N(rng);
        double a = R(rng), b = R(rng), k = K(rng);
        GreenSplit sp = modal_green_split(n, a, b, k);
        Complex g = modal_green(n, a, b, k);
        double d = std::abs(sp.g_plus - sp.g_minus - g);
        worst_scaled = std::max(worst_scaled, d / std::max(std::abs(g), std::abs(sp.g_plus)));
        if (n <= k * std::min(a, b)) {
            worst_rel = std::max(worst_rel, d / std::abs(g));
            ++n_rel;
        }
    }
    EXPECT_GT(n_rel, 100);
    EXPECT_LT(worst_rel, 1e-12);
    EXPECT_LT(worst_scaled, 1e-12);
}

TEST(ModalGreenSplit, LargeArgumentEnvelope) {
    for (int n : {0, 1, 3})
        for (double k : {200.0, 800.0}) {
            double r = 2.0, s = 1.5;
            GreenSplit sp = modal_green_split(n, r, s, k);
            double env = 1.0 / (2.0 * k * r * s);
            EXPECT_NEAR(std::abs(sp.g_plus) / env, 1.0, 1e-3) << n << " " << k;
        }
}

TEST(BoundaryNormalDerivative, MatchesOneSidedDifference) {
    const double h = 1e-6;
    for (int n : {0, 1, 4, 12})
        for (double k : {0.5, 3.0, 10.0})
            for (double rs : {1.3, 2.5}) {
                Complex fd = (modal_green(n, 1.0 + h, rs, k) - modal_green(n, 1.0, rs, k)) / h;
                Complex an = boundary_normal_derivative_modal(n, rs, k);
                EXPECT_LT(std::abs(fd - an) / std::abs(an), 1e-4) << n << " " << k << " " << rs;
            }
}

TEST(BoundaryNormalDerivative, LargeOrderEnvelope) {
    double k = 0.5, s = 1.5;
    for (int n : {60, 120, 240}) {
        double scaled = std::abs(boundary_normal_derivative_modal(n, s, k)) * std::sqrt(s) * std::pow(s, n);
        EXPECT_NEAR(scaled, 1.0, 0.05) << n;
    }
}

TEST(BoundaryNormalDerivative, FiniteForAllOrders) {
    for (int n = 0; n <= 500; n += 7) {
        Complex v = boundary_normal_derivative_modal(n, 1.2, 10.0);
        EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag())) << n;
    }
}

TEST(Resolvent, DirichletTrace) {
    TruncationPolicy pol;
    for (double tau : {1.0, 5.0, 20.0}) {
        double worst = 0.0;
        for (int i = 0; i < 10; ++i)
            for (int k = 0; k < 5; ++k) {
                CylPoint q{1.0, -kPi + 2 * kPi * (i + 0.5) / 10, -2.0 + k};
                worst = std::max(worst, std::abs(resolvent(q, {2.0}, tau, pol).value));
            }
        EXPECT_LE(worst, 10 * pol.tol) << tau;
    }
}

TEST(Resolvent, GrafFreeKernel) {
    for (double tau : {1.0, 5.0, 20.0}) {
        CylPoint q{3.0, 0.9, 0.4};
        Complex g = free_resolvent_modal(q, {1.5}, tau).value;
        Complex f = free_resolvent(q, {1.5}, tau);
        EXPECT_LT(std::abs(g - f) / std::abs(f), 1e-6) << tau;
    }
}

TEST(Resolvent, WeightIsPinned) {
    EXPECT_DOUBLE_EQ(resolvent_weight(2.0, 2.0), -2.0 / (4 * kPi * kPi));
    EXPECT_DOUBLE_EQ(resolvent_weight(1.0, 4.0), resolvent_weight(2.0, 2.0));
}

TEST(Resolvent, Reciprocity) {
    for (double tau : {1.0, 5.0, 20.0}) {
        Complex a = resolvent({2.5, 1.1, 0.7}, {1.8}, tau).value;
        Complex b = resolvent({1.8, -1.1, -0.7}, {2.5}, tau).value;
        EXPECT_LT(std::abs(a - b), 1e-8) << tau;
    }
}

TEST(Resolvent, HelmholtzStencil) {
    TruncationPolicy pol;
    pol.tol = 1e-13;
    const double h = 1e-3;
    for (double tau : {1.0, 5.0, 20.0}) {
        CylPoint q{1.7, 0.8, 0.4};
        auto R = [&](double r, double t, double z) { return resolvent({r, t, z}, {2.2}, tau, pol).value; };
        Complex c = R(q.r, q.theta, q.z);
        Complex rp = R(q.r + h, q.theta, q.z), rm = R(q.r - h, q.theta, q.z);
        Complex lap = (rp - 2.0 * c + rm) / (h * h) + (rp - rm) / (2 * h * q.r) +
                      (R(q.r, q.theta + h, q.z) - 2.0 * c + R(q.r, q.theta - h, q.z)) / (h * h * q.r * q.r) +
                      (R(q.r, q.theta, q.z + h) - 2.0 * c + R(q.r, q.theta, q.z - h)) / (h * h);
        EXPECT_LT(std::abs(lap + tau * tau * c) / (tau * tau * std::abs(c)), 1e-3) << tau;
    }
}

TEST(Resolvent, TruncationFailureIsReported) {
    TruncationPolicy pol;
    pol.n_max = 3;
    EXPECT_THROW(resolvent({1.5, 0.3, 0.0}, {2.0}, 20.0, pol), ConvergenceError);
    EXPECT_THROW(resolvent({0.9, 0.3, 0.0}, {2.0}, 1.0), std::domain_error);
    EXPECT_THROW(resolvent({1.5, 0.3, 0.0}, {2.0}, 0.0), std::domain_error);
    pol = {};
    pol.tol = 0.0;
    EXPECT_THROW(resolvent({1.5, 0.3, 0.0}, {2.0}, 1.0, pol), std::domain_error);
}

TEST(Resolvent, EvanescentPartDecaysSuperPolynomially) {
    TruncationPolicy pol;
    pol.tol = 1e-13;
    double tau = 5.0;
    auto ev = [&](double z) {
        CylPoint q{2.0, 1.0, z};
        return std::abs(resolvent(q, {2.0}, tau, pol).value - propagating_resolvent(q, {2.0}, tau, pol).value);
    };
    double near = envelope(ev, 2.0, 4.0), far = envelope(ev, 16.0, 32.0);
    EXPECT_LT(far / near, std::pow(8.0, -6.0)) << "envelope ratio over three octaves " << far / near;
}

TEST(ModeTruncation, PinnedValueAndMonotone) {
    EXPECT_EQ(mode_truncation(50.0, 1.0, 1e-10), 86);
    EXPECT_EQ(mode_truncation(25.0, 2.0, 1e-10), 86);
    int prev = 0;
    for (double tol = 1e-4; tol > 1e-16; tol /= 2) {
        int n = mode_truncation(50.0, 1.0, tol);
        EXPECT_GE(n, prev);
        prev = n;
    }
    EXPECT_LE(mode_truncation(1e-3, 1.0, 1e-10), 5);
    EXPECT_EQ(mode_truncation(1e-6, 1.0, 1e-10), mode_truncation(1e-7, 1.0, 1e-10));
    EXPECT_THROW(mode_truncation(0.0, 1.0, 1e-10), std::domain_error);
}

TEST(ModeTruncation, MeasuredTailBelowTolerance) {
    double tol = 1e-10;
    for (double tau : {5.0, 25.0}) {
        double rmax = 50.0 / tau;
        int N = mode_truncation(tau, rmax, tol);
        for (double k : {0.3 * tau, tau}) {
            double tail = 0.0;
            for (int n = N + 1; n <= N + 20; ++n)
                tail += 2.0 * std::abs(scattered_mode_term(n, rmax, rmax, k)) / (8 * kPi);
            EXPECT_LT(tail, tol) << tau << " " << k;
        }
    }
}

TEST(LpResolvent, PartitionReproducesPropagatingPart) {
    auto cs = make_cutoffs();
    CylPoint q{3.0, 2.5, 0.5};
    const double tol = 1e-6;
    for (double tau : {1.0, 5.0, 20.0}) {
        const int J = static_cast<int>(std::ceil(std::log(0.1 * tau / tol) / std::log(4.0)));
        Complex full = propagating_resolvent(q, {2.0}, tau).value;
        Complex sum = 0.0;
        double prev = 1.0;
        for (int j = 0; j <= J; ++j) {
            sum += lp_resolvent(q, {2.0}, tau, j, cs).value;
            double err = std::abs(sum - full) / std::abs(full);
            if (j >= 6 && j % 2 == 0) {
                EXPECT_LT(err, prev / 10.0) << tau << " j=" << j;
                prev = err;
            } else if (j == 4) {
                prev = err;
            }
            if (j == J) {
                EXPECT_LT(err, tol) << tau;
            }
        }
    }
}

TEST(LpResolvent, LowestPieceDominatesTransversalPair) {
    auto cs = make_cutoffs();
    CylPoint q{3.0, 2.5, 0.5};
    for (double tau : {5.0, 20.0}) {
        double r0 = std::abs(lp_resolvent(q, {2.0}, tau, 0, cs).value);
        double all = std::abs(resolvent(q, {2.0}, tau).value);
        EXPECT_GT(r0 / all, 0.9) << tau;
    }
}

TEST(LpResolvent, Errors) {
    auto cs = make_cutoffs();
    EXPECT_THROW(lp_resolvent({3.0, 2.5, 0.5}, {2.0}, 5.0, -1, cs), std::domain_error);
    EXPECT_THROW(lp_resolvent({2.0, 0.0, 0.5}, {2.0}, 5.0, 0, cs), std::domain_error);
}
