#include <gtest/gtest.h>

#include <cmath>

#include "cylwave/dispersion.hpp"

using namespace cylwave;

namespace {

SearchPolicy small_search() {
    SearchPolicy sp;
    sp.n_r = 6;
    sp.n_theta = 5;
    sp.n_z = 4;
    sp.n_refine = 2;
    sp.refine_iters = 10;
    return sp;
}

TruncationPolicy policy_1e8() {
    TruncationPolicy p;
    p.tol = 1e-8;
    return p;
}

void expect_same(const DispersionReport& a, const DispersionReport& b) {
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].h, b.rows[i].h);
        EXPECT_EQ(a.rows[i].t, b.rows[i].t);
        EXPECT_EQ(a.rows[i].sup_abs, b.rows[i].sup_abs);
        EXPECT_EQ(a.rows[i].argmax.r, b.rows[i].argmax.r);
        EXPECT_EQ(a.rows[i].argmax.theta, b.rows[i].argmax.theta);
        EXPECT_EQ(a.rows[i].argmax.z, b.rows[i].argmax.z);
        EXPECT_EQ(a.rows[i].n_points, b.rows[i].n_points);
    }
}

}  // namespace

TEST(DispersionBound, Values) {
    EXPECT_DOUBLE_EQ(dispersion_bound(WindowKind::High, 0.125, 0.05), 512.0);
    EXPECT_DOUBLE_EQ(dispersion_bound(WindowKind::High, 0.125, 1.0), 64.0);
    EXPECT_DOUBLE_EQ(dispersion_bound(WindowKind::Low, 0.125, 3.0), 0.25);
}

TEST(DispersionScan, RowsOrderedAndConsistent) {
    auto rep = dispersion_scan({1.0 / 16, 1.0 / 8}, {1.0, 0.2}, WindowKind::High, small_search(), policy_1e8());
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[0].h, 0.125);
    EXPECT_EQ(rep.rows[0].t, 0.2);
    EXPECT_EQ(rep.rows[3].h, 0.0625);
    EXPECT_EQ(rep.rows[3].t, 1.0);
    for (const auto& r : rep.rows) {
        EXPECT_DOUBLE_EQ(r.bound, dispersion_bound(WindowKind::High, r.h, r.t));
        EXPECT_DOUBLE_EQ(r.ratio, r.sup_abs / r.bound);
        EXPECT_GT(r.n_points, 6 * 5 * 4);
        EXPECT_GE(r.argmax.r, 1.0);
        EXPECT_LE(r.argmax.r, 3.0);
        EXPECT_GE(r.argmax.theta, 0.0);
        EXPECT_LE(r.argmax.theta, std::numbers::pi);
        EXPECT_GE(r.argmax.z, 0.0);
        EXPECT_LE(r.argmax.z, 3.0);
    }
}

TEST(DispersionScan, DeterministicAcrossRunsAndThreads) {
    auto sp = small_search();
    sp.jitter = 0.3;
    sp.seed = 7;
    auto a = dispersion_scan({0.125}, {0.3, 1.5}, WindowKind::High, sp, policy_1e8(), {2.0}, make_cutoffs(), false, 1);
    auto b = dispersion_scan({0.125}, {0.3, 1.5}, WindowKind::High, sp, policy_1e8(), {2.0}, make_cutoffs(), false, 1);
    auto c = dispersion_scan({0.125}, {0.3, 1.5}, WindowKind::High, sp, policy_1e8(), {2.0}, make_cutoffs(), false, 2);
    expect_same(a, b);
    expect_same(a, c);
}

TEST(DispersionScan, FreeControlRatiosOrderOne) {
    auto rep = dispersion_scan({1.0 / 8, 1.0 / 16}, {0.05, 0.5, 5.0}, WindowKind::High, small_search(), policy_1e8(),
                               {2.0}, make_cutoffs(), true);
    for (const auto& r : rep.rows) {
        EXPECT_GT(r.ratio, 0.01) << r.h << " " << r.t;
        EXPECT_LT(r.ratio, 1.0) << r.h << " " << r.t;
    }
}

TEST(DispersionScan, ObstacleScanBoundedLikeFreeControl) {
    auto sp = small_search();
    auto obs = dispersion_scan({1.0 / 8}, {0.05, 0.5, 2.0}, WindowKind::High, sp, policy_1e8());
    auto fr = dispersion_scan({1.0 / 8}, {0.05, 0.5, 2.0}, WindowKind::High, sp, policy_1e8(), {2.0}, make_cutoffs(), true);
    for (size_t i = 0; i < obs.rows.size(); ++i) {
        EXPECT_LT(obs.rows[i].ratio, 4.0 * fr.rows[i].ratio + 0.05) << obs.rows[i].t;
        EXPECT_GT(obs.rows[i].ratio, 0.25 * fr.rows[i].ratio) << obs.rows[i].t;
    }
}

TEST(DispersionScan, LowWindowUsesInverseTimeBound) {
    auto rep = dispersion_scan({}, {1.0, 4.0}, WindowKind::Low, small_search(), policy_1e8());
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_DOUBLE_EQ(r.bound, 1.0 / (1.0 + r.t));
        EXPECT_GT(r.sup_abs, 0.0);
    }
}

TEST(DispersionScan, Errors) {
    auto sp = small_search();
    EXPECT_THROW(dispersion_scan({0.125}, {}, WindowKind::High, sp), std::domain_error);
    EXPECT_THROW(dispersion_scan({}, {1.0}, WindowKind::High, sp), std::domain_error);
    EXPECT_THROW(dispersion_scan({0.125}, {0.0}, WindowKind::High, sp), std::domain_error);
    EXPECT_THROW(dispersion_scan({1.5}, {1.0}, WindowKind::High, sp), std::domain_error);
    sp.n_theta = 1;
    EXPECT_THROW(dispersion_scan({0.125}, {1.0}, WindowKind::High, sp), std::domain_error);
}
