#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cnpressure/time_mesh.hpp"

using namespace cnpressure;

namespace {

// Brute-force recomputation of kappa and rho from the raw node list.
double brute_kappa(std::span<const double> t) {
    double kappa = 1.0;
    for (std::size_t n = 1; n + 1 < t.size(); ++n) {
        const double a = t[n] - t[n - 1];
        const double b = t[n + 1] - t[n];
        kappa = std::max({kappa, a / b, b / a});
    }
    return kappa;
}

double brute_rho(std::span<const double> t) {
    double lo = 1e300, hi = 0.0;
    for (std::size_t n = 1; n < t.size(); ++n) {
        lo = std::min(lo, t[n] - t[n - 1]);
        hi = std::max(hi, t[n] - t[n - 1]);
    }
    return hi / lo;
}

double step_sum(const TimeMesh& m) {
    double s = 0.0;
    for (std::size_t n = 1; n <= m.intervals(); ++n) s += m.step(n);
    return s;
}

}  // namespace

TEST(TimeMesh, UniformNodes) {
    const auto m = build_uniform_mesh(2.0, 4);
    ASSERT_EQ(m.intervals(), 4u);
    const std::vector<double> expected{0.0, 0.5, 1.0, 1.5, 2.0};
    for (std::size_t n = 0; n <= 4; ++n) EXPECT_DOUBLE_EQ(m.node(n), expected[n]);
    EXPECT_DOUBLE_EQ(m.adjacency_ratio(), 1.0);
    EXPECT_DOUBLE_EQ(m.global_ratio(), 1.0);
    EXPECT_DOUBLE_EQ(m.midpoint(2), 0.75);
}

TEST(TimeMesh, SingleInterval) {
    const auto m = build_uniform_mesh(1.0, 1);
    ASSERT_EQ(m.intervals(), 1u);
    EXPECT_DOUBLE_EQ(m.step(1), 1.0);
    EXPECT_DOUBLE_EQ(m.adjacency_ratio(), 1.0);
}

TEST(TimeMesh, ReferenceStep) {
    const auto m = build_uniform_mesh(2.0, 4000);
    EXPECT_NEAR(m.max_step(), 0.0005, 1e-15);
    EXPECT_NEAR(m.min_step(), 0.0005, 1e-15);
}

TEST(TimeMesh, RejectsInvalidUniform) {
    EXPECT_THROW(build_uniform_mesh(0.0, 4), InvalidArgument);
    EXPECT_THROW(build_uniform_mesh(-1.0, 4), InvalidArgument);
    EXPECT_THROW(build_uniform_mesh(1.0, 0), InvalidArgument);
    EXPECT_THROW(TimeMesh({0.0, 0.5, 0.5, 1.0}), InvalidArgument);
    EXPECT_THROW(TimeMesh({0.1, 1.0}), InvalidArgument);
}

TEST(TimeMesh, AlternatingSteps) {
    const auto m = build_alternating_mesh(2.0, 0.02, {0.8, 1.2});
    ASSERT_EQ(m.intervals(), 100u);
    EXPECT_NEAR(m.step(1), 0.016, 1e-15);
    EXPECT_NEAR(m.step(2), 0.024, 1e-15);
    EXPECT_NEAR(m.step(3), 0.016, 1e-15);
    EXPECT_NEAR(m.adjacency_ratio(), 1.5, 1e-12);
    EXPECT_DOUBLE_EQ(m.final_time(), 2.0);
}

TEST(TimeMesh, AlternatingUnitPatternIsUniform) {
    const auto m = build_alternating_mesh(1.0, 0.1, {1.0});
    ASSERT_EQ(m.intervals(), 10u);
    EXPECT_NEAR(m.adjacency_ratio(), 1.0, 1e-12);
    for (std::size_t n = 1; n <= 10; ++n) EXPECT_NEAR(m.step(n), 0.1, 1e-14);
}

TEST(TimeMesh, AlternatingRejectsBadPattern) {
    EXPECT_THROW(build_alternating_mesh(2.0, 0.02, {0.0, 2.0}), InvalidArgument);
    EXPECT_THROW(build_alternating_mesh(2.0, 0.02, {-0.8, 2.8}), InvalidArgument);
    EXPECT_THROW(build_alternating_mesh(2.0, 0.02, {0.8, 1.0}), InvalidArgument);
    EXPECT_THROW(build_alternating_mesh(2.0, 0.0, {1.0}), InvalidArgument);
}

TEST(TimeMesh, AlternatingNonDivisibleEndAdjusted) {
    // 1.01 is not a multiple of the period 0.2: the last step absorbs the remainder.
    const auto m = build_alternating_mesh(1.01, 0.1, {0.8, 1.2});
    EXPECT_DOUBLE_EQ(m.final_time(), 1.01);
    const double last = m.step(m.intervals());
    EXPECT_GT(last, 0.0);
    EXPECT_LE(last, 1.5 * 0.12 + 1e-14);
}

TEST(TimeMesh, StepSumAndRatiosProperty) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> Tdist(0.3, 5.0), kdist(0.001, 0.1), adist(0.5, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        const double T = Tdist(rng);
        const double k = kdist(rng);
        const double a = adist(rng);
        const std::vector<double> pattern{a, 2.0 - a};
        const auto m = trial % 2 ? build_alternating_mesh(T, k, pattern)
                                 : build_uniform_mesh(T, static_cast<long long>(std::ceil(T / k)));
        EXPECT_NEAR(step_sum(m), T, 1e-12 * T);
        EXPECT_DOUBLE_EQ(m.adjacency_ratio(), brute_kappa(m.nodes()));
        EXPECT_DOUBLE_EQ(m.global_ratio(), brute_rho(m.nodes()));
    }
}

TEST(TimeMesh, IntervalLookupUsesHalfOpenConvention) {
    const auto m = build_uniform_mesh(2.0, 4);
    EXPECT_EQ(m.interval_containing(0.0), 1u);
    EXPECT_EQ(m.interval_containing(0.5), 1u);
    EXPECT_EQ(m.interval_containing(0.5000001), 2u);
    EXPECT_EQ(m.interval_containing(2.0), 4u);
    EXPECT_THROW(m.interval_containing(2.1), InvalidArgument);
}

TEST(SmoothingWeight, TauValues) {
    const auto m8 = build_uniform_mesh(2.0, 8);
    EXPECT_DOUBLE_EQ(tau_value(m8, 1, 1.5), 0.0);
    EXPECT_DOUBLE_EQ(tau_value(m8, 6, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(tau_value(m8, 3, 2.0), 0.25);
    EXPECT_DOUBLE_EQ(tau_value(m8, 1, 0.0), 1.0);  // 0^0 = 1
    EXPECT_THROW(tau_value(m8, 0, 1.0), InvalidArgument);
    EXPECT_THROW(tau_value(m8, 9, 1.0), InvalidArgument);
}

TEST(SmoothingWeight, MonotoneInIntervalAndExponent) {
    const auto m = build_alternating_mesh(2.0, 0.05, {0.8, 1.2});
    for (double alpha : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
        for (std::size_t n = 2; n <= m.intervals(); ++n)
            EXPECT_LE(tau_value(m, n - 1, alpha), tau_value(m, n, alpha));
    }
    for (std::size_t n = 1; n <= m.intervals(); ++n) {
        if (m.node(n - 1) > 1.0) continue;
        for (double alpha = 0.0; alpha < 3.0; alpha += 0.25)
            EXPECT_GE(tau_value(m, n, alpha), tau_value(m, n, alpha + 0.25));
    }
    const SmoothingWeight w(m, 1.5);
    EXPECT_EQ(w(1), 0.0);
    EXPECT_EQ(w(m.intervals()), 1.0);
}
