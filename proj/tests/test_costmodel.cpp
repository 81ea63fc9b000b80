#include <gtest/gtest.h>

#include "ddinfer/costmodel.hpp"
#include "ddinfer/error.hpp"

using namespace ddinfer;

namespace {

CostParams burgers() {
    CostParams p;
    p.n = 500;
    p.n_F = 250;
    p.n_I = 2;
    p.n_T = 360;
    p.n_t = 720;
    p.r = 10;
    p.r_g = 10;
    p.s = 3;
    p.k = 2;
    p.d = 1;
    return p;
}

}  // namespace

TEST(Offline, SparseCostArithmetic) {
    CostParams p;
    p.n = 200;
    p.n_F = 100;
    p.n_I = 1;
    p.n_T = 10;
    p.s = 3;
    p.k = 1;
    EXPECT_DOUBLE_EQ(offline_costs(p).sfom, 9000.0);
    EXPECT_DOUBLE_EQ(offline_costs(burgers()).sfom, 1822500.0);
    p.n_F = p.n;
    EXPECT_DOUBLE_EQ(offline_costs(p).sfom, offline_costs(p).global_sfom);
}

TEST(Offline, RatioExamples) {
    CostParams p;
    p.n = 100;
    p.r = p.r_g = p.n_F = p.s = 4;
    p.n_I = 0;
    p.k = 1;
    EXPECT_NEAR(offline_ratios(p).vs_global_opinf, 2.0, 1e-12);

    CostParams q = burgers();
    q.n_F = q.n;
    q.n_I = 0;
    EXPECT_GE(offline_ratios(q).vs_global_sfom, 1.0);
}

TEST(Offline, RatiosAreQuotientsAndIndependentOfSnapshots) {
    CostParams p = burgers();
    const auto c = offline_costs(p);
    const auto r = offline_ratios(p);
    EXPECT_NEAR(r.vs_global_opinf, (c.sfom + c.opinf) / c.global_opinf, 1e-12 * r.vs_global_opinf);
    EXPECT_NEAR(r.vs_global_sfom, (c.sfom + c.opinf) / c.global_sfom, 1e-12 * r.vs_global_sfom);
    p.n_T *= 2;
    EXPECT_DOUBLE_EQ(offline_ratios(p).vs_global_opinf, r.vs_global_opinf);
    EXPECT_DOUBLE_EQ(offline_ratios(p).vs_global_sfom, r.vs_global_sfom);
}

TEST(Online, BurgersSpeedup) {
    const CostParams p = burgers();
    EXPECT_NEAR(online_cost_ratio(p), 0.82, 1e-12);
    EXPECT_NEAR(online_speedup(p), 1.2195, 1e-4);
}

TEST(Online, TwoDimensionalExample) {
    CostParams p;
    p.n = 10000;
    p.n_F = 1000;
    p.n_I = 32;
    p.r = 10;
    p.s = 9;
    p.k = 1;
    p.d = 2;
    EXPECT_NEAR(online_speedup(p), 9.55, 0.005);
}

TEST(Online, NoReductionMeansNoSpeedup) {
    CostParams p = burgers();
    p.n_F = p.n;
    EXPECT_LE(online_speedup(p), 1.0);
}

TEST(Online, SpeedupDecreasesWithSparseFraction) {
    CostParams p = burgers();
    double prev = 1e300;
    for (double f = 0.1; f <= 1.0 + 1e-12; f += 0.1) {
        p.n_F = f * p.n;
        const double s = online_speedup(p);
        EXPECT_LT(s, prev);
        prev = s;
    }
}

TEST(Interface, EstimatedCounts) {
    CostParams p;
    p.n = 20000;
    p.n_F = 10000;
    p.d = 2;
    EXPECT_DOUBLE_EQ(p.interface_count(), 100.0);
    p.d = 1;
    EXPECT_DOUBLE_EQ(p.interface_count(), 1.0);
    p.d = 2;
    p.scaling = InterfaceScaling::power;
    EXPECT_DOUBLE_EQ(p.interface_count(), 10000.0);
    p.n_I = 7;
    EXPECT_DOUBLE_EQ(p.interface_count(), 7.0);
}

TEST(Params, Validation) {
    CostParams p = burgers();
    p.n_F = 600;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = burgers();
    p.r = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
}
