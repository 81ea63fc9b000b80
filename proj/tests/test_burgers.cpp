#include <cmath>

#include <gtest/gtest.h>

#include "ddinfer/burgers.hpp"
#include "ddinfer/error.hpp"

using namespace ddinfer;

TEST(BurgersIc, AnalyticValues) {
    const BurgersConfig cfg;
    const Vector w = burgers_initial_condition(cfg);
    ASSERT_EQ(w.size(), 500);
    EXPECT_NEAR(w(250), 1.0, 1e-12);
    EXPECT_NEAR(w(0), 0.2, 1e-8);
}

TEST(BurgersRhs, ConstantStateIsStationary) {
    const BurgersConfig cfg;
    const Vector w = Vector::Constant(500, 0.7);
    EXPECT_LE(burgers_rhs(w, cfg).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BurgersReference, DefaultRunShapeAndConservation) {
    const BurgersConfig cfg;
    ReferenceDiagnostics diag;
    const auto S = simulate_burgers_reference(cfg, &diag);
    EXPECT_EQ(S.state_dim(), 500u);
    EXPECT_EQ(S.count(), 720u);
    EXPECT_NEAR(S.times().front(), 0.025, 1e-15);
    EXPECT_NEAR(S.times().back(), 18.0, 1e-9);
    EXPECT_FALSE(diag.diverged_at);
    EXPECT_LT(diag.max_mass_drift, 1e-3);
    EXPECT_LT(diag.max_cfl, 1.0);

    // viscous decay over the final 80% of the run
    const Matrix& X = S.states();
    double prev = X.col(144).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 145; j < X.cols(); ++j) {
        const double m = X.col(j).cwiseAbs().maxCoeff();
        EXPECT_LE(m, prev + 1e-12);
        prev = m;
    }
}

TEST(BurgersReference, HumpMovesTowardLargerZ) {
    BurgersConfig cfg;
    cfg.T = 2.0;
    const auto S = simulate_burgers_reference(cfg);
    Eigen::Index start, end;
    burgers_initial_condition(cfg).maxCoeff(&start);
    S.states().col(S.states().cols() - 1).maxCoeff(&end);
    EXPECT_GT(end, start);
}

TEST(BurgersConfigTest, Validation) {
    BurgersConfig cfg;
    cfg.dz = 0.03;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = BurgersConfig{};
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = BurgersConfig{};
    cfg.nu = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}
