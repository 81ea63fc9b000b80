#include <cmath>

#include <gtest/gtest.h>

#include "ddinfer/error.hpp"
#include "ddinfer/opinf.hpp"
#include "ddinfer/pod.hpp"
#include "test_util.hpp"

using namespace ddinfer;

namespace {

RegConfig no_reg() { return RegConfig{}; }

Vector kron_self(const Vector& x) {
    const auto p = x.size();
    Vector k(p * p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) k(i * p + j) = x(i) * x(j);
    return k;
}

// Stable test operator: shifted random matrix with spectrum in the left half plane.
Matrix stable_operator(Eigen::Index n, unsigned seed) {
    Matrix A = testutil::random_matrix(n, n, seed) / std::sqrt(static_cast<double>(n));
    A -= 2.0 * Matrix::Identity(n, n);
    return A;
}

}  // namespace

TEST(OpInf, IntrusiveEquivalenceOracle) {
    const int n = 20, nt = 100;
    const Matrix A = stable_operator(n, 7);
    Matrix X(n, nt);
    X.col(0) = testutil::random_matrix(n, 1, 8);
    // forward Euler keeps the columns varied; derivatives are taken exactly as A X
    for (int j = 1; j < nt; ++j) X.col(j) = X.col(j - 1) + 0.01 * (A * X.col(j - 1)) +
                                          0.05 * testutil::random_matrix(n, 1, 100 + j);
    const Matrix dX = A * X;
    const auto B = compute_basis(X, FixedRank{20});
    const Matrix Xhat = project(X, B);
    const Matrix dXhat = project(dX, B);
    const QuadModel M = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{}, no_reg());
    const Matrix expected = B.V.transpose() * A * B.V;
    EXPECT_LE((M.A - expected).norm() / expected.norm(), 1e-8);
}

TEST(OpInf, ConstantDataZeroTarget) {
    const Matrix Xhat = Matrix::Ones(1, 10);
    const Matrix dXhat = Matrix::Zero(1, 10);
    RegConfig reg;
    reg.eta1 = 0.1;
    const QuadModel M = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{}, reg);
    ASSERT_EQ(M.A.rows(), 1);
    EXPECT_EQ(M.A(0, 0), 0.0);
}

TEST(OpInf, UnknownCount) {
    EXPECT_EQ(opinf_unknown_count(10, 0, ModelStructure{true, true, false, true}), 66u);
    EXPECT_EQ(opinf_unknown_count(4, 2, ModelStructure{true, false, true, false}), 6u);
}

TEST(OpInf, QuadraticExactRecovery) {
    const int r = 3, nt = 60;
    const Matrix A = stable_operator(r, 3);
    const Matrix Hc = 0.3 * testutil::random_matrix(r, r * (r + 1) / 2, 4);
    Vector c(r);
    c << 0.1, -0.2, 0.05;
    const Matrix Xhat = testutil::random_matrix(r, nt, 5);
    const Matrix dXhat = A * Xhat + Hc * quadratic_unique_features(Xhat) + c * Matrix::Ones(1, nt);
    const QuadModel M = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{true, true, false, true}, no_reg());
    EXPECT_LE((M.A - A).norm(), 1e-9 * A.norm());
    EXPECT_LE((M.Hc - Hc).norm(), 1e-9 * Hc.norm());
    EXPECT_LE((M.c - c).norm(), 1e-9 * c.norm());
}

TEST(OpInf, InputTermRecovery) {
    const int r = 2, nt = 40;
    const Matrix A = stable_operator(r, 9);
    const Matrix Bm = testutil::random_matrix(r, 1, 10);
    const Matrix Xhat = testutil::random_matrix(r, nt, 11);
    const Matrix U = testutil::random_matrix(1, nt, 12);
    const Matrix dXhat = A * Xhat + Bm * U;
    const QuadModel M = infer_opinf(Xhat, U, dXhat, ModelStructure{true, false, true, false}, no_reg());
    EXPECT_LE((M.B - Bm).norm(), 1e-9);
    EXPECT_LE((M.rhs(Xhat.col(3), U.col(3)) - dXhat.col(3)).norm(), 1e-9);
}

TEST(OpInf, CompressionConsistency) {
    for (int p : {1, 2, 4, 7}) {
        const Matrix H = testutil::random_matrix(p, p * p, static_cast<unsigned>(p));
        const Matrix Hc = compress_quadratic(H);
        ASSERT_EQ(Hc.cols(), p * (p + 1) / 2);
        for (unsigned s = 0; s < 5; ++s) {
            const Vector x = testutil::random_matrix(p, 1, 50 + s);
            Matrix xm = x;
            const Vector lhs = Hc * quadratic_unique_features(xm).col(0);
            const Vector rhs = H * kron_self(x);
            EXPECT_LE((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm()));
        }
        const Matrix back = compress_quadratic(expand_quadratic(Hc));
        EXPECT_LE((back - Hc).norm(), 1e-12 * (1.0 + Hc.norm()));
    }
}

TEST(OpInf, GershgorinShiftLowersDiagonal) {
    const int r = 4, nt = 50;
    const Matrix Xhat = testutil::random_matrix(r, nt, 21);
    const Matrix dXhat = stable_operator(r, 22) * Xhat + 0.1 * testutil::random_matrix(r, nt, 23);
    RegConfig base;
    base.eta1 = 0.5;
    RegConfig shifted = base;
    shifted.eta2 = 2.0;
    const QuadModel M0 = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{}, base);
    const QuadModel M1 = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{}, shifted);
    for (int i = 0; i < r; ++i) EXPECT_LT(M1.A(i, i), M0.A(i, i));
}

TEST(OpInf, LCurveReportListsEveryCandidate) {
    const Matrix Xhat = testutil::random_matrix(3, 40, 31);
    const Matrix dXhat = stable_operator(3, 32) * Xhat + 0.01 * testutil::random_matrix(3, 40, 33);
    RegConfig reg;
    reg.eta1_grid = RegConfig::log_grid(1e-3, 1.0, 20);
    reg.eta2_rule = Eta2Multiple{0.05};
    RegularizationReport rep;
    infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{true, true, false, false}, reg, &rep);
    EXPECT_EQ(rep.curve.size(), 20u);
    EXPECT_NEAR(rep.chosen.eta2, 0.05 * rep.chosen.eta1, 1e-15);
}

TEST(OpInf, UnderdeterminedWarnsButSolves) {
    const Matrix Xhat = testutil::random_matrix(4, 8, 41);
    const Matrix dXhat = testutil::random_matrix(4, 8, 42);
    RegConfig reg;
    reg.eta1 = 1e-2;
    RegularizationReport rep;
    const QuadModel M = infer_opinf(Xhat, Matrix(), dXhat, ModelStructure{true, true, false, true}, reg, &rep);
    EXPECT_FALSE(rep.warnings.empty());
    EXPECT_TRUE(M.A.allFinite());
}

TEST(CoupledOpInf, LinearShapeAndRecovery) {
    const int r = 4, ni = 3, nt = 50;
    const Matrix A_RR = stable_operator(r, 51);
    const Matrix A_RI = testutil::random_matrix(r, ni, 52);
    const Matrix Xhat = testutil::random_matrix(r, nt, 53);
    const Matrix X_I = testutil::random_matrix(ni, nt, 54);
    const Matrix dXhat = A_RR * Xhat + A_RI * X_I;
    const auto M = infer_opinf_coupled(Xhat, X_I, {7, 8, 9}, Matrix(), dXhat, ModelStructure{}, no_reg());
    EXPECT_EQ(M.core.A.cols() + M.A_RI.cols(), r + ni);
    EXPECT_LE((M.core.A - A_RR).norm(), 1e-8 * A_RR.norm());
    EXPECT_LE((M.A_RI - A_RI).norm(), 1e-8 * A_RI.norm());
}

TEST(CoupledOpInf, QuadraticCouplingRecovery) {
    const int r = 2, ni = 2, nt = 80;
    const Matrix A_RR = stable_operator(r, 61);
    const Matrix A_RI = testutil::random_matrix(r, ni, 62);
    const Matrix H_RRR = testutil::random_matrix(r, 3, 63);
    const Matrix H_RII = testutil::random_matrix(r, 3, 64);
    const Matrix H_RRI = testutil::random_matrix(r, r * ni, 65);
    const Matrix Xhat = testutil::random_matrix(r, nt, 66);
    const Matrix X_I = testutil::random_matrix(ni, nt, 67);
    const Matrix dXhat = A_RR * Xhat + A_RI * X_I + H_RRR * quadratic_unique_features(Xhat) +
                         H_RII * quadratic_unique_features(X_I) + H_RRI * bilinear_features(Xhat, X_I);
    const auto M = infer_opinf_coupled(Xhat, X_I, {0, 1}, Matrix(), dXhat, ModelStructure{true, true, false, false},
                                       no_reg());
    EXPECT_LE((M.core.Hc - H_RRR).norm(), 1e-8);
    EXPECT_LE((M.H_RII - H_RII).norm(), 1e-8);
    EXPECT_LE((M.H_RRI - H_RRI).norm(), 1e-8);
    const Vector f = evaluate_reduced_rhs(M, Xhat.col(5), X_I.col(5));
    EXPECT_LE((f - dXhat.col(5)).norm(), 1e-8);
}

TEST(CoupledOpInf, NoInterfaceMatchesStandalone) {
    const Matrix Xhat = testutil::random_matrix(3, 30, 71);
    const Matrix dXhat = testutil::random_matrix(3, 30, 72);
    RegConfig reg;
    reg.eta1 = 0.3;
    reg.eta2 = 0.1;
    const ModelStructure st{true, true, false, true};
    const QuadModel a = infer_opinf(Xhat, Matrix(), dXhat, st, reg);
    const auto b = infer_opinf_coupled(Xhat, Matrix(0, 30), {}, Matrix(), dXhat, st, reg);
    EXPECT_EQ(a.A, b.core.A);
    EXPECT_EQ(a.Hc, b.core.Hc);
    EXPECT_EQ(a.c, b.core.c);
}

TEST(CoupledOpInf, InterfaceCountMismatch) {
    const Matrix Xhat = testutil::random_matrix(2, 10, 1);
    const Matrix X_I = testutil::random_matrix(2, 10, 2);
    EXPECT_THROW(infer_opinf_coupled(Xhat, X_I, {4}, Matrix(), Xhat, ModelStructure{}, no_reg()), InvalidArgument);
}

TEST(ReducedRhs, Examples) {
    CoupledReducedModel M;
    M.core.A = Matrix::Zero(2, 2);
    M.core.Hc = Matrix::Zero(2, 3);
    M.core.B = Matrix::Zero(2, 0);
    M.core.c = Vector::Zero(2);
    M.A_RI = Matrix::Zero(2, 0);
    M.H_RII = Matrix::Zero(2, 0);
    M.H_RRI = Matrix::Zero(2, 0);
    Vector x(2);
    x << 3.0, 4.0;
    EXPECT_EQ(evaluate_reduced_rhs(M, x, Vector()), Vector::Zero(2));

    M.core.Hc(0, 0) = 1.0;
    EXPECT_DOUBLE_EQ(evaluate_reduced_rhs(M, x, Vector())(0), 9.0);

    M.core.Hc.setZero();
    M.core.A = Matrix::Identity(2, 2);
    const Vector e1 = Vector::Unit(2, 0);
    EXPECT_EQ(evaluate_reduced_rhs(M, e1, Vector()), e1);
}

TEST(Structure, TermNames) {
    const auto s = ModelStructure::from_terms({"linear", "quadratic", "constant"});
    EXPECT_TRUE(s.linear && s.quadratic && s.constant && !s.input);
    EXPECT_EQ(ModelStructure::from_terms(s.terms()).terms(), s.terms());
    EXPECT_THROW(ModelStructure::from_terms({"cubic"}), InvalidArgument);
}
