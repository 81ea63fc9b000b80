#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ddinfer/error.hpp"
#include "ddinfer/sfom.hpp"
#include "test_util.hpp"

using namespace ddinfer;

namespace {

Matrix heat_operator(std::size_t n, double nu, double dz) {
    const double a = nu / (dz * dz);
    Matrix A = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = -2.0 * a;
        A(i, (i + 1) % n) += a;
        A(i, (i + n - 1) % n) += a;
    }
    return A;
}

Matrix empty_rows(Eigen::Index cols) { return Matrix(0, cols); }

}  // namespace

TEST(IndexSets, Counts) {
    const auto chain = AdjacencyGraph::periodic_chain(8);
    const auto s = build_index_sets(chain, 3, 0);
    EXPECT_EQ(s.Q.size(), 3u);
    EXPECT_EQ(s.E_size, 6u);

    const AdjacencyGraph isolated(std::vector<std::vector<std::size_t>>{{0}});
    const auto iso = build_index_sets(isolated, 0, 4);
    EXPECT_EQ(iso.E_size, 1u);
    EXPECT_EQ(iso.G_size, 4u);

    const auto grid = AdjacencyGraph::grid2d(4, 4);
    EXPECT_EQ(build_index_sets(grid, 5, 0).E_size, 15u);
    EXPECT_THROW(build_index_sets(chain, 8, 0), InvalidArgument);
}

TEST(Graph, ShapesAndRestriction) {
    const auto p = AdjacencyGraph::path(5);
    EXPECT_EQ(p.neighbors(0), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(p.neighbors(2), (std::vector<std::size_t>{1, 2, 3}));
    const auto c = AdjacencyGraph::periodic_chain(5);
    EXPECT_EQ(c.neighbors(0), (std::vector<std::size_t>{0, 1, 4}));
    const std::vector<std::size_t> ids{2, 3, 4};
    const auto sub = c.restrict_to(ids);
    EXPECT_EQ(sub.size(), 3u);
    EXPECT_EQ(sub.neighbors(2), (std::vector<std::size_t>{1, 2}));
}

TEST(Sfom, HeatStencilOracle) {
    const std::size_t n = 50;
    const double nu = 0.01, dz = 0.02;
    const Matrix A = heat_operator(n, nu, dz);
    const Matrix X = testutil::random_matrix(n, 40, 11);
    const Matrix dX = A * X;
    const Matrix none = empty_rows(40);
    const SfomData data{X, dX, none, none};
    const auto g = AdjacencyGraph::periodic_chain(n);
    const auto M = infer_sfom(g, data, {}, ModelStructure{}, RegConfig{});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = M.rows[i];
        for (std::size_t k = 0; k < row.Q.size(); ++k) {
            const double expected = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(row.Q[k]));
            EXPECT_NEAR(row.linear(static_cast<Eigen::Index>(k)), expected, 1e-6 * 50.0);
        }
    }
    EXPECT_LE((M.linear_operator() - A).norm(), 1e-6 * A.norm());
}

TEST(Sfom, ScalarDecay) {
    const int nt = 30;
    Matrix X(1, nt);
    for (int j = 0; j < nt; ++j) X(0, j) = std::exp(-0.1 * j);
    const Matrix dX = -X;
    const Matrix none = empty_rows(nt);
    const AdjacencyGraph g(std::vector<std::vector<std::size_t>>{{0}});
    const auto M = infer_sfom(g, SfomData{X, dX, none, none}, {}, ModelStructure{}, RegConfig{});
    EXPECT_NEAR(M.rows[0].linear(0), -1.0, 1e-8);
}

TEST(Sfom, PathDiffusionRecovered) {
    const std::size_t n = 10;
    Matrix A = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = -2.0 - 0.1 * i;
        if (i > 0) A(i, i - 1) = 1.0;
        if (i + 1 < n) A(i, i + 1) = 0.5;
    }
    const Matrix X = testutil::random_matrix(n, 30, 12);
    const Matrix dX = A * X;
    const Matrix none = empty_rows(30);
    const auto M = infer_sfom(AdjacencyGraph::path(n), SfomData{X, dX, none, none}, {}, ModelStructure{}, RegConfig{});
    EXPECT_LE((M.linear_operator() - A).norm(), 1e-6 * A.norm());
    EXPECT_LE(M.nonzeros(), 3 * n);
}

TEST(Sfom, CouplingGatedToInterfaceRows) {
    const std::size_t n = 6;
    const Matrix X = testutil::random_matrix(n, 40, 13);
    const Matrix dX = testutil::random_matrix(n, 40, 14);
    const Matrix Xhat = testutil::random_matrix(2, 40, 15);
    const Matrix none = empty_rows(40);
    RegConfig reg;
    reg.eta1 = 1e-3;
    const std::vector<std::size_t> iface{0};
    const auto M = infer_sfom(AdjacencyGraph::path(n), SfomData{X, dX, Xhat, none}, iface,
                              ModelStructure{true, true, false, false}, reg);
    EXPECT_EQ(M.rows[0].coupling_linear.size(), 2);
    EXPECT_EQ(M.rows[0].coupling_quadratic.size(), 3);
    EXPECT_EQ(M.rows[0].coupling_bilinear.size(), 2 * 2);
    for (std::size_t i = 1; i < n; ++i) {
        EXPECT_TRUE(M.rows[i].coupling_linear.size() == 0 || M.rows[i].coupling_linear.isZero());
        EXPECT_TRUE(M.rows[i].coupling_bilinear.size() == 0 || M.rows[i].coupling_bilinear.isZero());
    }
    EXPECT_EQ(M.coupling_operator().rows(), static_cast<Eigen::Index>(n));
    EXPECT_EQ(M.coupling_operator().row(3).norm(), 0.0);
}

TEST(Sfom, EmptyInterfaceHasNoCoupling) {
    const Matrix X = testutil::random_matrix(4, 20, 16);
    const Matrix dX = testutil::random_matrix(4, 20, 17);
    const Matrix none = empty_rows(20);
    RegConfig reg;
    reg.eta1 = 1e-2;
    const auto M = infer_sfom(AdjacencyGraph::path(4), SfomData{X, dX, none, none}, {}, ModelStructure{}, reg);
    EXPECT_EQ(M.coupling_operator().norm(), 0.0);
}

TEST(Sfom, GershgorinLowersSelfCoefficient) {
    const std::size_t n = 12;
    const Matrix X = testutil::random_matrix(n, 25, 18);
    const Matrix dX = heat_operator(n, 0.01, 0.1) * X + 0.2 * testutil::random_matrix(n, 25, 19);
    const Matrix none = empty_rows(25);
    const auto g = AdjacencyGraph::periodic_chain(n);
    RegConfig r0;
    r0.eta1 = 0.1;
    RegConfig r1 = r0;
    r1.eta2 = 0.5;
    const auto M0 = infer_sfom(g, SfomData{X, dX, none, none}, {}, ModelStructure{}, r0);
    const auto M1 = infer_sfom(g, SfomData{X, dX, none, none}, {}, ModelStructure{}, r1);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_LE(M1.rows[i].self_coefficient(i), M0.rows[i].self_coefficient(i) + 1e-14);
}

TEST(Pooling, CongruenceRules) {
    const auto chain = AdjacencyGraph::periodic_chain(10);
    // the two wrap rows see different index offsets, so they are not congruent to interior rows
    EXPECT_EQ(congruent_rows(chain, {}, 4).size(), 8u);
    const std::vector<std::size_t> iface{0, 9};
    const auto c = congruent_rows(chain, iface, 4);
    EXPECT_EQ(c.size(), 8u);
    EXPECT_EQ(std::count(c.begin(), c.end(), 0u), 0);
    EXPECT_EQ(congruent_rows(chain, iface, 0), (std::vector<std::size_t>{0}));

    const auto path = AdjacencyGraph::path(10);
    EXPECT_EQ(congruent_rows(path, {}, 0).size(), 1u);
    EXPECT_EQ(congruent_rows(path, {}, 5).size(), 8u);
}

TEST(Pooling, SeededSelectionIncludesRowFirst) {
    const auto chain = AdjacencyGraph::periodic_chain(40);
    const auto a = pooled_rows_for(chain, {}, 7, 5, 42);
    const auto b = pooled_rows_for(chain, {}, 7, 5, 42);
    ASSERT_EQ(a.size(), 5u);
    EXPECT_EQ(a.front(), 7u);
    EXPECT_EQ(a, b);
    std::vector<std::size_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
    EXPECT_EQ(pooled_rows_for(chain, {}, 7, 1, 42), (std::vector<std::size_t>{7}));
}

TEST(Pooling, NoiselessConstantStencilMatchesUnpooled) {
    const std::size_t n = 30;
    const Matrix A = heat_operator(n, 0.01, 0.02);
    const Matrix X = testutil::random_matrix(n, 20, 20);
    const Matrix dX = A * X;
    const Matrix none = empty_rows(20);
    const auto g = AdjacencyGraph::periodic_chain(n);
    SfomOptions pooled;
    pooled.pool_size = 5;
    pooled.seed = 3;
    const auto M1 = infer_sfom(g, SfomData{X, dX, none, none}, {}, ModelStructure{}, RegConfig{});
    const auto M5 = infer_sfom(g, SfomData{X, dX, none, none}, {}, ModelStructure{}, RegConfig{}, pooled);
    EXPECT_LE((M1.linear_operator() - M5.linear_operator()).norm(), 1e-8 * A.norm());
}

TEST(SparseRhs, MatchesAssembledOperator) {
    const std::size_t n = 40;
    const Matrix A = heat_operator(n, 0.01, 0.02);
    const Matrix X = testutil::random_matrix(n, 15, 21);
    const Matrix dX = A * X;
    const Matrix none = empty_rows(15);
    const auto M = infer_sfom(AdjacencyGraph::periodic_chain(n), SfomData{X, dX, none, none}, {}, ModelStructure{},
                              RegConfig{});
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x(i) = std::sin(2.0 * std::numbers::pi * i / n);
    const Vector f = evaluate_sparse_rhs(M, x);
    EXPECT_LE((f - M.linear_operator() * x).norm(), 1e-12 * (1.0 + f.norm()));
}

TEST(SparseRhs, ZeroAndConstantModels) {
    SparseQuadModel M;
    M.n_F = 1;
    M.structure = ModelStructure{false, false, false, true};
    SparseRow row;
    row.Q = {0};
    row.constant = 3.0;
    M.rows.push_back(row);
    EXPECT_DOUBLE_EQ(evaluate_sparse_rhs(M, Vector::Zero(1))(0), 3.0);
    M.rows[0].constant = 0.0;
    EXPECT_DOUBLE_EQ(evaluate_sparse_rhs(M, Vector::Ones(1))(0), 0.0);
    EXPECT_THROW(evaluate_sparse_rhs(M, Vector::Zero(2)), InvalidArgument);
}
