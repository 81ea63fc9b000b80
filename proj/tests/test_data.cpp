#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "ddinfer/data.hpp"
#include "ddinfer/error.hpp"
#include "test_util.hpp"

using namespace ddinfer;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::vector<double> uniform_times(std::size_t n, double dt, double t0 = 0.0) {
    std::vector<double> t(n);
    for (std::size_t j = 0; j < n; ++j) t[j] = t0 + static_cast<double>(j) * dt;
    return t;
}

}  // namespace

TEST(MatrixIo, CsvReadsRowsInOrder) {
    testutil::TempDir dir("csv");
    write_text(dir / "m.csv", "1,2\n3,4");
    const Matrix M = load_matrix(dir / "m.csv");
    ASSERT_EQ(M.rows(), 2);
    ASSERT_EQ(M.cols(), 2);
    EXPECT_EQ(M(0, 0), 1.0);
    EXPECT_EQ(M(0, 1), 2.0);
    EXPECT_EQ(M(1, 0), 3.0);
    EXPECT_EQ(M(1, 1), 4.0);
}

TEST(MatrixIo, CsvRaggedRowsRejected) {
    testutil::TempDir dir("csv");
    write_text(dir / "m.csv", "1,2,3\n4,5\n");
    EXPECT_THROW(load_matrix(dir / "m.csv"), ParseError);
}

TEST(MatrixIo, CsvBadNumberRejected) {
    testutil::TempDir dir("csv");
    write_text(dir / "m.csv", "1,abc\n");
    EXPECT_THROW(load_matrix(dir / "m.csv"), ParseError);
    write_text(dir / "n.csv", "1,2,\n");
    EXPECT_THROW(load_matrix(dir / "n.csv"), ParseError);
}

TEST(MatrixIo, FmatRoundTripIsBitExact) {
    testutil::TempDir dir("fmat");
    Matrix M = testutil::random_matrix(5, 7, 3);
    M(0, 0) = -0.0;
    M(1, 2) = 1e-308;
    M(4, 6) = std::nextafter(1.0, 2.0);
    save_matrix(dir / "m.fmat", M);
    const Matrix R = load_matrix(dir / "m.fmat");
    ASSERT_EQ(R.rows(), 5);
    ASSERT_EQ(R.cols(), 7);
    EXPECT_EQ(std::memcmp(M.data(), R.data(), sizeof(double) * 35), 0);
}

TEST(MatrixIo, FmatLayoutIsColumnMajorLittleEndian) {
    testutil::TempDir dir("fmat");
    Matrix M(2, 2);
    M << 1, 2, 3, 4;
    save_matrix(dir / "m.fmat", M);
    std::ifstream in(dir / "m.fmat", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    ASSERT_EQ(bytes.size(), 4u + 16u + 32u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FMAT");
    EXPECT_EQ(bytes[4], 2);
    EXPECT_EQ(bytes[12], 2);
    double second;
    std::memcpy(&second, bytes.data() + 20 + 8, 8);
    EXPECT_EQ(second, 3.0);  // column-major: (1,0) follows (0,0)
}

TEST(MatrixIo, FmatMalformedHeaderAndTruncation) {
    testutil::TempDir dir("fmat");
    write_text(dir / "bad.fmat", "FMAX0000000000000000");
    EXPECT_THROW(load_matrix(dir / "bad.fmat"), ParseError);

    Matrix M = Matrix::Ones(3, 3);
    save_matrix(dir / "m.fmat", M);
    std::filesystem::resize_file(dir / "m.fmat", 4 + 16 + 8 * 5);
    EXPECT_THROW(load_matrix(dir / "m.fmat"), ParseError);

    // dimensions whose product overflows
    std::string huge = "FMAT";
    for (int k = 0; k < 16; ++k) huge.push_back(static_cast<char>(0xff));
    write_text(dir / "huge.fmat", huge);
    EXPECT_THROW(load_matrix(dir / "huge.fmat"), ParseError);
}

TEST(MatrixIo, MissingFileIsIoError) {
    EXPECT_THROW(load_matrix("/nonexistent/dir/m.fmat"), IoError);
}

TEST(Derivative, LinearRampIsExact) {
    const auto t = uniform_times(9, 0.3, 1.0);
    Matrix X(2, 9);
    for (int j = 0; j < 9; ++j) {
        X(0, j) = t[j];
        X(1, j) = 3.0 * t[j] - 1.0;
    }
    const Matrix D = estimate_time_derivative(X, t);
    for (int j = 0; j < 9; ++j) {
        EXPECT_NEAR(D(0, j), 1.0, 1e-12);
        EXPECT_NEAR(D(1, j), 3.0, 1e-12);
    }
}

TEST(Derivative, QuadraticExactEverywhere) {
    const auto t = uniform_times(7, 0.5, -1.0);
    Matrix X(1, 7);
    for (int j = 0; j < 7; ++j) X(0, j) = t[j] * t[j] - 2.0 * t[j] + 0.5;
    const Matrix D = estimate_time_derivative(X, t);
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(D(0, j), 2.0 * t[j] - 2.0, 1e-12);
}

TEST(Derivative, NonUniformGridExactForQuadratics) {
    const std::vector<double> t{0.0, 0.1, 0.35, 0.4, 0.9, 1.0};
    Matrix X(1, 6);
    for (int j = 0; j < 6; ++j) X(0, j) = 4.0 * t[j] * t[j] + t[j];
    const Matrix D = estimate_time_derivative(X, t);
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(D(0, j), 8.0 * t[j] + 1.0, 1e-11);
}

TEST(Derivative, SineErrorWithinSecondOrderBound) {
    const double dt = 0.025;
    const auto t = uniform_times(400, dt);
    Matrix X(1, 400);
    for (int j = 0; j < 400; ++j) X(0, j) = std::sin(t[j]);
    const Matrix D = estimate_time_derivative(X, t);
    double worst = 0.0;
    for (int j = 1; j < 399; ++j) worst = std::max(worst, std::abs(D(0, j) - std::cos(t[j])));
    EXPECT_LE(worst, dt * dt / 6.0 + 1e-12);
}

TEST(Derivative, NeedsThreeSnapshots) {
    Matrix X = Matrix::Ones(2, 2);
    const std::vector<double> t{0.0, 1.0};
    EXPECT_THROW(estimate_time_derivative(X, t), InvalidArgument);
}

TEST(Snapshots, UniformFlag) {
    SnapshotSet a(Matrix::Zero(1, 4), uniform_times(4, 0.1));
    EXPECT_TRUE(a.uniform());
    SnapshotSet b(Matrix::Zero(1, 3), {0.0, 0.1, 0.3});
    EXPECT_FALSE(b.uniform());
}

TEST(Snapshots, RejectsInconsistentShapes) {
    EXPECT_THROW(SnapshotSet(Matrix::Zero(2, 3), {0.0, 1.0}), InvalidArgument);
    EXPECT_THROW(SnapshotSet(Matrix::Zero(2, 3), {0.0, 1.0, 1.0}), InvalidArgument);
    EXPECT_THROW(SnapshotSet(Matrix::Zero(2, 3), {0.0, 1.0, 2.0}, Matrix::Zero(1, 2)), InvalidArgument);
}

TEST(Split, HalfAndHalf) {
    const auto t = uniform_times(720, 0.025, 0.025);
    SnapshotSet S(testutil::random_matrix(3, 720, 1), t);
    const auto [train, test] = split_train_test(S, 9.0);
    EXPECT_EQ(train.count(), 360u);
    EXPECT_EQ(test.count(), 360u);
}

TEST(Split, BoundaryAndPartition) {
    const auto t = uniform_times(6, 1.0);
    const Matrix X = testutil::random_matrix(2, 6, 2);
    SnapshotSet S(X, t);
    const auto [train, test] = split_train_test(S, 0.5);
    EXPECT_EQ(train.count(), 1u);
    EXPECT_EQ(test.count(), 5u);
    Matrix joined(2, 6);
    joined << train.states(), test.states();
    EXPECT_EQ(joined, X);
}

TEST(Split, OutOfRangeThrows) {
    SnapshotSet S(Matrix::Zero(1, 4), uniform_times(4, 1.0));
    EXPECT_THROW(split_train_test(S, 3.5), InvalidArgument);
    EXPECT_THROW(split_train_test(S, -1.0), InvalidArgument);
}

TEST(TimeGridTest, Values) {
    const auto g = TimeGrid::make(1.0, 0.5, 4);
    EXPECT_DOUBLE_EQ(g.at(3), 2.5);
    EXPECT_EQ(g.times().size(), 4u);
    EXPECT_THROW(TimeGrid::make(0.0, 0.0, 4), InvalidArgument);
    EXPECT_THROW(TimeGrid::make(0.0, 0.1, 1), InvalidArgument);
}
