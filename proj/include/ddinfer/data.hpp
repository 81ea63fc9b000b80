#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ddinfer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Uniform time grid t_j = t0 + j * dt, j = 0 .. count-1.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t count = 2;

    static TimeGrid make(double t0, double dt, std::size_t count);

    double at(std::size_t j) const { return t0 + static_cast<double>(j) * dt; }
    std::vector<double> times() const;
};

// State snapshots (one column per time instant) with optional inputs and derivatives.
class SnapshotSet {
public:
    SnapshotSet() = default;
    SnapshotSet(Matrix X, std::vector<double> times, Matrix U = {}, std::optional<Matrix> dXdt = std::nullopt);

    const Matrix& states() const { return X_; }
    const Matrix& inputs() const { return U_; }
    const std::vector<double>& times() const { return times_; }
    const std::optional<Matrix>& derivatives() const { return dXdt_; }

    std::size_t state_dim() const { return static_cast<std::size_t>(X_.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(U_.rows()); }
    std::size_t count() const { return times_.size(); }
    bool has_inputs() const { return U_.rows() > 0; }

    // True iff successive spacings deviate from their mean by less than 1e-12 * mean.
    bool uniform() const;

    // Derivative data if stored, otherwise the finite-difference estimate.
    Matrix derivatives_or_estimate() const;

    // Copy with columns [first, first + count).
    SnapshotSet columns(std::size_t first, std::size_t count) const;

private:
    Matrix X_;
    Matrix U_;
    std::vector<double> times_;
    std::optional<Matrix> dXdt_;
};

enum class MatrixFormat { csv, fmat };

// Picks the format from the file extension (".csv" or ".fmat").
MatrixFormat format_for(const std::filesystem::path& path);

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const Matrix& M, MatrixFormat format);
void save_matrix(const std::filesystem::path& path, const Matrix& M);

// Second-order finite differences along the columns of X: central (divided)
// differences at interior columns, three-point one-sided at both ends.
Matrix estimate_time_derivative(const Matrix& X, std::span<const double> times);

// Partition by time: train holds t <= t_split, test the remainder.
std::pair<SnapshotSet, SnapshotSet> split_train_test(const SnapshotSet& S, double t_split);

}  // namespace ddinfer
