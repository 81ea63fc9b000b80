#include "ddinfer/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ddinfer/error.hpp"

namespace ddinfer {

bool DiskSet::covers(std::complex<double> z, double tol) const {
    for (const auto& d : disks)
        if (std::abs(z - std::complex<double>(d.center, 0.0)) <= d.radius + tol) return true;
    return false;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& A) {
    if (A.rows() != A.cols()) throw InvalidArgument("eigenvalues: matrix must be square");
    if (!A.allFinite()) throw NumericalError("eigenvalues: matrix has non-finite entries");
    if (A.size() == 0) return {};
    Eigen::EigenSolver<Matrix> solver(A, false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: eigensolver did not converge");
    const auto& ev = solver.eigenvalues();
    return std::vector<std::complex<double>>(ev.data(), ev.data() + ev.size());
}

DiskSet gershgorin_disks(const Matrix& A, const SpectrumOptions& options) {
    if (A.rows() != A.cols()) throw InvalidArgument("Gershgorin disks: matrix must be square");
    DiskSet set;
    set.disks.reserve(static_cast<std::size_t>(A.rows()));
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double center = A(i, i);
        set.disks.push_back({center, A.row(i).cwiseAbs().sum() - std::abs(center)});
    }
    try {
        set.eigenvalues = eigenvalues(A);
    } catch (const Error& e) {
        set.eigensolver_error = e.what();
        return set;
    }
    if (static_cast<std::size_t>(A.rows()) > options.dense_limit && set.eigenvalues.size() > options.sample_count) {
        std::vector<std::complex<double>> sample;
        std::mt19937_64 rng(options.seed);
        std::sample(set.eigenvalues.begin(), set.eigenvalues.end(), std::back_inserter(sample),
                    static_cast<std::ptrdiff_t>(options.sample_count), rng);
        set.eigenvalues = std::move(sample);
        set.eigenvalues_sampled = true;
    }
    return set;
}

StabilityVerdict stability_check(const Matrix& A, double margin) {
    if (!(margin >= 0.0)) throw InvalidArgument("stability check: margin must be nonnegative");
    const auto ev = eigenvalues(A);
    StabilityVerdict v;
    v.max_real_part = -std::numeric_limits<double>::infinity();
    for (const auto& l : ev) v.max_real_part = std::max(v.max_real_part, l.real());
    v.stable = v.max_real_part < -margin;
    return v;
}

double relative_error(const Matrix& prediction, const Matrix& reference) {
    if (prediction.rows() != reference.rows() || prediction.cols() != reference.cols())
        throw InvalidArgument("relative error: shapes differ");
    const double denom = reference.norm();
    if (denom == 0.0) throw NumericalError("relative error: reference has zero norm");
    return (prediction - reference).norm() / denom;
}

std::vector<double> relative_error_per_step(const Matrix& prediction, const Matrix& reference) {
    if (prediction.rows() != reference.rows() || prediction.cols() != reference.cols())
        throw InvalidArgument("relative error: shapes differ");
    std::vector<double> out(static_cast<std::size_t>(reference.cols()));
    for (Eigen::Index j = 0; j < reference.cols(); ++j) {
        const double denom = reference.col(j).cwiseAbs().mean();
        if (denom == 0.0) throw NumericalError("relative error: reference column " + std::to_string(j) + " is zero");
        out[static_cast<std::size_t>(j)] = (prediction.col(j) - reference.col(j)).cwiseAbs().mean() / denom;
    }
    return out;
}

double projection_baseline(const Matrix& X_test, const ReducedBasis& basis) {
    if (X_test.rows() != basis.V.rows()) throw InvalidArgument("projection baseline: row count differs from basis");
    const double denom = X_test.norm();
    if (denom == 0.0) throw NumericalError("projection baseline: test data has zero norm");
    return (X_test - basis.V * (basis.V.transpose() * X_test)).norm() / denom;
}

}  // namespace ddinfer
