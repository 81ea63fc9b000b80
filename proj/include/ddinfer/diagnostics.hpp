#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddinfer/data.hpp"
#include "ddinfer/pod.hpp"

namespace ddinfer {

struct GershgorinDisk {
    double center = 0.0;
    double radius = 0.0;
};

struct DiskSet {
    std::vector<GershgorinDisk> disks;
    std::vector<std::complex<double>> eigenvalues;
    bool eigenvalues_sampled = false;  // true when only a random subset is reported
    std::optional<std::string> eigensolver_error;

    // Whether z lies in at least one disk (with absolute slack tol).
    bool covers(std::complex<double> z, double tol = 1e-8) const;
};

struct SpectrumOptions {
    std::size_t dense_limit = 2000;  // above this order only `sample_count` eigenvalues are reported
    std::size_t sample_count = 30;
    std::uint64_t seed = 0;
};

DiskSet gershgorin_disks(const Matrix& A, const SpectrumOptions& options = {});

// Eigenvalues of a real square matrix. Throws NumericalError on solver failure.
std::vector<std::complex<double>> eigenvalues(const Matrix& A);

struct StabilityVerdict {
    bool stable = false;
    double max_real_part = 0.0;
};

// Stable iff every eigenvalue has real part < -margin.
StabilityVerdict stability_check(const Matrix& A, double margin = 0.0);

enum class ErrorNormalization { frobenius, per_step_mean_state };

// ||P - R||_F / ||R||_F.
double relative_error(const Matrix& prediction, const Matrix& reference);
// Per column: mean|P - R| / mean|R|.
std::vector<double> relative_error_per_step(const Matrix& prediction, const Matrix& reference);

// ||X - V V^T X||_F / ||X||_F, the best error reachable inside span(V).
double projection_baseline(const Matrix& X_test, const ReducedBasis& basis);

}  // namespace ddinfer
