#pragma once

#include <cstddef>
#include <variant>

#include "ddinfer/data.hpp"

namespace ddinfer {

// Truncated POD basis: the leading r left singular vectors of a snapshot matrix.
struct ReducedBasis {
    Matrix V;      // n x r, orthonormal columns
    Vector sigma;  // all singular values, nonincreasing
    std::size_t r = 0;

    std::size_t full_dim() const { return static_cast<std::size_t>(V.rows()); }

    // Fraction of sum(sigma^2) captured by the first r singular values.
    double retained_energy() const;
};

struct FixedRank {
    std::size_t r;
};
struct EnergyFraction {
    double fraction;
};
using TruncationRule = std::variant<FixedRank, EnergyFraction>;

ReducedBasis compute_basis(const Matrix& X, const TruncationRule& rule);

// V^T X.
Matrix project(const Matrix& X, const ReducedBasis& basis);

// V Xhat.
Matrix reconstruct(const Matrix& Xhat, const ReducedBasis& basis);

// Normalized r-th singular value of two subdomain snapshot matrices. A ratio
// above one means the second (full-order candidate) matrix decays more slowly.
struct GapIndicator {
    double decay_rom = 0.0;
    double decay_fom = 0.0;
    double ratio = 1.0;
    bool saturated = false;  // one of the matrices has numerical rank below r
};

GapIndicator gap_indicator(const Matrix& X_rom, const Matrix& X_fom, std::size_t r);

// Singular values of X (thin SVD, no centering).
Vector singular_values(const Matrix& X);

}  // namespace ddinfer
