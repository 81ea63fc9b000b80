#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ddinfer/data.hpp"
#include "ddinfer/regression.hpp"

namespace ddinfer {

// Which polynomial terms a model carries.
struct ModelStructure {
    bool linear = true;
    bool quadratic = false;
    bool input = false;
    bool constant = false;

    // Parses names from {"linear", "quadratic", "input", "constant"}.
    static ModelStructure from_terms(const std::vector<std::string>& terms);
    std::vector<std::string> terms() const;
};

// dx/dt = A x + Hc q(x) + B u + c, with q the unique quadratic lift.
// Absent terms are stored as matrices with zero columns.
struct QuadModel {
    Matrix A;   // p x p
    Matrix Hc;  // p x p(p+1)/2 (compressed, symmetric-sum convention)
    Matrix B;   // p x k
    Vector c;   // p (zero vector when no constant term)

    std::size_t order() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(B.cols()); }
    bool has_quadratic() const { return Hc.cols() > 0; }

    Vector rhs(const Vector& x, const Vector& u = Vector()) const;
    void validate() const;
};

// Reduced model whose right-hand side also reads full-order interface values x_I.
struct CoupledReducedModel {
    QuadModel core;                          // A_RR, H_RRR, B_R, c_R
    Matrix A_RI;                             // r x n_I
    Matrix H_RII;                            // r x n_I(n_I+1)/2
    Matrix H_RRI;                            // r x r*n_I, i-major over the reduced index
    std::vector<std::size_t> interface_ids;  // global DOF ids of x_I

    std::size_t order() const { return core.order(); }
    std::size_t interface_dim() const { return interface_ids.size(); }
    void validate() const;
};

// Hyperparameters chosen for one inference problem plus the L-curve that led there.
struct RegularizationReport {
    LCurvePoint chosen;
    std::vector<LCurvePoint> curve;
    std::vector<std::string> warnings;
};

// Compressed form of a full quadratic operator H (p x p^2): the column for
// (i, j), i < j, stores H(:, i*p + j) + H(:, j*p + i).
Matrix compress_quadratic(const Matrix& H);
// Full operator whose symmetric part reproduces Hc.
Matrix expand_quadratic(const Matrix& Hc);

// Number of unknowns per row of the standalone reduced problem.
std::size_t opinf_unknown_count(std::size_t r, std::size_t k, const ModelStructure& structure);

QuadModel infer_opinf(const Matrix& Xhat, const Matrix& U, const Matrix& dXhat, const ModelStructure& structure,
                      const RegConfig& reg, RegularizationReport* report = nullptr);

// Reduced inference with interface coupling blocks. X_I rows follow interface_ids.
CoupledReducedModel infer_opinf_coupled(const Matrix& Xhat_R, const Matrix& X_I,
                                        std::vector<std::size_t> interface_ids, const Matrix& U_R,
                                        const Matrix& dXhat_R, const ModelStructure& structure, const RegConfig& reg,
                                        RegularizationReport* report = nullptr);

Vector evaluate_reduced_rhs(const CoupledReducedModel& M, const Vector& xhat, const Vector& x_I,
                            const Vector& u = Vector());

}  // namespace ddinfer
