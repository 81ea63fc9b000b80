#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ddinfer/data.hpp"

namespace ddinfer {

enum class BlockKind {
    linear,
    quadratic_unique,
    input,
    constant,
    coupling_linear,
    coupling_quadratic,
    coupling_bilinear,
};

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& name);

// Regularization multipliers per feature-block kind.
struct BlockScales {
    double linear = 1.0;
    double quadratic = 1.0;
    double input = 1.0;
    double constant = 1.0;
    double coupling_linear = 1.0;
    double coupling_quadratic = 1.0;
    double coupling_bilinear = 1.0;

    double for_kind(BlockKind kind) const;
};

struct FeatureBlock {
    BlockKind kind;
    std::size_t size;
    double reg_scale = 1.0;
};

// Layout of the unknown vector of one least-squares row problem.
struct FeatureBlockSpec {
    std::vector<FeatureBlock> blocks;
    // Position of the self-coefficient inside the assembled unknown vector.
    std::optional<std::size_t> diag_index;

    std::size_t total() const;
    std::size_t offset(std::size_t block) const;
    // Index of the first block of the given kind, if any.
    std::optional<std::size_t> find(BlockKind kind) const;
    // Per-unknown regularization weights (the diagonal of S).
    Vector scale_diagonal() const;
    void validate() const;
};

// eta2 = factor * eta1 for every eta1 on the grid.
struct Eta2Multiple {
    double factor = 0.0;
};
// Independent eta2 grid; candidates form the Cartesian product with eta1_grid.
struct Eta2Grid {
    std::vector<double> values;
};

// How the two L-curve axes are put on a common scale. linear divides each by
// its maximum; log maps log10 of each onto [0, 1] over the candidate range.
enum class LCurveAxes { linear, log };

std::string to_string(LCurveAxes a);
LCurveAxes lcurve_axes_from_string(const std::string& s);

struct RegConfig {
    double eta1 = 0.0;  // Tikhonov weight
    double eta2 = 0.0;  // Gershgorin diagonal weight
    std::vector<double> eta1_grid;
    std::variant<Eta2Multiple, Eta2Grid> eta2_rule = Eta2Multiple{};
    BlockScales scales;
    LCurveAxes axes = LCurveAxes::linear;

    bool selects() const { return !eta1_grid.empty(); }
    // (eta1, eta2) pairs to try; the fixed pair when no grid is configured.
    std::vector<std::pair<double, double>> candidates() const;
    void validate() const;

    // `count` logarithmically spaced values between lo and hi (inclusive, either order).
    static std::vector<double> log_grid(double lo, double hi, std::size_t count);
};

// Unique quadratic products of the rows of Z: row (i, j), i <= j in
// lexicographic order, holds Z_i .* Z_j.
Matrix quadratic_unique_features(const Matrix& Z);

// Products Z1_i .* Z2_j with i-major row order.
Matrix bilinear_features(const Matrix& Z1, const Matrix& Z2);

// Vector forms of the two lifts, writing into preallocated storage.
void quadratic_unique_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out);
void bilinear_into(const Eigen::Ref<const Vector>& z1, const Eigen::Ref<const Vector>& z2, Eigen::Ref<Vector> out);

inline std::size_t unique_quadratic_count(std::size_t m) { return m * (m + 1) / 2; }

// One point of an L-curve: the hyperparameters and the resulting fit error
// (residual norm of the unregularized objective) and solution norm.
struct LCurvePoint {
    double eta1 = 0.0;
    double eta2 = 0.0;
    double fit_error = 0.0;
    double solution_norm = 0.0;
};

// Candidate nearest to the origin after normalizing both axes by their maxima.
// Ties go to the larger eta1.
LCurvePoint l_curve_select(std::span<const LCurvePoint> candidates, LCurveAxes axes = LCurveAxes::linear);

// Regularized least squares over a fixed data matrix D (m features x n_T)
// and targets Y (q rows x n_T). Each output row beta solves
//   (D D^T + eta1 S) beta = D y^T - eta2 e_diag.
// The Gram matrix is formed once and reused for every hyperparameter pair.
class GershgorinLeastSquares {
public:
    GershgorinLeastSquares(Matrix D, Matrix Y, FeatureBlockSpec spec);

    // Every row uses spec.diag_index.
    Matrix solve(double eta1, double eta2) const;
    // Row k uses diag[k]; diag.size() must equal the number of target rows.
    Matrix solve(double eta1, double eta2, std::span<const std::optional<std::size_t>> diag) const;

    // ||beta D - Y||_F
    double fit_error(const Matrix& beta) const;

    const Matrix& data() const { return D_; }
    const Matrix& targets() const { return Y_; }
    const FeatureBlockSpec& spec() const { return spec_; }

private:
    Matrix D_;
    Matrix Y_;
    FeatureBlockSpec spec_;
    Matrix gram_;
    Matrix rhs_;  // D Y^T, one column per target row
    Vector scale_;
};

// Closed-form Gershgorin-regularized solve with reg.eta1 / reg.eta2.
Matrix solve_gershgorin_ls(const Matrix& D, const Matrix& Y, const RegConfig& reg, const FeatureBlockSpec& spec);

}  // namespace ddinfer
