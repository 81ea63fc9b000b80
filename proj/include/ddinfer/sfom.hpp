#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ddinfer/data.hpp"
#include "ddinfer/opinf.hpp"
#include "ddinfer/regression.hpp"

namespace ddinfer {

// DOF adjacency. Every neighbor set contains the DOF itself and is sorted ascending.
class AdjacencyGraph {
public:
    AdjacencyGraph() = default;
    explicit AdjacencyGraph(std::vector<std::vector<std::size_t>> neighbors);

    static AdjacencyGraph path(std::size_t n);
    static AdjacencyGraph periodic_chain(std::size_t n);
    // 5-point stencil on an nx x ny grid, id = y * nx + x.
    static AdjacencyGraph grid2d(std::size_t nx, std::size_t ny);

    std::size_t size() const { return neighbors_.size(); }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
    const std::vector<std::vector<std::size_t>>& all_neighbors() const { return neighbors_; }

    // Subgraph induced by `ids` (sorted, unique) in local numbering 0..ids.size()-1.
    AdjacencyGraph restrict_to(std::span<const std::size_t> ids) const;

private:
    std::vector<std::vector<std::size_t>> neighbors_;
};

// Optional per-DOF input index lists (L_i).
using InputMap = std::vector<std::vector<std::size_t>>;

struct IndexSets {
    std::vector<std::size_t> Q;
    std::size_t E_size = 0;  // unique quadratic combinations of Q
    std::vector<std::size_t> L;
    std::size_t G_size = 0;  // bilinear combinations of Q with r reduced coordinates
};

IndexSets build_index_sets(const AdjacencyGraph& g, std::size_t i, std::size_t r, const InputMap* inputs = nullptr);

// Coefficients of one inferred sparse row. Absent blocks are empty vectors.
struct SparseRow {
    std::vector<std::size_t> Q;
    std::vector<std::size_t> L;
    bool interface = false;
    Vector linear;
    Vector quadratic;
    Vector coupling_linear;
    Vector coupling_quadratic;
    Vector coupling_bilinear;
    Vector input;
    double constant = 0.0;

    // Self-coefficient A_ii (0 when there is no linear block).
    double self_coefficient(std::size_t i) const;
};

struct SparseQuadModel {
    std::size_t n_F = 0;
    std::size_t r = 0;  // reduced coupling dimension (0 when standalone)
    ModelStructure structure;
    std::vector<SparseRow> rows;
    std::uint64_t seed = 0;

    // Dense n_F x n_F linear operator obtained by scattering each row over Q_i.
    Matrix linear_operator() const;
    // Dense n_F x r linear coupling operator A_FR.
    Matrix coupling_operator() const;
    std::size_t nonzeros() const;

    void rhs_into(const Vector& x_F, const Vector& xhat, const Vector& u, Eigen::Ref<Vector> out) const;
    void validate() const;
};

// Training data shared by all row problems. Xhat_R and U may have zero rows.
struct SfomData {
    const Matrix& X_F;
    const Matrix& dX_F;
    const Matrix& Xhat_R;
    const Matrix& U;
};

enum class SelectionMode { global, per_row };

struct SfomOptions {
    std::size_t pool_size = 1;        // rows per pooled problem, including the row itself
    std::uint64_t seed = 0;           // pooling and subsampling seed
    SelectionMode selection = SelectionMode::global;
    std::size_t subsample_rows = 20;  // rows used for global L-curve selection
    const InputMap* inputs = nullptr;
};

// Rows whose stencil geometry (relative offsets of Q_i, interface flag, input
// pattern) matches row i. Interface rows never pool.
std::vector<std::size_t> congruent_rows(const AdjacencyGraph& g, std::span<const std::size_t> interface_rows,
                                        std::size_t i, const InputMap* inputs = nullptr);

// Seeded uniform choice of the pooled rows for i (i itself first).
std::vector<std::size_t> pooled_rows_for(const AdjacencyGraph& g, std::span<const std::size_t> interface_rows,
                                         std::size_t i, std::size_t pool_size, std::uint64_t seed,
                                         const InputMap* inputs = nullptr);

// Assembled least-squares problem of one row (with pooling).
struct SfomRowProblem {
    Matrix D;
    Matrix y;  // 1 x columns
    FeatureBlockSpec spec;
};

SfomRowProblem assemble_sfom_row(std::size_t i, const SfomData& data, const AdjacencyGraph& g, bool interface,
                                 const ModelStructure& structure, const BlockScales& scales,
                                 std::span<const std::size_t> pooled_rows = {}, const InputMap* inputs = nullptr);

SparseRow infer_sfom_row(std::size_t i, const SfomData& data, const AdjacencyGraph& g, bool interface,
                         const ModelStructure& structure, const RegConfig& reg,
                         std::span<const std::size_t> pooled_rows = {}, const InputMap* inputs = nullptr,
                         RegularizationReport* report = nullptr);

// Infers every row. interface_rows are local indices into X_F's rows.
SparseQuadModel infer_sfom(const AdjacencyGraph& g, const SfomData& data, std::span<const std::size_t> interface_rows,
                           const ModelStructure& structure, const RegConfig& reg, const SfomOptions& options = {},
                           RegularizationReport* report = nullptr);

Vector evaluate_sparse_rhs(const SparseQuadModel& M, const Vector& x_F, const Vector& xhat = Vector(),
                           const Vector& u = Vector());

}  // namespace ddinfer
