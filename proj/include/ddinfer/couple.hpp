#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ddinfer/data.hpp"
#include "ddinfer/opinf.hpp"
#include "ddinfer/pod.hpp"
#include "ddinfer/sfom.hpp"

namespace ddinfer {

// Two-subdomain split of n DOFs. All ids are global (0-based).
//
// rom_ids holds the reduced side including the overlap strip, fom_ids the
// full-order side including the overlap. interface_ids are the full-order DOFs
// with a graph neighbor on the reduced-only side; their values drive the
// reduced model and they receive reduced-coordinate coupling terms.
struct DomainDecomposition {
    std::size_t n = 0;
    std::vector<std::size_t> rom_ids;
    std::vector<std::size_t> fom_ids;
    std::vector<std::size_t> interface_ids;
    std::vector<std::size_t> overlap_ids;  // ordered from the reduced side to the full-order side
    std::vector<double> blend;             // weight of the full-order value per overlap DOF

    std::size_t n_rom() const { return rom_ids.size(); }
    std::size_t n_fom() const { return fom_ids.size(); }
    std::size_t n_interface() const { return interface_ids.size(); }

    // Positions of `ids` within fom_ids / rom_ids. Throws if an id is absent.
    std::vector<std::size_t> fom_local(std::span<const std::size_t> ids) const;
    std::vector<std::size_t> rom_local(std::span<const std::size_t> ids) const;

    void validate() const;
};

DomainDecomposition decompose(const AdjacencyGraph& g, std::span<const std::size_t> fom_ids,
                              std::span<const std::size_t> overlap_ids);

// 1D uniform grid z_j = j * dz: the full-order side is z >= a, and the overlap
// is the first `overlap_width` full-order DOFs next to z = a.
DomainDecomposition decompose_1d(const AdjacencyGraph& g, double dz, double a, std::size_t overlap_width);

struct CoupledModel {
    DomainDecomposition dd;
    CoupledReducedModel rom;
    ReducedBasis basis;
    SparseQuadModel fom;

    // Positions of the interface DOFs inside the full-order state vector.
    std::vector<std::size_t> interface_in_fom() const { return dd.fom_local(rom.interface_ids); }
    void validate() const;
};

struct CoupledOptions {
    TruncationRule basis_rule = FixedRank{10};
    ModelStructure structure;
    RegConfig reg_rom;
    RegConfig reg_fom;
    SfomOptions sfom;
};

struct CoupledReport {
    RegularizationReport rom;
    RegularizationReport fom;
    std::size_t r = 0;
    double retained_energy = 0.0;
    std::optional<GapIndicator> gap;
};

CoupledModel infer_coupled(const SnapshotSet& S, const AdjacencyGraph& g, const DomainDecomposition& dd,
                           const CoupledOptions& options, CoupledReport* report = nullptr);

// (1 - s) * rom + s * fom over the overlap DOFs.
Vector blend_overlap(const Vector& rom_recon, const Vector& fom_vals, const DomainDecomposition& dd);

// Full state from reduced coordinates and full-order values, blended on the overlap.
Vector reconstruct_state(const CoupledModel& M, const Vector& xhat, const Vector& x_F);

// Rows `ids` of X.
Matrix select_rows(const Matrix& X, std::span<const std::size_t> ids);

}  // namespace ddinfer
