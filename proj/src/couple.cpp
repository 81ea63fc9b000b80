#include "ddinfer/couple.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

std::vector<std::size_t> local_positions(const std::vector<std::size_t>& sorted_ids, std::span<const std::size_t> ids,
                                         const char* side) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (auto id : ids) {
        const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
        if (it == sorted_ids.end() || *it != id)
            throw InvalidArgument("DOF " + std::to_string(id) + " is not on the " + side + " side");
        out.push_back(static_cast<std::size_t>(it - sorted_ids.begin()));
    }
    return out;
}

bool adjacent(const AdjacencyGraph& g, std::size_t a, std::size_t b) {
    const auto& q = g.neighbors(a);
    return std::binary_search(q.begin(), q.end(), b);
}

}  // namespace

std::vector<std::size_t> DomainDecomposition::fom_local(std::span<const std::size_t> ids) const {
    return local_positions(fom_ids, ids, "full-order");
}

std::vector<std::size_t> DomainDecomposition::rom_local(std::span<const std::size_t> ids) const {
    return local_positions(rom_ids, ids, "reduced");
}

void DomainDecomposition::validate() const {
    if (fom_ids.empty()) throw InvalidArgument("decomposition: full-order side is empty");
    if (rom_ids.size() <= overlap_ids.size()) throw InvalidArgument("decomposition: reduced side is empty");
    if (!std::is_sorted(fom_ids.begin(), fom_ids.end()) || !std::is_sorted(rom_ids.begin(), rom_ids.end()) ||
        !std::is_sorted(interface_ids.begin(), interface_ids.end()))
        throw InvalidArgument("decomposition: id sets must be sorted");
    if (fom_ids.back() >= n || rom_ids.back() >= n) throw InvalidArgument("decomposition: id out of range");
    if (rom_ids.size() + fom_ids.size() != n + overlap_ids.size())
        throw InvalidArgument("decomposition: subdomains do not cover the DOFs exactly once outside the overlap");
    std::vector<std::size_t> shared;
    std::set_intersection(rom_ids.begin(), rom_ids.end(), fom_ids.begin(), fom_ids.end(), std::back_inserter(shared));
    auto overlap_sorted = overlap_ids;
    std::sort(overlap_sorted.begin(), overlap_sorted.end());
    if (shared != overlap_sorted) throw InvalidArgument("decomposition: subdomain intersection differs from the overlap");
    if (!std::includes(fom_ids.begin(), fom_ids.end(), interface_ids.begin(), interface_ids.end()))
        throw InvalidArgument("decomposition: interface DOFs must lie on the full-order side");
    if (blend.size() != overlap_ids.size()) throw InvalidArgument("decomposition: one blend weight per overlap DOF");
    for (std::size_t j = 0; j < blend.size(); ++j) {
        if (!(blend[j] >= 0.0 && blend[j] <= 1.0)) throw InvalidArgument("decomposition: blend weights must lie in [0, 1]");
        if (j > 0 && blend[j] < blend[j - 1]) throw InvalidArgument("decomposition: blend weights must be monotone");
    }
}

DomainDecomposition decompose(const AdjacencyGraph& g, std::span<const std::size_t> fom_ids,
                              std::span<const std::size_t> overlap_ids) {
    const std::size_t n = g.size();
    DomainDecomposition dd;
    dd.n = n;
    dd.fom_ids.assign(fom_ids.begin(), fom_ids.end());
    std::sort(dd.fom_ids.begin(), dd.fom_ids.end());
    if (std::adjacent_find(dd.fom_ids.begin(), dd.fom_ids.end()) != dd.fom_ids.end())
        throw InvalidArgument("decompose: duplicate full-order ids");
    if (dd.fom_ids.empty()) throw InvalidArgument("decompose: full-order id set is empty");
    if (dd.fom_ids.back() >= n) throw InvalidArgument("decompose: full-order id out of range");
    if (dd.fom_ids.size() == n) throw InvalidArgument("decompose: full-order side covers every DOF, reduced side is empty");

    std::vector<bool> is_fom(n, false);
    for (auto i : dd.fom_ids) is_fom[i] = true;

    std::vector<std::size_t> overlap(overlap_ids.begin(), overlap_ids.end());
    std::vector<bool> in_overlap(n, false);
    for (auto i : overlap) {
        if (i >= n || !is_fom[i]) throw InvalidArgument("decompose: overlap DOF " + std::to_string(i) + " is not on the full-order side");
        if (in_overlap[i]) throw InvalidArgument("decompose: duplicate overlap DOF " + std::to_string(i));
        in_overlap[i] = true;
    }
    if (overlap.size() == dd.fom_ids.size()) throw InvalidArgument("decompose: overlap covers the whole full-order side");

    const auto touches_rom_only = [&](std::size_t i) {
        for (auto j : g.neighbors(i))
            if (!is_fom[j]) return true;
        return false;
    };

    if (!overlap.empty()) {
        for (std::size_t k = 1; k < overlap.size(); ++k)
            if (!adjacent(g, overlap[k - 1], overlap[k]))
                throw InvalidArgument("decompose: overlap ordering is disconnected between DOFs " +
                                      std::to_string(overlap[k - 1]) + " and " + std::to_string(overlap[k]));
        if (!touches_rom_only(overlap.front())) {
            if (!touches_rom_only(overlap.back()))
                throw InvalidArgument("decompose: overlap strip does not touch the reduced side");
            std::reverse(overlap.begin(), overlap.end());
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!is_fom[i] || in_overlap[i]) dd.rom_ids.push_back(i);
    for (auto i : dd.fom_ids)
        if (touches_rom_only(i)) dd.interface_ids.push_back(i);

    dd.overlap_ids = overlap;
    const std::size_t m = overlap.size();
    dd.blend.resize(m);
    for (std::size_t k = 0; k < m; ++k) dd.blend[k] = m == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(m - 1);
    dd.validate();
    return dd;
}

DomainDecomposition decompose_1d(const AdjacencyGraph& g, double dz, double a, std::size_t overlap_width) {
    if (!(dz > 0.0)) throw InvalidArgument("decompose_1d: dz must be positive");
    const std::size_t n = g.size();
    // First index with z_j >= a, tolerant to rounding of a / dz.
    const double pos = a / dz;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(pos - 1e-9)));
    if (first == 0 || first >= n) throw InvalidArgument("decompose_1d: split coordinate leaves one side empty");
    std::vector<std::size_t> fom;
    for (std::size_t j = first; j < n; ++j) fom.push_back(j);
    if (overlap_width >= fom.size()) throw InvalidArgument("decompose_1d: overlap wider than the full-order side");
    std::vector<std::size_t> overlap;
    for (std::size_t k = 0; k < overlap_width; ++k) overlap.push_back(first + k);
    return decompose(g, fom, overlap);
}

void CoupledModel::validate() const {
    dd.validate();
    rom.validate();
    fom.validate();
    if (rom.interface_ids != dd.interface_ids) throw InvalidArgument("coupled model: interface ids differ between parts");
    if (basis.full_dim() != dd.n_rom()) throw InvalidArgument("coupled model: basis rows differ from the reduced side size");
    if (basis.r != rom.order()) throw InvalidArgument("coupled model: basis dimension differs from reduced model order");
    if (fom.n_F != dd.n_fom()) throw InvalidArgument("coupled model: sparse model size differs from the full-order side");
}

Matrix select_rows(const Matrix& X, std::span<const std::size_t> ids) {
    Matrix out(static_cast<Eigen::Index>(ids.size()), X.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (static_cast<Eigen::Index>(ids[k]) >= X.rows()) throw InvalidArgument("row selection out of range");
        out.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(ids[k]));
    }
    return out;
}

CoupledModel infer_coupled(const SnapshotSet& S, const AdjacencyGraph& g, const DomainDecomposition& dd,
                           const CoupledOptions& options, CoupledReport* report) {
    dd.validate();
    if (S.state_dim() != dd.n || g.size() != dd.n)
        throw InvalidArgument("coupled inference: snapshots, graph and decomposition disagree on the DOF count");

    const Matrix& X = S.states();
    const Matrix dX = S.derivatives_or_estimate();
    const Matrix X_R = select_rows(X, dd.rom_ids);
    const Matrix X_F = select_rows(X, dd.fom_ids);

    CoupledModel M;
    M.dd = dd;
    M.basis = compute_basis(X_R, options.basis_rule);
    const Matrix Xhat = project(X_R, M.basis);
    const Matrix dXhat = project(select_rows(dX, dd.rom_ids), M.basis);
    const Matrix X_I = select_rows(X, dd.interface_ids);
    const Matrix& U = S.inputs();

    M.rom = infer_opinf_coupled(Xhat, X_I, dd.interface_ids, U, dXhat, options.structure, options.reg_rom,
                                report ? &report->rom : nullptr);

    const AdjacencyGraph g_F = g.restrict_to(dd.fom_ids);
    const Matrix dX_F = select_rows(dX, dd.fom_ids);
    const auto iface_local = dd.fom_local(dd.interface_ids);
    const SfomData data{X_F, dX_F, Xhat, U};
    M.fom = infer_sfom(g_F, data, iface_local, options.structure, options.reg_fom, options.sfom,
                       report ? &report->fom : nullptr);

    if (report) {
        report->r = M.basis.r;
        report->retained_energy = M.basis.retained_energy();
        try {
            report->gap = gap_indicator(X_R, X_F, M.basis.r);
        } catch (const Error&) {
            report->gap.reset();
        }
    }
    return M;
}

Vector blend_overlap(const Vector& rom_recon, const Vector& fom_vals, const DomainDecomposition& dd) {
    const auto m = static_cast<Eigen::Index>(dd.overlap_ids.size());
    if (rom_recon.size() != m || fom_vals.size() != m)
        throw InvalidArgument("blend: vectors must have one entry per overlap DOF");
    Vector out(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double s = dd.blend[static_cast<std::size_t>(j)];
        out(j) = (1.0 - s) * rom_recon(j) + s * fom_vals(j);
    }
    return out;
}

Vector reconstruct_state(const CoupledModel& M, const Vector& xhat, const Vector& x_F) {
    const auto& dd = M.dd;
    if (x_F.size() != static_cast<Eigen::Index>(dd.n_fom())) throw InvalidArgument("reconstruct: full-order state length mismatch");
    const Vector rom_full = M.basis.V * xhat;
    Vector x(static_cast<Eigen::Index>(dd.n));
    for (std::size_t k = 0; k < dd.rom_ids.size(); ++k) x(static_cast<Eigen::Index>(dd.rom_ids[k])) = rom_full(static_cast<Eigen::Index>(k));
    for (std::size_t k = 0; k < dd.fom_ids.size(); ++k) x(static_cast<Eigen::Index>(dd.fom_ids[k])) = x_F(static_cast<Eigen::Index>(k));
    if (!dd.overlap_ids.empty()) {
        const auto rl = dd.rom_local(dd.overlap_ids);
        const auto fl = dd.fom_local(dd.overlap_ids);
        Vector r(static_cast<Eigen::Index>(rl.size()));
        Vector f(static_cast<Eigen::Index>(fl.size()));
        for (std::size_t k = 0; k < rl.size(); ++k) {
            r(static_cast<Eigen::Index>(k)) = rom_full(static_cast<Eigen::Index>(rl[k]));
            f(static_cast<Eigen::Index>(k)) = x_F(static_cast<Eigen::Index>(fl[k]));
        }
        const Vector b = blend_overlap(r, f, dd);
        for (std::size_t k = 0; k < dd.overlap_ids.size(); ++k) x(static_cast<Eigen::Index>(dd.overlap_ids[k])) = b(static_cast<Eigen::Index>(k));
    }
    return x;
}

}  // namespace ddinfer
