#include "ddinfer/sfom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

std::mt19937_64 row_rng(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    return std::mt19937_64(seq);
}

bool contains(std::span<const std::size_t> sorted_ids, std::size_t i) {
    return std::binary_search(sorted_ids.begin(), sorted_ids.end(), i);
}

std::vector<std::size_t> sorted_unique(std::span<const std::size_t> ids) {
    std::vector<std::size_t> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::ptrdiff_t> offsets_of(const std::vector<std::size_t>& ids, std::size_t i) {
    std::vector<std::ptrdiff_t> off;
    off.reserve(ids.size());
    for (auto q : ids) off.push_back(static_cast<std::ptrdiff_t>(q) - static_cast<std::ptrdiff_t>(i));
    return off;
}

const std::vector<std::size_t>& inputs_of(const InputMap* inputs, std::size_t i) {
    static const std::vector<std::size_t> none;
    if (!inputs || inputs->empty()) return none;
    return inputs->at(i);
}

// Gathers row `ids` of X into consecutive rows.
Matrix gather_rows(const Matrix& X, const std::vector<std::size_t>& ids) {
    Matrix out(static_cast<Eigen::Index>(ids.size()), X.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(ids[k]));
    return out;
}

SparseRow unpack_row(const Matrix& beta, const FeatureBlockSpec& spec, const IndexSets& sets, bool interface) {
    SparseRow row;
    row.Q = sets.Q;
    row.L = sets.L;
    row.interface = interface;
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
        const Vector block = beta.row(0).segment(static_cast<Eigen::Index>(spec.offset(b)),
                                                 static_cast<Eigen::Index>(spec.blocks[b].size)).transpose();
        switch (spec.blocks[b].kind) {
            case BlockKind::linear: row.linear = block; break;
            case BlockKind::quadratic_unique: row.quadratic = block; break;
            case BlockKind::coupling_linear: row.coupling_linear = block; break;
            case BlockKind::coupling_quadratic: row.coupling_quadratic = block; break;
            case BlockKind::coupling_bilinear: row.coupling_bilinear = block; break;
            case BlockKind::input: row.input = block; break;
            case BlockKind::constant: row.constant = block(0); break;
        }
    }
    return row;
}

[[noreturn]] void rethrow_for_row(std::size_t i, const Error& e) {
    const std::string msg = "sparse row " + std::to_string(i) + ": " + e.what();
    if (const auto* c = dynamic_cast<const ConditioningError*>(&e)) throw ConditioningError(msg, c->condition_estimate());
    throw Error(e.kind(), msg);
}

}  // namespace

AdjacencyGraph::AdjacencyGraph(std::vector<std::vector<std::size_t>> neighbors) : neighbors_(std::move(neighbors)) {
    const std::size_t n = neighbors_.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto& q = neighbors_[i];
        for (auto j : q)
            if (j >= n) throw InvalidArgument("adjacency: neighbor " + std::to_string(j) + " of DOF " + std::to_string(i) + " out of range");
        q.push_back(i);
        std::sort(q.begin(), q.end());
        q.erase(std::unique(q.begin(), q.end()), q.end());
    }
}

AdjacencyGraph AdjacencyGraph::path(std::size_t n) {
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) nb[i].push_back(i - 1);
        if (i + 1 < n) nb[i].push_back(i + 1);
    }
    return AdjacencyGraph(std::move(nb));
}

AdjacencyGraph AdjacencyGraph::periodic_chain(std::size_t n) {
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i) {
        nb[i].push_back((i + n - 1) % n);
        nb[i].push_back((i + 1) % n);
    }
    return AdjacencyGraph(std::move(nb));
}

AdjacencyGraph AdjacencyGraph::grid2d(std::size_t nx, std::size_t ny) {
    std::vector<std::vector<std::size_t>> nb(nx * ny);
    for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
            auto& q = nb[y * nx + x];
            if (x > 0) q.push_back(y * nx + x - 1);
            if (x + 1 < nx) q.push_back(y * nx + x + 1);
            if (y > 0) q.push_back((y - 1) * nx + x);
            if (y + 1 < ny) q.push_back((y + 1) * nx + x);
        }
    }
    return AdjacencyGraph(std::move(nb));
}

AdjacencyGraph AdjacencyGraph::restrict_to(std::span<const std::size_t> ids) const {
    std::vector<std::ptrdiff_t> local(size(), -1);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (ids[k] >= size()) throw InvalidArgument("adjacency restriction: id out of range");
        if (k > 0 && ids[k] <= ids[k - 1]) throw InvalidArgument("adjacency restriction: ids must be sorted and unique");
        local[ids[k]] = static_cast<std::ptrdiff_t>(k);
    }
    std::vector<std::vector<std::size_t>> nb(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
        for (auto j : neighbors_[ids[k]])
            if (local[j] >= 0) nb[k].push_back(static_cast<std::size_t>(local[j]));
    return AdjacencyGraph(std::move(nb));
}

IndexSets build_index_sets(const AdjacencyGraph& g, std::size_t i, std::size_t r, const InputMap* inputs) {
    if (i >= g.size()) throw InvalidArgument("index sets: DOF " + std::to_string(i) + " out of range");
    IndexSets s;
    s.Q = g.neighbors(i);
    s.E_size = unique_quadratic_count(s.Q.size());
    s.L = inputs_of(inputs, i);
    s.G_size = s.Q.size() * r;
    return s;
}

double SparseRow::self_coefficient(std::size_t i) const {
    if (linear.size() == 0) return 0.0;
    const auto it = std::lower_bound(Q.begin(), Q.end(), i);
    if (it == Q.end() || *it != i) return 0.0;
    return linear(it - Q.begin());
}

Matrix SparseQuadModel::linear_operator() const {
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(n_F), static_cast<Eigen::Index>(n_F));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        for (std::size_t a = 0; a < row.Q.size() && static_cast<Eigen::Index>(a) < row.linear.size(); ++a)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(row.Q[a])) = row.linear(static_cast<Eigen::Index>(a));
    }
    return A;
}

Matrix SparseQuadModel::coupling_operator() const {
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(n_F), static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].coupling_linear.size() > 0) A.row(static_cast<Eigen::Index>(i)) = rows[i].coupling_linear.transpose();
    return A;
}

std::size_t SparseQuadModel::nonzeros() const {
    std::size_t nnz = 0;
    for (const auto& row : rows)
        for (Eigen::Index a = 0; a < row.linear.size(); ++a) nnz += row.linear(a) != 0.0;
    return nnz;
}

void SparseQuadModel::rhs_into(const Vector& x_F, const Vector& xhat, const Vector& u, Eigen::Ref<Vector> out) const {
    if (x_F.size() != static_cast<Eigen::Index>(n_F) || out.size() != x_F.size())
        throw InvalidArgument("sparse rhs: state dimension mismatch");

    bool any_coupling = false;
    for (const auto& row : rows) any_coupling = any_coupling || row.interface;
    if (any_coupling && xhat.size() != static_cast<Eigen::Index>(r))
        throw InvalidArgument("sparse rhs: reduced coupling state has wrong dimension");

    Vector qhat;
    if (any_coupling && structure.quadratic) {
        qhat.resize(static_cast<Eigen::Index>(unique_quadratic_count(r)));
        quadratic_unique_into(xhat, qhat);
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SparseRow& row = rows[i];
        const auto& Q = row.Q;
        double acc = row.constant;
        for (Eigen::Index a = 0; a < row.linear.size(); ++a) acc += row.linear(a) * x_F(static_cast<Eigen::Index>(Q[static_cast<std::size_t>(a)]));
        if (row.quadratic.size() > 0) {
            Eigen::Index k = 0;
            for (std::size_t a = 0; a < Q.size(); ++a) {
                const double xa = x_F(static_cast<Eigen::Index>(Q[a]));
                for (std::size_t b = a; b < Q.size(); ++b) acc += row.quadratic(k++) * xa * x_F(static_cast<Eigen::Index>(Q[b]));
            }
        }
        if (row.interface) {
            if (row.coupling_linear.size() > 0) acc += row.coupling_linear.dot(xhat);
            if (row.coupling_quadratic.size() > 0) acc += row.coupling_quadratic.dot(qhat);
            if (row.coupling_bilinear.size() > 0) {
                Eigen::Index k = 0;
                for (std::size_t a = 0; a < Q.size(); ++a) {
                    const double xa = x_F(static_cast<Eigen::Index>(Q[a]));
                    acc += xa * row.coupling_bilinear.segment(k, xhat.size()).dot(xhat);
                    k += xhat.size();
                }
            }
        }
        if (row.input.size() > 0) {
            for (std::size_t l = 0; l < row.L.size(); ++l) {
                if (static_cast<Eigen::Index>(row.L[l]) >= u.size()) throw InvalidArgument("sparse rhs: input vector too short");
                acc += row.input(static_cast<Eigen::Index>(l)) * u(static_cast<Eigen::Index>(row.L[l]));
            }
        }
        out(static_cast<Eigen::Index>(i)) = acc;
    }
}

void SparseQuadModel::validate() const {
    if (rows.size() != n_F) throw InvalidArgument("sparse model: row count differs from n_F");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const bool has_coupling = row.coupling_linear.size() + row.coupling_quadratic.size() + row.coupling_bilinear.size() > 0;
        if (has_coupling && !row.interface) throw InvalidArgument("sparse model: coupling blocks on non-interface row " + std::to_string(i));
        for (auto q : row.Q)
            if (q >= n_F) throw InvalidArgument("sparse model: stencil index out of range in row " + std::to_string(i));
        if (row.linear.size() != 0 && row.linear.size() != static_cast<Eigen::Index>(row.Q.size()))
            throw InvalidArgument("sparse model: linear block size mismatch in row " + std::to_string(i));
        if (row.quadratic.size() != 0 && row.quadratic.size() != static_cast<Eigen::Index>(unique_quadratic_count(row.Q.size())))
            throw InvalidArgument("sparse model: quadratic block size mismatch in row " + std::to_string(i));
        if (row.coupling_linear.size() != 0 && row.coupling_linear.size() != static_cast<Eigen::Index>(r))
            throw InvalidArgument("sparse model: coupling block size mismatch in row " + std::to_string(i));
        if (row.coupling_bilinear.size() != 0 && row.coupling_bilinear.size() != static_cast<Eigen::Index>(r * row.Q.size()))
            throw InvalidArgument("sparse model: bilinear block size mismatch in row " + std::to_string(i));
        if (!row.linear.allFinite() || !row.quadratic.allFinite() || !row.coupling_linear.allFinite() ||
            !row.coupling_quadratic.allFinite() || !row.coupling_bilinear.allFinite() || !row.input.allFinite() ||
            !std::isfinite(row.constant))
            throw NumericalError("sparse model: non-finite coefficients in row " + std::to_string(i));
    }
}

std::vector<std::size_t> congruent_rows(const AdjacencyGraph& g, std::span<const std::size_t> interface_rows,
                                        std::size_t i, const InputMap* inputs) {
    if (i >= g.size()) throw InvalidArgument("pooling: row out of range");
    const auto iface = sorted_unique(interface_rows);
    if (contains(iface, i)) return {i};
    const auto key = offsets_of(g.neighbors(i), i);
    const auto input_key = offsets_of(inputs_of(inputs, i), i);
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (contains(iface, j)) continue;
        if (g.neighbors(j).size() != key.size()) continue;
        if (offsets_of(g.neighbors(j), j) == key && offsets_of(inputs_of(inputs, j), j) == input_key) out.push_back(j);
    }
    return out;
}

std::vector<std::size_t> pooled_rows_for(const AdjacencyGraph& g, std::span<const std::size_t> interface_rows,
                                         std::size_t i, std::size_t pool_size, std::uint64_t seed,
                                         const InputMap* inputs) {
    if (pool_size <= 1) return {i};
    auto candidates = congruent_rows(g, interface_rows, i, inputs);
    candidates.erase(std::remove(candidates.begin(), candidates.end(), i), candidates.end());
    std::vector<std::size_t> chosen{i};
    auto rng = row_rng(seed, i);
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen),
                static_cast<std::ptrdiff_t>(pool_size - 1), rng);
    return chosen;
}

SfomRowProblem assemble_sfom_row(std::size_t i, const SfomData& data, const AdjacencyGraph& g, bool interface,
                                 const ModelStructure& structure, const BlockScales& scales,
                                 std::span<const std::size_t> pooled_rows, const InputMap* inputs) {
    const auto n_F = static_cast<std::size_t>(data.X_F.rows());
    if (g.size() != n_F) throw InvalidArgument("sparse row: graph size differs from data rows");
    if (data.dX_F.rows() != data.X_F.rows() || data.dX_F.cols() != data.X_F.cols())
        throw InvalidArgument("sparse row: derivative shape differs from snapshot shape");
    if (interface && data.Xhat_R.rows() > 0 && data.Xhat_R.cols() != data.X_F.cols())
        throw InvalidArgument("sparse row: reduced data column count mismatch");

    const std::size_t r = interface ? static_cast<std::size_t>(data.Xhat_R.rows()) : 0;
    const auto sets = build_index_sets(g, i, r, inputs);
    const auto key = offsets_of(sets.Q, i);

    std::vector<std::size_t> pool(pooled_rows.begin(), pooled_rows.end());
    if (pool.empty()) pool.push_back(i);
    if (std::find(pool.begin(), pool.end(), i) == pool.end()) pool.insert(pool.begin(), i);
    for (auto j : pool) {
        if (j >= n_F) throw InvalidArgument("sparse row: pooled row out of range");
        if (j != i && (interface || offsets_of(g.neighbors(j), j) != key))
            throw InvalidArgument("sparse row " + std::to_string(i) + ": pooled row " + std::to_string(j) +
                                  " has a different stencil geometry");
    }

    FeatureBlockSpec spec;
    const std::size_t q = sets.Q.size();
    if (structure.linear) spec.blocks.push_back({BlockKind::linear, q, scales.linear});
    if (structure.quadratic) spec.blocks.push_back({BlockKind::quadratic_unique, sets.E_size, scales.quadratic});
    if (r > 0) {
        if (structure.linear) spec.blocks.push_back({BlockKind::coupling_linear, r, scales.coupling_linear});
        if (structure.quadratic) {
            spec.blocks.push_back({BlockKind::coupling_quadratic, unique_quadratic_count(r), scales.coupling_quadratic});
            spec.blocks.push_back({BlockKind::coupling_bilinear, sets.G_size, scales.coupling_bilinear});
        }
    }
    if (structure.input && !sets.L.empty()) {
        if (data.U.rows() == 0) throw InvalidArgument("sparse row: input structure requested without input data");
        spec.blocks.push_back({BlockKind::input, sets.L.size(), scales.input});
    }
    if (structure.constant) spec.blocks.push_back({BlockKind::constant, 1, scales.constant});
    if (spec.blocks.empty()) throw InvalidArgument("sparse row: model structure has no terms");
    if (structure.linear) spec.diag_index = static_cast<std::size_t>(std::find(sets.Q.begin(), sets.Q.end(), i) - sets.Q.begin());

    const Eigen::Index nt = data.X_F.cols();
    const auto m = static_cast<Eigen::Index>(spec.total());
    SfomRowProblem p;
    p.D.resize(m, nt * static_cast<Eigen::Index>(pool.size()));
    p.y.resize(1, p.D.cols());

    Matrix Qhat;
    if (r > 0 && structure.quadratic) Qhat = quadratic_unique_features(data.Xhat_R);

    for (std::size_t k = 0; k < pool.size(); ++k) {
        const std::size_t j = pool[k];
        const auto Qj = g.neighbors(j);
        const Matrix Xq = gather_rows(data.X_F, Qj);
        auto cols = p.D.middleCols(static_cast<Eigen::Index>(k) * nt, nt);
        Eigen::Index row = 0;
        for (const auto& b : spec.blocks) {
            const auto size = static_cast<Eigen::Index>(b.size);
            switch (b.kind) {
                case BlockKind::linear: cols.middleRows(row, size) = Xq; break;
                case BlockKind::quadratic_unique: cols.middleRows(row, size) = quadratic_unique_features(Xq); break;
                case BlockKind::coupling_linear: cols.middleRows(row, size) = data.Xhat_R; break;
                case BlockKind::coupling_quadratic: cols.middleRows(row, size) = Qhat; break;
                case BlockKind::coupling_bilinear: cols.middleRows(row, size) = bilinear_features(Xq, data.Xhat_R); break;
                case BlockKind::input: cols.middleRows(row, size) = gather_rows(data.U, inputs_of(inputs, j)); break;
                case BlockKind::constant: cols.middleRows(row, size).setOnes(); break;
            }
            row += size;
        }
        p.y.middleCols(static_cast<Eigen::Index>(k) * nt, nt) = data.dX_F.row(static_cast<Eigen::Index>(j));
    }
    p.spec = std::move(spec);
    return p;
}

SparseRow infer_sfom_row(std::size_t i, const SfomData& data, const AdjacencyGraph& g, bool interface,
                         const ModelStructure& structure, const RegConfig& reg,
                         std::span<const std::size_t> pooled_rows, const InputMap* inputs,
                         RegularizationReport* report) {
    reg.validate();
    auto problem = assemble_sfom_row(i, data, g, interface, structure, reg.scales, pooled_rows, inputs);
    const std::size_t r = interface ? static_cast<std::size_t>(data.Xhat_R.rows()) : 0;
    const auto sets = build_index_sets(g, i, r, inputs);
    GershgorinLeastSquares ls(std::move(problem.D), std::move(problem.y), std::move(problem.spec));

    std::vector<LCurvePoint> curve;
    LCurvePoint chosen{reg.eta1, reg.eta2, 0.0, 0.0};
    if (reg.selects()) {
        for (const auto& [e1, e2] : reg.candidates()) {
            const Matrix beta = ls.solve(e1, e2);
            curve.push_back({e1, e2, ls.fit_error(beta), beta.norm()});
        }
        chosen = l_curve_select(curve, reg.axes);
    }
    const Matrix beta = ls.solve(chosen.eta1, chosen.eta2);
    if (report) {
        chosen.fit_error = ls.fit_error(beta);
        chosen.solution_norm = beta.norm();
        report->chosen = chosen;
        report->curve = std::move(curve);
        if (ls.data().cols() < ls.data().rows())
            report->warnings.push_back("sparse row " + std::to_string(i) + " is underdetermined");
    }
    return unpack_row(beta, ls.spec(), sets, interface);
}

SparseQuadModel infer_sfom(const AdjacencyGraph& g, const SfomData& data, std::span<const std::size_t> interface_rows,
                           const ModelStructure& structure, const RegConfig& reg, const SfomOptions& options,
                           RegularizationReport* report) {
    reg.validate();
    const std::size_t n_F = g.size();
    if (static_cast<std::size_t>(data.X_F.rows()) != n_F) throw InvalidArgument("sparse inference: graph size differs from data rows");
    const auto iface = sorted_unique(interface_rows);
    for (auto i : iface)
        if (i >= n_F) throw InvalidArgument("sparse inference: interface row " + std::to_string(i) + " out of range");

    std::vector<std::vector<std::size_t>> pools(n_F);
    for (std::size_t i = 0; i < n_F; ++i) pools[i] = pooled_rows_for(g, iface, i, options.pool_size, options.seed, options.inputs);

    RegConfig fixed = reg;
    fixed.eta1_grid.clear();
    std::vector<LCurvePoint> curve;
    LCurvePoint chosen{reg.eta1, reg.eta2, 0.0, 0.0};
    if (reg.selects() && options.selection == SelectionMode::global) {
        std::vector<std::size_t> all(n_F);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::size_t> subsample;
        if (n_F <= options.subsample_rows) {
            subsample = all;
        } else {
            auto rng = row_rng(options.seed, ~std::uint64_t{0});
            std::sample(all.begin(), all.end(), std::back_inserter(subsample),
                        static_cast<std::ptrdiff_t>(options.subsample_rows), rng);
        }

        const auto candidates = reg.candidates();
        std::vector<double> err2(candidates.size(), 0.0);
        std::vector<double> norm2(candidates.size(), 0.0);
        for (auto i : subsample) {
            try {
                auto p = assemble_sfom_row(i, data, g, contains(iface, i), structure, reg.scales, pools[i], options.inputs);
                GershgorinLeastSquares ls(std::move(p.D), std::move(p.y), std::move(p.spec));
                for (std::size_t c = 0; c < candidates.size(); ++c) {
                    const Matrix beta = ls.solve(candidates[c].first, candidates[c].second);
                    err2[c] += std::pow(ls.fit_error(beta), 2);
                    norm2[c] += beta.squaredNorm();
                }
            } catch (const Error& e) {
                rethrow_for_row(i, e);
            }
        }
        for (std::size_t c = 0; c < candidates.size(); ++c)
            curve.push_back({candidates[c].first, candidates[c].second, std::sqrt(err2[c]), std::sqrt(norm2[c])});
        chosen = l_curve_select(curve, reg.axes);
        fixed.eta1 = chosen.eta1;
        fixed.eta2 = chosen.eta2;
    }

    SparseQuadModel M;
    M.n_F = n_F;
    M.r = static_cast<std::size_t>(data.Xhat_R.rows());
    M.structure = structure;
    M.seed = options.seed;
    M.rows.resize(n_F);
    const RegConfig& row_reg = options.selection == SelectionMode::per_row ? reg : fixed;
    for (std::size_t i = 0; i < n_F; ++i) {
        try {
            M.rows[i] = infer_sfom_row(i, data, g, contains(iface, i), structure, row_reg, pools[i], options.inputs);
        } catch (const Error& e) {
            rethrow_for_row(i, e);
        }
    }

    if (report) {
        report->chosen = chosen;
        report->curve = std::move(curve);
        report->warnings.clear();
        if (options.selection == SelectionMode::per_row && reg.selects())
            report->warnings.push_back("hyperparameters selected per row; chosen pair is not global");
    }
    return M;
}

Vector evaluate_sparse_rhs(const SparseQuadModel& M, const Vector& x_F, const Vector& xhat, const Vector& u) {
    Vector out(static_cast<Eigen::Index>(M.n_F));
    M.rhs_into(x_F, xhat, u, out);
    return out;
}

}  // namespace ddinfer
