#include "ddinfer/opinf.hpp"

#include <set>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

void require_finite(const Matrix& M, const char* what) {
    if (!M.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
}

struct ReducedProblem {
    Matrix D;
    FeatureBlockSpec spec;
};

ReducedProblem assemble(const Matrix& Xhat, const Matrix& X_I, const Matrix& U, const ModelStructure& s,
                        const BlockScales& scales) {
    const Eigen::Index nt = Xhat.cols();
    const Eigen::Index ni = X_I.rows();

    std::vector<Matrix> owned;
    owned.reserve(8);
    FeatureBlockSpec spec;
    auto add = [&](BlockKind kind, Matrix block) {
        if (block.rows() == 0) return;
        spec.blocks.push_back({kind, static_cast<std::size_t>(block.rows()), scales.for_kind(kind)});
        owned.push_back(std::move(block));
    };

    if (s.linear) {
        add(BlockKind::linear, Xhat);
        if (ni > 0) add(BlockKind::coupling_linear, X_I);
    }
    if (s.quadratic) {
        add(BlockKind::quadratic_unique, quadratic_unique_features(Xhat));
        if (ni > 0) {
            add(BlockKind::coupling_quadratic, quadratic_unique_features(X_I));
            add(BlockKind::coupling_bilinear, bilinear_features(Xhat, X_I));
        }
    }
    if (s.input && U.rows() > 0) add(BlockKind::input, U);
    if (s.constant) add(BlockKind::constant, Matrix::Ones(1, nt));
    if (spec.blocks.empty()) throw InvalidArgument("reduced inference: model structure has no terms");

    ReducedProblem p;
    p.D.resize(static_cast<Eigen::Index>(spec.total()), nt);
    Eigen::Index row = 0;
    for (const auto& b : owned) {
        p.D.middleRows(row, b.rows()) = b;
        row += b.rows();
    }
    p.spec = std::move(spec);
    return p;
}

// Solves for all reduced rows with per-row diagonal positions, running the
// L-curve over reg's candidates when a grid is configured.
Matrix solve_rows(const GershgorinLeastSquares& ls, const RegConfig& reg, std::size_t rows,
                  RegularizationReport* report) {
    std::vector<std::optional<std::size_t>> diag(rows);
    if (const auto lin = ls.spec().find(BlockKind::linear)) {
        const std::size_t off = ls.spec().offset(*lin);
        for (std::size_t i = 0; i < rows; ++i) diag[i] = off + i;
    }

    std::vector<LCurvePoint> curve;
    LCurvePoint chosen{reg.eta1, reg.eta2, 0.0, 0.0};
    if (reg.selects()) {
        for (const auto& [e1, e2] : reg.candidates()) {
            const Matrix O = ls.solve(e1, e2, diag);
            curve.push_back({e1, e2, ls.fit_error(O), O.norm()});
        }
        chosen = l_curve_select(curve, reg.axes);
    }
    Matrix O = ls.solve(chosen.eta1, chosen.eta2, diag);
    chosen.fit_error = ls.fit_error(O);
    chosen.solution_norm = O.norm();
    if (report) {
        report->chosen = chosen;
        report->curve = std::move(curve);
    }
    return O;
}

}  // namespace

ModelStructure ModelStructure::from_terms(const std::vector<std::string>& terms) {
    ModelStructure s{false, false, false, false};
    for (const auto& t : terms) {
        if (t == "linear") s.linear = true;
        else if (t == "quadratic") s.quadratic = true;
        else if (t == "input") s.input = true;
        else if (t == "constant") s.constant = true;
        else throw InvalidArgument("unknown model term '" + t + "'");
    }
    return s;
}

std::vector<std::string> ModelStructure::terms() const {
    std::vector<std::string> t;
    if (linear) t.emplace_back("linear");
    if (quadratic) t.emplace_back("quadratic");
    if (input) t.emplace_back("input");
    if (constant) t.emplace_back("constant");
    return t;
}

Vector QuadModel::rhs(const Vector& x, const Vector& u) const {
    if (x.size() != A.rows()) throw InvalidArgument("reduced rhs: state dimension mismatch");
    Vector out = c.size() ? c : Vector::Zero(A.rows());
    if (A.cols() > 0) out.noalias() += A * x;
    if (Hc.cols() > 0) {
        Vector q(Hc.cols());
        quadratic_unique_into(x, q);
        out.noalias() += Hc * q;
    }
    if (B.cols() > 0) {
        if (u.size() != B.cols()) throw InvalidArgument("reduced rhs: input dimension mismatch");
        out.noalias() += B * u;
    }
    return out;
}

void QuadModel::validate() const {
    const Eigen::Index p = A.rows();
    if (A.cols() != 0 && A.cols() != p) throw InvalidArgument("model: A must be square");
    if (Hc.rows() != p || (Hc.cols() != 0 && Hc.cols() != p * (p + 1) / 2)) throw InvalidArgument("model: Hc shape mismatch");
    if (B.rows() != p) throw InvalidArgument("model: B row count mismatch");
    if (c.size() != 0 && c.size() != p) throw InvalidArgument("model: c length mismatch");
    if (!A.allFinite() || !Hc.allFinite() || !B.allFinite() || !c.allFinite())
        throw NumericalError("model: non-finite operator entries");
}

void CoupledReducedModel::validate() const {
    core.validate();
    const auto r = static_cast<Eigen::Index>(order());
    const auto ni = static_cast<Eigen::Index>(interface_dim());
    if (std::set<std::size_t>(interface_ids.begin(), interface_ids.end()).size() != interface_ids.size())
        throw InvalidArgument("coupled reduced model: duplicate interface ids");
    if (A_RI.rows() != r || (A_RI.cols() != 0 && A_RI.cols() != ni)) throw InvalidArgument("coupled reduced model: A_RI shape");
    if (H_RII.rows() != r || (H_RII.cols() != 0 && H_RII.cols() != ni * (ni + 1) / 2))
        throw InvalidArgument("coupled reduced model: H_RII shape");
    if (H_RRI.rows() != r || (H_RRI.cols() != 0 && H_RRI.cols() != r * ni))
        throw InvalidArgument("coupled reduced model: H_RRI shape");
}

Matrix compress_quadratic(const Matrix& H) {
    const Eigen::Index p = H.rows();
    if (H.cols() != p * p) throw InvalidArgument("compress: quadratic operator must be p x p^2");
    Matrix Hc(p, p * (p + 1) / 2);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i; j < p; ++j)
            Hc.col(col++) = i == j ? Matrix(H.col(i * p + i)) : Matrix(H.col(i * p + j) + H.col(j * p + i));
    return Hc;
}

Matrix expand_quadratic(const Matrix& Hc) {
    const Eigen::Index p = Hc.rows();
    if (Hc.cols() != p * (p + 1) / 2) throw InvalidArgument("expand: compressed operator must be p x p(p+1)/2");
    Matrix H = Matrix::Zero(p, p * p);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j, ++col) {
            if (i == j) {
                H.col(i * p + i) = Hc.col(col);
            } else {
                H.col(i * p + j) = 0.5 * Hc.col(col);
                H.col(j * p + i) = 0.5 * Hc.col(col);
            }
        }
    }
    return H;
}

std::size_t opinf_unknown_count(std::size_t r, std::size_t k, const ModelStructure& s) {
    return (s.linear ? r : 0) + (s.quadratic ? unique_quadratic_count(r) : 0) + (s.input ? k : 0) + (s.constant ? 1 : 0);
}

QuadModel infer_opinf(const Matrix& Xhat, const Matrix& U, const Matrix& dXhat, const ModelStructure& structure,
                      const RegConfig& reg, RegularizationReport* report) {
    auto coupled = infer_opinf_coupled(Xhat, Matrix(0, Xhat.cols()), {}, U, dXhat, structure, reg, report);
    return std::move(coupled.core);
}

CoupledReducedModel infer_opinf_coupled(const Matrix& Xhat_R, const Matrix& X_I,
                                        std::vector<std::size_t> interface_ids, const Matrix& U_R,
                                        const Matrix& dXhat_R, const ModelStructure& structure, const RegConfig& reg,
                                        RegularizationReport* report) {
    reg.validate();
    if (dXhat_R.rows() != Xhat_R.rows() || dXhat_R.cols() != Xhat_R.cols())
        throw InvalidArgument("reduced inference: derivative shape differs from reduced snapshots");
    if (X_I.cols() != Xhat_R.cols()) throw InvalidArgument("reduced inference: interface data column count mismatch");
    if (static_cast<std::size_t>(X_I.rows()) != interface_ids.size())
        throw InvalidArgument("reduced inference: " + std::to_string(X_I.rows()) + " interface rows but " +
                              std::to_string(interface_ids.size()) + " interface ids");
    if (structure.input && U_R.rows() > 0 && U_R.cols() != Xhat_R.cols())
        throw InvalidArgument("reduced inference: input column count mismatch");
    require_finite(Xhat_R, "reduced snapshots");
    require_finite(dXhat_R, "reduced derivatives");
    require_finite(X_I, "interface snapshots");

    const Matrix U = structure.input ? U_R : Matrix(0, Xhat_R.cols());
    auto problem = assemble(Xhat_R, X_I, U, structure, reg.scales);

    std::vector<std::string> warnings;
    if (problem.D.cols() < problem.D.rows()) {
        warnings.push_back("reduced inference is underdetermined: " + std::to_string(problem.D.cols()) +
                           " snapshots for " + std::to_string(problem.D.rows()) + " unknowns per row");
    }

    const auto rows = static_cast<std::size_t>(Xhat_R.rows());
    GershgorinLeastSquares ls(std::move(problem.D), dXhat_R, problem.spec);
    const Matrix O = solve_rows(ls, reg, rows, report);
    if (report) report->warnings = std::move(warnings);

    const auto r = static_cast<Eigen::Index>(rows);
    const auto ni = static_cast<Eigen::Index>(interface_ids.size());
    CoupledReducedModel M;
    M.core.A = Matrix::Zero(r, structure.linear ? r : 0);
    M.core.Hc = Matrix::Zero(r, structure.quadratic ? r * (r + 1) / 2 : 0);
    M.core.B = Matrix::Zero(r, U.rows());
    M.core.c = Vector::Zero(structure.constant ? r : 0);
    M.A_RI = Matrix::Zero(r, structure.linear ? ni : 0);
    M.H_RII = Matrix::Zero(r, structure.quadratic ? ni * (ni + 1) / 2 : 0);
    M.H_RRI = Matrix::Zero(r, structure.quadratic ? r * ni : 0);
    M.interface_ids = std::move(interface_ids);

    const auto& spec = ls.spec();
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
        const auto off = static_cast<Eigen::Index>(spec.offset(b));
        const auto size = static_cast<Eigen::Index>(spec.blocks[b].size);
        const auto block = O.middleCols(off, size);
        switch (spec.blocks[b].kind) {
            case BlockKind::linear: M.core.A = block; break;
            case BlockKind::coupling_linear: M.A_RI = block; break;
            case BlockKind::quadratic_unique: M.core.Hc = block; break;
            case BlockKind::coupling_quadratic: M.H_RII = block; break;
            case BlockKind::coupling_bilinear: M.H_RRI = block; break;
            case BlockKind::input: M.core.B = block; break;
            case BlockKind::constant: M.core.c = block.col(0); break;
        }
    }
    return M;
}

Vector evaluate_reduced_rhs(const CoupledReducedModel& M, const Vector& xhat, const Vector& x_I, const Vector& u) {
    if (x_I.size() != static_cast<Eigen::Index>(M.interface_dim()))
        throw InvalidArgument("reduced rhs: interface vector length mismatch");
    Vector out = M.core.rhs(xhat, u);
    if (x_I.size() == 0) return out;
    if (M.A_RI.cols() > 0) out.noalias() += M.A_RI * x_I;
    if (M.H_RII.cols() > 0) {
        Vector q(M.H_RII.cols());
        quadratic_unique_into(x_I, q);
        out.noalias() += M.H_RII * q;
    }
    if (M.H_RRI.cols() > 0) {
        Vector b(M.H_RRI.cols());
        bilinear_into(xhat, x_I, b);
        out.noalias() += M.H_RRI * b;
    }
    return out;
}

}  // namespace ddinfer
