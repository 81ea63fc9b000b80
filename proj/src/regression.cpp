#include "ddinfer/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddinfer/error.hpp"

namespace ddinfer {

std::string to_string(BlockKind kind) {
    switch (kind) {
        case BlockKind::linear: return "linear";
        case BlockKind::quadratic_unique: return "quadratic_unique";
        case BlockKind::input: return "input";
        case BlockKind::constant: return "constant";
        case BlockKind::coupling_linear: return "coupling_linear";
        case BlockKind::coupling_quadratic: return "coupling_quadratic";
        case BlockKind::coupling_bilinear: return "coupling_bilinear";
    }
    return "unknown";
}

BlockKind block_kind_from_string(const std::string& name) {
    for (auto kind : {BlockKind::linear, BlockKind::quadratic_unique, BlockKind::input, BlockKind::constant,
                      BlockKind::coupling_linear, BlockKind::coupling_quadratic, BlockKind::coupling_bilinear})
        if (to_string(kind) == name) return kind;
    throw InvalidArgument("unknown feature block kind '" + name + "'");
}

double BlockScales::for_kind(BlockKind kind) const {
    switch (kind) {
        case BlockKind::linear: return linear;
        case BlockKind::quadratic_unique: return quadratic;
        case BlockKind::input: return input;
        case BlockKind::constant: return constant;
        case BlockKind::coupling_linear: return coupling_linear;
        case BlockKind::coupling_quadratic: return coupling_quadratic;
        case BlockKind::coupling_bilinear: return coupling_bilinear;
    }
    return 1.0;
}

std::size_t FeatureBlockSpec::total() const {
    std::size_t m = 0;
    for (const auto& b : blocks) m += b.size;
    return m;
}

std::size_t FeatureBlockSpec::offset(std::size_t block) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < block && k < blocks.size(); ++k) off += blocks[k].size;
    return off;
}

std::optional<std::size_t> FeatureBlockSpec::find(BlockKind kind) const {
    for (std::size_t k = 0; k < blocks.size(); ++k)
        if (blocks[k].kind == kind) return k;
    return std::nullopt;
}

Vector FeatureBlockSpec::scale_diagonal() const {
    Vector s(static_cast<Eigen::Index>(total()));
    Eigen::Index pos = 0;
    for (const auto& b : blocks) {
        s.segment(pos, static_cast<Eigen::Index>(b.size)).setConstant(b.reg_scale);
        pos += static_cast<Eigen::Index>(b.size);
    }
    return s;
}

void FeatureBlockSpec::validate() const {
    for (const auto& b : blocks) {
        if (b.size == 0) throw InvalidArgument("feature block '" + to_string(b.kind) + "' has zero size");
        if (!(b.reg_scale > 0.0)) throw InvalidArgument("feature block '" + to_string(b.kind) + "' needs a positive reg_scale");
    }
    if (diag_index) {
        const auto lin = find(BlockKind::linear);
        if (!lin) throw InvalidArgument("diag_index given without a linear block");
        const std::size_t lo = offset(*lin);
        if (*diag_index < lo || *diag_index >= lo + blocks[*lin].size)
            throw InvalidArgument("diag_index must fall inside the linear block");
    }
}

std::vector<std::pair<double, double>> RegConfig::candidates() const {
    if (!selects()) return {{eta1, eta2}};
    std::vector<std::pair<double, double>> out;
    if (const auto* mult = std::get_if<Eta2Multiple>(&eta2_rule)) {
        for (double e1 : eta1_grid) out.emplace_back(e1, mult->factor * e1);
    } else {
        for (double e1 : eta1_grid)
            for (double e2 : std::get<Eta2Grid>(eta2_rule).values) out.emplace_back(e1, e2);
    }
    return out;
}

void RegConfig::validate() const {
    if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw InvalidArgument("regularization weights must be nonnegative");
    for (double e : eta1_grid)
        if (!(e > 0.0)) throw InvalidArgument("eta1 grid values must be positive");
    if (const auto* mult = std::get_if<Eta2Multiple>(&eta2_rule)) {
        if (!(mult->factor >= 0.0)) throw InvalidArgument("eta2 multiple must be nonnegative");
    } else {
        const auto& values = std::get<Eta2Grid>(eta2_rule).values;
        if (selects() && values.empty()) throw InvalidArgument("eta2 grid is empty");
        for (double e : values)
            if (!(e >= 0.0)) throw InvalidArgument("eta2 grid values must be nonnegative");
    }
    for (double s : {scales.linear, scales.quadratic, scales.input, scales.constant, scales.coupling_linear,
                     scales.coupling_quadratic, scales.coupling_bilinear})
        if (!(s > 0.0)) throw InvalidArgument("block regularization scales must be positive");
}

std::vector<double> RegConfig::log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("log grid bounds must be positive");
    if (count == 0) throw InvalidArgument("log grid needs at least one point");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t k = 0; k < count; ++k)
        g[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    return g;
}

Matrix quadratic_unique_features(const Matrix& Z) {
    const Eigen::Index m = Z.rows();
    if (m < 1) throw InvalidArgument("quadratic features: need at least one row");
    Matrix out(m * (m + 1) / 2, Z.cols());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) out.row(row++) = Z.row(i).cwiseProduct(Z.row(j));
    return out;
}

Matrix bilinear_features(const Matrix& Z1, const Matrix& Z2) {
    if (Z1.cols() != Z2.cols()) throw InvalidArgument("bilinear features: column counts differ");
    Matrix out(Z1.rows() * Z2.rows(), Z1.cols());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < Z1.rows(); ++i)
        for (Eigen::Index j = 0; j < Z2.rows(); ++j) out.row(row++) = Z1.row(i).cwiseProduct(Z2.row(j));
    return out;
}

void quadratic_unique_into(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        for (Eigen::Index j = i; j < z.size(); ++j) out(row++) = z(i) * z(j);
}

void bilinear_into(const Eigen::Ref<const Vector>& z1, const Eigen::Ref<const Vector>& z2, Eigen::Ref<Vector> out) {
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < z1.size(); ++i)
        for (Eigen::Index j = 0; j < z2.size(); ++j) out(row++) = z1(i) * z2(j);
}

std::string to_string(LCurveAxes a) { return a == LCurveAxes::log ? "log" : "linear"; }

LCurveAxes lcurve_axes_from_string(const std::string& s) {
    if (s == "linear") return LCurveAxes::linear;
    if (s == "log") return LCurveAxes::log;
    throw InvalidArgument("unknown L-curve axes '" + s + "'");
}

LCurvePoint l_curve_select(std::span<const LCurvePoint> candidates, LCurveAxes axes) {
    if (candidates.empty()) throw InvalidArgument("L-curve: no candidates");
    for (const auto& c : candidates) {
        if (!std::isfinite(c.fit_error) || !std::isfinite(c.solution_norm) || c.fit_error < 0.0 || c.solution_norm < 0.0)
            throw InvalidArgument("L-curve: errors and norms must be finite and nonnegative");
    }
    // tiny floor keeps log10 finite for exact fits
    constexpr double floor = 1e-300;
    const auto err_of = [&](const LCurvePoint& c) {
        return axes == LCurveAxes::log ? std::log10(std::max(c.fit_error, floor)) : c.fit_error;
    };
    const auto norm_of = [&](const LCurvePoint& c) {
        return axes == LCurveAxes::log ? std::log10(std::max(c.solution_norm, floor)) : c.solution_norm;
    };
    double lo_e = err_of(candidates.front()), hi_e = lo_e;
    double lo_s = norm_of(candidates.front()), hi_s = lo_s;
    for (const auto& c : candidates) {
        lo_e = std::min(lo_e, err_of(c));
        hi_e = std::max(hi_e, err_of(c));
        lo_s = std::min(lo_s, norm_of(c));
        hi_s = std::max(hi_s, norm_of(c));
    }
    const auto scaled = [&](double v, double lo, double hi) {
        if (axes == LCurveAxes::linear) return hi > 0.0 ? v / hi : 0.0;
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;
    };
    const auto normalized_distance = [&](const LCurvePoint& c) {
        return std::hypot(scaled(err_of(c), lo_e, hi_e), scaled(norm_of(c), lo_s, hi_s));
    };
    const LCurvePoint* best = &candidates.front();
    double best_d = normalized_distance(*best);
    for (const auto& c : candidates.subspan(1)) {
        const double d = normalized_distance(c);
        if (d < best_d || (d == best_d && c.eta1 > best->eta1)) {
            best = &c;
            best_d = d;
        }
    }
    return *best;
}

GershgorinLeastSquares::GershgorinLeastSquares(Matrix D, Matrix Y, FeatureBlockSpec spec)
    : D_(std::move(D)), Y_(std::move(Y)), spec_(std::move(spec)) {
    if (D_.cols() != Y_.cols()) throw InvalidArgument("least squares: data and target column counts differ");
    if (D_.cols() < 1) throw InvalidArgument("least squares: need at least one snapshot");
    if (!spec_.blocks.empty() && static_cast<Eigen::Index>(spec_.total()) != D_.rows())
        throw InvalidArgument("least squares: block layout covers " + std::to_string(spec_.total()) +
                              " unknowns, data matrix has " + std::to_string(D_.rows()) + " rows");
    spec_.validate();
    gram_ = D_ * D_.transpose();
    rhs_ = D_ * Y_.transpose();
    scale_ = spec_.blocks.empty() ? Vector::Ones(D_.rows()) : spec_.scale_diagonal();
}

Matrix GershgorinLeastSquares::solve(double eta1, double eta2) const {
    std::vector<std::optional<std::size_t>> diag(static_cast<std::size_t>(Y_.rows()), spec_.diag_index);
    return solve(eta1, eta2, diag);
}

Matrix GershgorinLeastSquares::solve(double eta1, double eta2, std::span<const std::optional<std::size_t>> diag) const {
    if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw InvalidArgument("least squares: weights must be nonnegative");
    if (static_cast<Eigen::Index>(diag.size()) != Y_.rows())
        throw InvalidArgument("least squares: one diagonal position per target row is required");

    Matrix normal = gram_;
    normal.diagonal() += eta1 * scale_;
    Eigen::LLT<Matrix> llt(normal);
    const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
    if (llt.info() != Eigen::Success || !(rcond > 10.0 * std::numeric_limits<double>::epsilon())) {
        std::ostringstream msg;
        const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
        msg << "regularized normal matrix is singular or ill-conditioned (condition estimate " << cond
            << ", eta1 = " << eta1 << ")";
        throw ConditioningError(msg.str(), cond);
    }

    Matrix rhs = rhs_;
    for (std::size_t k = 0; k < diag.size(); ++k) {
        if (!diag[k]) continue;
        if (static_cast<Eigen::Index>(*diag[k]) >= rhs.rows()) throw InvalidArgument("least squares: diagonal position out of range");
        rhs(static_cast<Eigen::Index>(*diag[k]), static_cast<Eigen::Index>(k)) -= eta2;
    }
    return llt.solve(rhs).transpose();
}

double GershgorinLeastSquares::fit_error(const Matrix& beta) const { return (beta * D_ - Y_).norm(); }

Matrix solve_gershgorin_ls(const Matrix& D, const Matrix& Y, const RegConfig& reg, const FeatureBlockSpec& spec) {
    reg.validate();
    return GershgorinLeastSquares(D, Y, spec).solve(reg.eta1, reg.eta2);
}

}  // namespace ddinfer
