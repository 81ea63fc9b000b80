#include "ddinfer/pod.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

double relative_rank_tolerance(const Matrix& X, const Vector& sigma) {
    if (sigma.size() == 0) return 0.0;
    return static_cast<double>(std::max(X.rows(), X.cols())) * std::numeric_limits<double>::epsilon() * sigma(0);
}

}  // namespace

double ReducedBasis::retained_energy() const {
    const double total = sigma.squaredNorm();
    if (total == 0.0) return 0.0;
    return sigma.head(static_cast<Eigen::Index>(r)).squaredNorm() / total;
}

Vector singular_values(const Matrix& X) {
    if (X.size() == 0) return Vector();
    Eigen::BDCSVD<Matrix> svd(X);
    return svd.singularValues();
}

ReducedBasis compute_basis(const Matrix& X, const TruncationRule& rule) {
    if (X.size() == 0) throw InvalidArgument("basis: snapshot matrix is empty");
    if (!X.allFinite()) throw NumericalError("basis: snapshot matrix has non-finite entries");

    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
    const Vector& sigma = svd.singularValues();
    if (sigma(0) == 0.0) throw NumericalError("basis: snapshot matrix is identically zero");

    std::size_t r = 0;
    if (const auto* fixed = std::get_if<FixedRank>(&rule)) {
        if (fixed->r < 1 || fixed->r > static_cast<std::size_t>(sigma.size()))
            throw InvalidArgument("basis: rank " + std::to_string(fixed->r) + " outside [1, " +
                                  std::to_string(sigma.size()) + "]");
        r = fixed->r;
    } else {
        const double fraction = std::get<EnergyFraction>(rule).fraction;
        if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("basis: energy fraction must lie in (0, 1]");
        const Vector energy = sigma.array().square();
        const double total = energy.sum();
        double acc = 0.0;
        r = static_cast<std::size_t>(sigma.size());
        for (Eigen::Index i = 0; i < energy.size(); ++i) {
            acc += energy(i);
            // Slack of a few ulps so that fraction = 1 and exactly representable ratios are met.
            if (acc >= fraction * total * (1.0 - 4.0 * std::numeric_limits<double>::epsilon())) {
                r = static_cast<std::size_t>(i) + 1;
                break;
            }
        }
    }

    ReducedBasis basis;
    basis.V = svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
    basis.sigma = sigma;
    basis.r = r;
    return basis;
}

Matrix project(const Matrix& X, const ReducedBasis& basis) {
    if (X.rows() != basis.V.rows())
        throw InvalidArgument("project: matrix has " + std::to_string(X.rows()) + " rows, basis has " +
                              std::to_string(basis.V.rows()));
    return basis.V.transpose() * X;
}

Matrix reconstruct(const Matrix& Xhat, const ReducedBasis& basis) {
    if (Xhat.rows() != basis.V.cols()) throw InvalidArgument("reconstruct: reduced dimension mismatch");
    return basis.V * Xhat;
}

GapIndicator gap_indicator(const Matrix& X_rom, const Matrix& X_fom, std::size_t r) {
    const Vector s_rom = singular_values(X_rom);
    const Vector s_fom = singular_values(X_fom);
    if (r < 1 || r > static_cast<std::size_t>(s_rom.size()) || r > static_cast<std::size_t>(s_fom.size()))
        throw NumericalError("gap indicator: r = " + std::to_string(r) + " exceeds the rank bound of the data");
    if (s_rom(0) == 0.0 || s_fom(0) == 0.0) throw NumericalError("gap indicator: zero data matrix");

    const auto k = static_cast<Eigen::Index>(r - 1);
    GapIndicator g;
    const bool rom_deficient = s_rom(k) <= relative_rank_tolerance(X_rom, s_rom);
    const bool fom_deficient = s_fom(k) <= relative_rank_tolerance(X_fom, s_fom);
    g.decay_rom = rom_deficient ? 0.0 : s_rom(k) / s_rom(0);
    g.decay_fom = fom_deficient ? 0.0 : s_fom(k) / s_fom(0);
    g.saturated = rom_deficient || fom_deficient;
    if (g.decay_rom == 0.0)
        g.ratio = g.decay_fom == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    else
        g.ratio = g.decay_fom / g.decay_rom;
    return g;
}

}  // namespace ddinfer
