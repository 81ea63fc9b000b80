#include "ddinfer/burgers.hpp"

#include <cmath>
#include <numbers>

#include "ddinfer/error.hpp"
#include "ddinfer/simulate.hpp"

namespace ddinfer {

namespace {

std::size_t integer_ratio(double num, double den, const char* what) {
    const double q = num / den;
    const double rounded = std::round(q);
    if (rounded < 1.0 || std::abs(q - rounded) > 1e-9 * std::max(1.0, rounded))
        throw InvalidArgument(std::string("Burgers config: ") + what + " is not an integer multiple");
    return static_cast<std::size_t>(rounded);
}

}  // namespace

std::size_t BurgersConfig::grid_size() const { return integer_ratio(L, dz, "L / dz"); }
std::size_t BurgersConfig::step_count() const { return integer_ratio(T, dt, "T / dt"); }

void BurgersConfig::validate() const {
    if (!(L > 0.0) || !(dz > 0.0)) throw InvalidArgument("Burgers config: L and dz must be positive");
    if (!(dt > 0.0) || !(T > 0.0)) throw InvalidArgument("Burgers config: dt and T must be positive");
    if (!(nu >= 0.0)) throw InvalidArgument("Burgers config: nu must be nonnegative");
    if (!std::isfinite(c)) throw InvalidArgument("Burgers config: c must be finite");
    if (!(ic.width > 0.0)) throw InvalidArgument("Burgers config: initial width must be positive");
    if (grid_size() < 3) throw InvalidArgument("Burgers config: need at least 3 grid points");
    (void)step_count();
}

Vector burgers_initial_condition(const BurgersConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.grid_size();
    const double center = cfg.ic.center.value_or(cfg.L / 2.0);
    const double two_pi = 2.0 * std::numbers::pi;
    Vector w(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double z = static_cast<double>(j) * cfg.dz;
        w(static_cast<Eigen::Index>(j)) = std::exp(-(z - center) * (z - center) / cfg.ic.width) +
                                          cfg.ic.cos_amp1 * std::cos(two_pi * z / cfg.L) +
                                          cfg.ic.cos_amp2 * std::cos(2.0 * two_pi * z / cfg.L);
    }
    return w;
}

Vector burgers_rhs(const Vector& w, const BurgersConfig& cfg) {
    const Eigen::Index n = w.size();
    const double adv = cfg.c / (6.0 * cfg.dz);
    const double dif = cfg.nu / (cfg.dz * cfg.dz);
    Vector f(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double wl = w((j + n - 1) % n);
        const double wr = w((j + 1) % n);
        const double wc = w(j);
        f(j) = -adv * (wc * (wr - wl) + (wr * wr - wl * wl)) + dif * (wr - 2.0 * wc + wl);
    }
    return f;
}

SnapshotSet simulate_burgers_reference(const BurgersConfig& cfg, ReferenceDiagnostics* diagnostics) {
    cfg.validate();
    const std::size_t steps = cfg.step_count();
    Vector w = burgers_initial_condition(cfg);
    const double mass0 = w.sum() * cfg.dz;

    ReferenceDiagnostics diag;
    Matrix X(w.size(), static_cast<Eigen::Index>(steps));
    std::vector<double> times;
    times.reserve(steps);
    const auto rhs = [&cfg](double, const Vector& x) { return burgers_rhs(x, cfg); };
    for (std::size_t j = 0; j < steps; ++j) {
        diag.max_cfl = std::max(diag.max_cfl, cfg.dt * std::abs(cfg.c) * w.cwiseAbs().maxCoeff() / cfg.dz);
        const double t = static_cast<double>(j) * cfg.dt;
        try {
            w = rk4_step(rhs, w, t, cfg.dt);
        } catch (const DivergenceError&) {
            diag.diverged_at = static_cast<double>(j + 1) * cfg.dt;
            break;
        }
        X.col(static_cast<Eigen::Index>(j)) = w;
        times.push_back(static_cast<double>(j + 1) * cfg.dt);
        if (mass0 != 0.0) diag.max_mass_drift = std::max(diag.max_mass_drift, std::abs(w.sum() * cfg.dz - mass0) / std::abs(mass0));
    }
    if (diagnostics) *diagnostics = diag;
    X.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(times.size()));
    return SnapshotSet(std::move(X), std::move(times));
}

}  // namespace ddinfer
