#pragma once

#include <cstddef>
#include <optional>

#include "ddinfer/data.hpp"

namespace ddinfer {

// 1D periodic viscous Burgers problem, dw/dt + c w dw/dz = nu d2w/dz2 on [0, L).
struct BurgersConfig {
    double c = 0.5;
    double nu = 1e-2;
    double L = 10.0;
    double dz = 2e-2;
    double dt = 2.5e-2;
    double T = 18.0;

    struct InitialCondition {
        std::optional<double> center;  // defaults to L / 2
        double width = 1.2;
        double cos_amp1 = 0.1;
        double cos_amp2 = 0.1;
    } ic;

    std::size_t grid_size() const;   // L / dz
    std::size_t step_count() const;  // T / dt
    void validate() const;
};

struct ReferenceDiagnostics {
    double max_cfl = 0.0;           // max over steps of dt * c * max|w| / dz
    double max_mass_drift = 0.0;    // max relative change of the discrete integral of w
    std::optional<double> diverged_at;
};

Vector burgers_initial_condition(const BurgersConfig& cfg);

// Semi-discrete right-hand side: skew-symmetric central advection plus the
// 3-point diffusion stencil, periodic wrap.
Vector burgers_rhs(const Vector& w, const BurgersConfig& cfg);

// RK4 reference run with solver step = snapshot step. Column j holds the
// state at t = (j + 1) dt, so the default configuration yields 500 x 720.
SnapshotSet simulate_burgers_reference(const BurgersConfig& cfg, ReferenceDiagnostics* diagnostics = nullptr);

}  // namespace ddinfer
