#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ddinfer/couple.hpp"
#include "ddinfer/data.hpp"
#include "ddinfer/error.hpp"
#include "ddinfer/opinf.hpp"
#include "ddinfer/pod.hpp"
#include "ddinfer/sfom.hpp"

namespace ddinfer {

using RhsFunction = std::function<Vector(double t, const Vector& x)>;
using InputFunction = std::function<Vector(double t)>;

// Raised by rk4_step when a stage (1-4) or the update turns non-finite (stage 5).
class DivergenceError : public NumericalError {
public:
    DivergenceError(int stage, double t)
        : NumericalError("non-finite value in RK4 stage " + std::to_string(stage) + " at t = " + std::to_string(t)),
          stage_(stage), t_(t) {}
    int stage() const noexcept { return stage_; }
    double time() const noexcept { return t_; }

private:
    int stage_;
    double t_;
};

// Classical fourth-order Runge-Kutta step.
Vector rk4_step(const RhsFunction& rhs, const Vector& x, double t, double dt);

struct Trajectory {
    std::vector<double> times;
    Matrix states;                        // full states, one column per stored time
    std::optional<Matrix> reduced_states; // reduced coordinates, when the model has them
    std::optional<double> diverged_at;

    std::size_t steps() const { return times.size(); }
};

// Generic driver: column 0 is x0, column j the state at grid.at(j). On
// divergence the trajectory is truncated and diverged_at records the time.
Trajectory integrate(const RhsFunction& rhs, const Vector& x0, const TimeGrid& grid);

// Reduced model. With a basis, x0 is a full state (projected) and states are
// reconstructed; without one, x0 and states are reduced coordinates.
Trajectory simulate_reduced(const QuadModel& M, const ReducedBasis* basis, const Vector& x0, const TimeGrid& grid,
                            const InputFunction& u = {});

Trajectory simulate_sparse(const SparseQuadModel& M, const Vector& x0, const TimeGrid& grid,
                           const InputFunction& u = {});

// Coupled model advanced as one joint state [xhat; x_F]. x0 is a full state (n).
Trajectory simulate_coupled(const CoupledModel& M, const Vector& x0, const TimeGrid& grid,
                            const InputFunction& u = {});

}  // namespace ddinfer
