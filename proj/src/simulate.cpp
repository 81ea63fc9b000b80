#include "ddinfer/simulate.hpp"

namespace ddinfer {

namespace {

Vector checked(Vector v, int stage, double t) {
    if (!v.allFinite()) throw DivergenceError(stage, t);
    return v;
}

Vector input_at(const InputFunction& u, double t) { return u ? u(t) : Vector(); }

}  // namespace

Vector rk4_step(const RhsFunction& rhs, const Vector& x, double t, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("rk4: dt must be positive");
    const double h2 = 0.5 * dt;
    const Vector k1 = checked(rhs(t, x), 1, t);
    const Vector k2 = checked(rhs(t + h2, x + h2 * k1), 2, t + h2);
    const Vector k3 = checked(rhs(t + h2, x + h2 * k2), 3, t + h2);
    const Vector k4 = checked(rhs(t + dt, x + dt * k3), 4, t + dt);
    return checked(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 5, t + dt);
}

Trajectory integrate(const RhsFunction& rhs, const Vector& x0, const TimeGrid& grid) {
    if (!x0.allFinite()) throw InvalidArgument("simulate: initial state must be finite");
    const auto g = TimeGrid::make(grid.t0, grid.dt, grid.count);
    Trajectory traj;
    traj.states.resize(x0.size(), static_cast<Eigen::Index>(g.count));
    traj.times.reserve(g.count);
    traj.states.col(0) = x0;
    traj.times.push_back(g.at(0));
    Vector x = x0;
    std::size_t stored = 1;
    for (std::size_t j = 1; j < g.count; ++j) {
        try {
            x = rk4_step(rhs, x, g.at(j - 1), g.dt);
        } catch (const DivergenceError&) {
            traj.diverged_at = g.at(j);
            break;
        }
        traj.states.col(static_cast<Eigen::Index>(j)) = x;
        traj.times.push_back(g.at(j));
        ++stored;
    }
    traj.states.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(stored));
    return traj;
}

Trajectory simulate_reduced(const QuadModel& M, const ReducedBasis* basis, const Vector& x0, const TimeGrid& grid,
                            const InputFunction& u) {
    M.validate();
    Vector xhat0;
    if (basis) {
        if (x0.size() != basis->V.rows()) throw InvalidArgument("simulate: initial state dimension differs from the basis");
        if (basis->r != M.order()) throw InvalidArgument("simulate: basis dimension differs from model order");
        xhat0 = basis->V.transpose() * x0;
    } else {
        if (x0.size() != static_cast<Eigen::Index>(M.order())) throw InvalidArgument("simulate: initial state dimension mismatch");
        xhat0 = x0;
    }
    auto rhs = [&](double t, const Vector& x) { return M.rhs(x, input_at(u, t)); };
    Trajectory traj = integrate(rhs, xhat0, grid);
    if (basis) {
        traj.reduced_states = std::move(traj.states);
        traj.states = basis->V * *traj.reduced_states;
    }
    return traj;
}

Trajectory simulate_sparse(const SparseQuadModel& M, const Vector& x0, const TimeGrid& grid, const InputFunction& u) {
    if (x0.size() != static_cast<Eigen::Index>(M.n_F)) throw InvalidArgument("simulate: initial state dimension mismatch");
    const Vector none;
    auto rhs = [&](double t, const Vector& x) {
        Vector out(x.size());
        M.rhs_into(x, none, input_at(u, t), out);
        return out;
    };
    return integrate(rhs, x0, grid);
}

Trajectory simulate_coupled(const CoupledModel& M, const Vector& x0, const TimeGrid& grid, const InputFunction& u) {
    const auto& dd = M.dd;
    if (x0.size() != static_cast<Eigen::Index>(dd.n)) throw InvalidArgument("simulate: initial state must cover all DOFs");
    const auto r = static_cast<Eigen::Index>(M.basis.r);
    const auto nf = static_cast<Eigen::Index>(dd.n_fom());
    const auto iface = M.interface_in_fom();

    Vector z0(r + nf);
    z0.head(r) = M.basis.V.transpose() * select_rows(x0, dd.rom_ids);
    z0.tail(nf) = select_rows(x0, dd.fom_ids);

    Vector x_I(static_cast<Eigen::Index>(iface.size()));
    auto rhs = [&](double t, const Vector& z) {
        const Vector uu = input_at(u, t);
        const Vector xhat = z.head(r);
        const Vector x_F = z.tail(nf);
        for (std::size_t k = 0; k < iface.size(); ++k) x_I(static_cast<Eigen::Index>(k)) = x_F(static_cast<Eigen::Index>(iface[k]));
        Vector dz(r + nf);
        dz.head(r) = evaluate_reduced_rhs(M.rom, xhat, x_I, uu);
        M.fom.rhs_into(x_F, xhat, uu, dz.tail(nf));
        return dz;
    };
    Trajectory joint = integrate(rhs, z0, grid);

    Trajectory traj;
    traj.times = joint.times;
    traj.diverged_at = joint.diverged_at;
    traj.reduced_states = joint.states.topRows(r);
    traj.states.resize(static_cast<Eigen::Index>(dd.n), joint.states.cols());
    for (Eigen::Index j = 0; j < joint.states.cols(); ++j)
        traj.states.col(j) = reconstruct_state(M, joint.states.col(j).head(r), joint.states.col(j).tail(nf));
    return traj;
}

}  // namespace ddinfer
