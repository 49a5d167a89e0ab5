#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fokker/errors.hpp"
#include "fokker/solver.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Nonrelativistic two-body oracle: Newtonian dynamics with the static
// potential V(r) = (e1e2/2) / r (the sigma -> 0 limit of the interaction for
// charges at rest, at this library's conventions). Solved as a boundary-value
// problem by shooting on the initial velocities with an adaptive embedded
// Runge-Kutta integrator. Used only as an independent reference.

namespace detail {

// State layout: q1, q2, v1, v2 as consecutive dim-blocks.
using OdeState = Eigen::VectorXd;

inline OdeState coulomb_rhs(const OdeState& y, double m1, double m2,
                            double coupling, int dim) {
    OdeState dy(y.size());
    Eigen::Vector3d q1 = Eigen::Vector3d::Zero(), q2 = Eigen::Vector3d::Zero();
    for (int k = 0; k < dim; ++k) {
        q1[k] = y[k];
        q2[k] = y[dim + k];
    }
    const Eigen::Vector3d d = q1 - q2;
    const double r = d.norm();
    // F_on_1 = -dV/dq1 = +(coupling/2) (q1 - q2) / r^3
    const Eigen::Vector3d f = (0.5 * coupling / (r * r * r)) * d;
    for (int k = 0; k < dim; ++k) {
        dy[k] = y[2 * dim + k];           // dq1 = v1
        dy[dim + k] = y[3 * dim + k];     // dq2 = v2
        dy[2 * dim + k] = f[k] / m1;      // dv1
        dy[3 * dim + k] = -f[k] / m2;     // dv2
    }
    return dy;
}

// Dormand-Prince 5(4) step with the classic coefficients.
inline void dopri5_step(const OdeState& y, double t, double h, double m1,
                        double m2, double coupling, int dim, OdeState& y5,
                        double& err_norm) {
    auto f = [&](const OdeState& s) {
        return coulomb_rhs(s, m1, m2, coupling, dim);
    };
    (void)t;
    const OdeState k1 = f(y);
    const OdeState k2 = f(y + h * (1.0 / 5.0) * k1);
    const OdeState k3 = f(y + h * ((3.0 / 40.0) * k1 + (9.0 / 40.0) * k2));
    const OdeState k4 = f(y + h * ((44.0 / 45.0) * k1 - (56.0 / 15.0) * k2 +
                                   (32.0 / 9.0) * k3));
    const OdeState k5 =
        f(y + h * ((19372.0 / 6561.0) * k1 - (25360.0 / 2187.0) * k2 +
                   (64448.0 / 6561.0) * k3 - (212.0 / 729.0) * k4));
    const OdeState k6 =
        f(y + h * ((9017.0 / 3168.0) * k1 - (355.0 / 33.0) * k2 +
                   (46732.0 / 5247.0) * k3 + (49.0 / 176.0) * k4 -
                   (5103.0 / 18656.0) * k5));
    y5 = y + h * ((35.0 / 384.0) * k1 + (500.0 / 1113.0) * k3 +
                  (125.0 / 192.0) * k4 - (2187.0 / 6784.0) * k5 +
                  (11.0 / 84.0) * k6);
    const OdeState k7 = f(y5);
    const OdeState y4 =
        y + h * ((5179.0 / 57600.0) * k1 + (7571.0 / 16695.0) * k3 +
                 (393.0 / 640.0) * k4 - (92097.0 / 339200.0) * k5 +
                 (187.0 / 2100.0) * k6 + (1.0 / 40.0) * k7);
    err_norm = (y5 - y4).lpNorm<Eigen::Infinity>();
}

// Integrate from t0 to t1 exactly, with adaptive step control.
inline OdeState integrate_to(OdeState y, double t0, double t1, double m1,
                             double m2, double coupling, int dim, double tol) {
    double t = t0;
    double h = (t1 - t0) / 16.0;
    const double h_min = (t1 - t0) * 1e-12;
    int guard = 0;
    while (t < t1) {
        if (++guard > 1000000)
            throw divergence_error("adaptive integrator exceeded step budget", {});
        if (t + h > t1) h = t1 - t;
        OdeState y_next;
        double err;
        dopri5_step(y, t, h, m1, m2, coupling, dim, y_next, err);
        const double scale = tol * std::max(1.0, y.lpNorm<Eigen::Infinity>());
        if (err <= scale || h <= h_min) {
            t += h;
            y = std::move(y_next);
        }
        const double factor =
            (err > 0.0) ? 0.9 * std::pow(scale / err, 0.2) : 2.0;
        h *= std::min(4.0, std::max(0.2, factor));
        h = std::max(h, h_min);
    }
    return y;
}

} // namespace detail

// Conserved Newtonian energy of the oracle system, for conservation checks.
inline double coulomb_energy(const Vec3& q1, const Vec3& v1, const Vec3& q2,
                             const Vec3& v2, double m1, double m2,
                             double coupling) {
    const double r = norm(q1 - q2);
    return 0.5 * m1 * norm2(v1) + 0.5 * m2 * norm2(v2) + 0.5 * coupling / r;
}

struct CoulombSolution {
    Solution solution;                 // trajectories sampled on the grids
    std::vector<Vec3> velocities1;     // integrator velocities at grid nodes
    std::vector<Vec3> velocities2;
    double shooting_mismatch = 0.0;    // endpoint defect, sup-norm
    std::size_t shooting_iterations = 0;
};

// Shooting solver for the Newtonian boundary-value problem. Requires a
// common horizon (single-time dynamics). integrator_tol controls the local
// error of the adaptive steps.
inline CoulombSolution coulomb_reference(const BvpEndpoints& ep,
                                         const TimeGrid& grid1,
                                         const TimeGrid& grid2,
                                         const SystemParams& params,
                                         double shooting_tol = 1e-10,
                                         double integrator_tol = 1e-11) {
    if (grid1.horizon != grid2.horizon)
        throw dimension_error(
            "coulomb_reference requires a common horizon T1 == T2");
    const int dim = params.dim;
    const double T = grid1.horizon;
    detail::check_timelike(ep.q1_start, ep.q1_end, T, 1);
    detail::check_timelike(ep.q2_start, ep.q2_end, T, 2);

    const Eigen::Index nu = 2 * dim; // unknown initial velocities
    auto make_state = [&](const Eigen::VectorXd& u) {
        detail::OdeState y(4 * dim);
        for (int k = 0; k < dim; ++k) {
            y[k] = ep.q1_start[static_cast<std::size_t>(k)];
            y[dim + k] = ep.q2_start[static_cast<std::size_t>(k)];
            y[2 * dim + k] = u[k];
            y[3 * dim + k] = u[dim + k];
        }
        return y;
    };
    auto mismatch = [&](const Eigen::VectorXd& u) {
        const detail::OdeState yT = detail::integrate_to(
            make_state(u), 0.0, T, params.m1, params.m2, params.coupling, dim,
            integrator_tol);
        Eigen::VectorXd g(nu);
        for (int k = 0; k < dim; ++k) {
            g[k] = yT[k] - ep.q1_end[static_cast<std::size_t>(k)];
            g[dim + k] = yT[dim + k] - ep.q2_end[static_cast<std::size_t>(k)];
        }
        return g;
    };

    // Straight-line initial guess for the velocities.
    Eigen::VectorXd u(nu);
    for (int k = 0; k < dim; ++k) {
        u[k] = (ep.q1_end[static_cast<std::size_t>(k)] -
                ep.q1_start[static_cast<std::size_t>(k)]) / T;
        u[dim + k] = (ep.q2_end[static_cast<std::size_t>(k)] -
                      ep.q2_start[static_cast<std::size_t>(k)]) / T;
    }

    Eigen::VectorXd g = mismatch(u);
    std::vector<double> history{g.lpNorm<Eigen::Infinity>()};
    std::size_t iters = 0;
    for (; iters < 30 && history.back() > shooting_tol; ++iters) {
        Eigen::MatrixXd J(nu, nu);
        for (Eigen::Index i = 0; i < nu; ++i) {
            const double h = 1e-7 * (1.0 + std::abs(u[i]));
            Eigen::VectorXd up = u;
            up[i] += h;
            J.col(i) = (mismatch(up) - g) / h;
        }
        const Eigen::VectorXd step = J.partialPivLu().solve(-g);
        if (!step.allFinite())
            throw divergence_error("shooting Jacobian solve failed", history);
        u += step;
        g = mismatch(u);
        history.push_back(g.lpNorm<Eigen::Infinity>());
    }
    if (history.back() > shooting_tol)
        throw divergence_error("shooting did not converge", history);

    // Sample the converged solution at the grid nodes of both particles.
    CoulombSolution out;
    out.shooting_mismatch = history.back();
    out.shooting_iterations = iters;

    const TimeGrid* grids[2] = {&grid1, &grid2};
    std::vector<Vec3> qs[2], vs[2];
    detail::OdeState y = make_state(u);
    // One pass over the union of node times keeps the integration exact at
    // every requested node even when n1 != n2.
    std::vector<std::pair<double, int>> stops;
    for (int a = 0; a < 2; ++a)
        for (std::size_t j = 0; j < grids[a]->n_nodes(); ++j)
            stops.push_back({grids[a]->node(j), a});
    std::sort(stops.begin(), stops.end());
    qs[0].reserve(grid1.n_nodes());
    qs[1].reserve(grid2.n_nodes());
    double t = 0.0;
    for (const auto& [t_stop, a] : stops) {
        if (t_stop > t) {
            y = detail::integrate_to(y, t, t_stop, params.m1, params.m2,
                                     params.coupling, dim, integrator_tol);
            t = t_stop;
        }
        Vec3 q, v;
        for (int k = 0; k < dim; ++k) {
            q[static_cast<std::size_t>(k)] = y[a * dim + k];
            v[static_cast<std::size_t>(k)] = y[(2 + a) * dim + k];
        }
        qs[a].push_back(q);
        vs[a].push_back(v);
    }

    out.solution.traj1 = make_trajectory(grid1, dim, std::move(qs[0]));
    out.solution.traj2 = make_trajectory(grid2, dim, std::move(qs[1]));
    out.velocities1 = std::move(vs[0]);
    out.velocities2 = std::move(vs[1]);
    // The controlled quantity is the endpoint defect; per-node residuals are
    // not meaningful for the oracle and stay zero.
    out.solution.residual.residual1.assign(grid1.n_nodes(), Vec3{});
    out.solution.residual.residual2.assign(grid2.n_nodes(), Vec3{});
    out.solution.residual.sup_norm = out.shooting_mismatch;
    out.solution.residual.l2_norm = out.shooting_mismatch;
    out.solution.residual.n1 = grid1.n_steps;
    out.solution.residual.n2 = grid2.n_steps;
    out.solution.residual.sigma = params.sigma;
    out.solution.residual.coupling = params.coupling;
    out.solution.trace.push_back(
        {params.coupling, iters, out.shooting_mismatch});
    return out;
}

} // namespace fokker
