#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fokker/delta.hpp"
#include "fokker/errors.hpp"
#include "fokker/numeric.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// The two-charge direct-interaction action, regularized on the lightcone:
//
//   I = -m1 int sqrt(1 - v1^2) dt1 - m2 int sqrt(1 - v2^2) dt2
//       - (e1 e2 / 2) intint rho_sigma(s12^2) (1 - v1.v2) dt1 dt2
//
// with s12^2 = (t1 - t2)^2 - |q1 - q2|^2. With this sign a positive coupling
// (like charges) is repulsive: the static interaction energy per unit time is
// +e1e2/(2r), which is what the generalized Hamiltonian reproduces at p = 0.
// Momenta below are the exact variational derivatives dI/dv of this action.
//
// Quadrature is composite trapezoid on each grid and tensor-product trapezoid
// for the double integral. All reductions use a fixed-order pairwise tree, so
// results are bit-identical for any worker count.

struct ActionBreakdown {
    double free1 = 0.0;
    double free2 = 0.0;
    double interaction = 0.0;
    double total = 0.0;
};

struct ResidualReport {
    std::vector<Vec3> residual1; // per-node, zero at fixed endpoints
    std::vector<Vec3> residual2;
    double sup_norm = 0.0; // over interior nodes of both particles
    double l2_norm = 0.0;  // sqrt(sum_j w_j |r_j|^2), interior nodes
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double sigma = 0.0;
    double coupling = 0.0;
};

namespace detail {

// Lorentz factor term; throws if the node is superluminal.
inline double sqrt_one_minus_v2(const Vec3& v, int particle, std::size_t node) {
    const double v2 = norm2(v);
    if (!(v2 < 1.0)) throw superluminal_error(particle, node, std::sqrt(v2));
    return std::sqrt(1.0 - v2);
}

struct ParticleView {
    const TimeGrid* grid;
    const std::vector<Vec3>* q;
    const std::vector<Vec3>* v;
    double mass;
};

// Lexicographic order on (mass, horizon, node count, values): used to pick a
// canonical particle ordering so exchange-symmetric quantities come out
// bit-identical under argument swap.
inline bool canonical_before(const ParticleView& a, const ParticleView& b) {
    if (a.mass != b.mass) return a.mass < b.mass;
    if (a.grid->horizon != b.grid->horizon) return a.grid->horizon < b.grid->horizon;
    if (a.grid->n_steps != b.grid->n_steps) return a.grid->n_steps < b.grid->n_steps;
    for (std::size_t j = 0; j < a.q->size(); ++j)
        for (std::size_t k = 0; k < 3; ++k) {
            const double x = (*a.q)[j][k], y = (*b.q)[j][k];
            if (x != y) return x < y;
        }
    for (std::size_t j = 0; j < a.v->size(); ++j)
        for (std::size_t k = 0; k < 3; ++k) {
            const double x = (*a.v)[j][k], y = (*b.v)[j][k];
            if (x != y) return x < y;
        }
    return false;
}

inline double free_term(const ParticleView& p, int particle_tag) {
    const auto w = p.grid->trapezoid_weights();
    std::vector<double> terms(w.size());
    for (std::size_t j = 0; j < w.size(); ++j)
        terms[j] = -p.mass * w[j] * sqrt_one_minus_v2((*p.v)[j], particle_tag, j);
    return pairwise_sum(terms);
}

// Double-integral kernel sum: rows over particle-a nodes, inner loop over
// particle-b nodes, rows combined pairwise in index order.
inline double interaction_sum(const ParticleView& a, const ParticleView& b,
                              double sigma, unsigned threads) {
    const auto wa = a.grid->trapezoid_weights();
    const auto wb = b.grid->trapezoid_weights();
    std::vector<double> rows(wa.size(), 0.0);
    parallel_for(wa.size(), threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> terms(wb.size());
        for (std::size_t j = lo; j < hi; ++j) {
            const double tj = a.grid->node(j);
            for (std::size_t k = 0; k < wb.size(); ++k) {
                const double s2 = interval_squared(tj, (*a.q)[j],
                                                   b.grid->node(k), (*b.q)[k]);
                terms[k] = wb[k] * regularized_delta(s2, sigma) *
                           (1.0 - dot((*a.v)[j], (*b.v)[k]));
            }
            rows[j] = wa[j] * pairwise_sum(terms);
        }
    });
    return pairwise_sum(rows);
}

} // namespace detail

// Action evaluated on explicit position/velocity fields. The public
// trajectory overload reconstructs velocities first; keeping (q, v)
// independent here is what the velocity-gradient oracle and the generalized
// Legendre transform evaluate.
inline ActionBreakdown fokker_action_qv(
    const TimeGrid& grid1, const std::vector<Vec3>& q1, const std::vector<Vec3>& v1,
    const TimeGrid& grid2, const std::vector<Vec3>& q2, const std::vector<Vec3>& v2,
    const SystemParams& params, unsigned threads = 1) {
    require_sigma(params.sigma);
    detail::ParticleView p1{&grid1, &q1, &v1, params.m1};
    detail::ParticleView p2{&grid2, &q2, &v2, params.m2};

    ActionBreakdown out;
    out.free1 = detail::free_term(p1, 1);
    out.free2 = detail::free_term(p2, 2);

    // Canonical ordering keeps the double sum bit-identical under particle
    // exchange; the kernel itself is symmetric.
    const bool swap = detail::canonical_before(p2, p1);
    const double kernel = swap
        ? detail::interaction_sum(p2, p1, params.sigma, threads)
        : detail::interaction_sum(p1, p2, params.sigma, threads);
    out.interaction = -0.5 * params.coupling * kernel;
    out.total = (out.free1 + out.free2) + out.interaction;
    return out;
}

inline ActionBreakdown fokker_action(const Trajectory& traj1,
                                     const Trajectory& traj2,
                                     const SystemParams& params,
                                     unsigned threads = 1) {
    require_valid(params, traj1, traj2);
    return fokker_action_qv(traj1.grid, traj1.values, velocity(traj1),
                            traj2.grid, traj2.values, velocity(traj2), params,
                            threads);
}

// Momentum fields p_a = dI/dv_a(t):
//   p_a = m_a v_a / sqrt(1 - v_a^2) + (e1e2/2) int dt_b v_b rho_sigma(s^2)
// using the same trapezoid rule as the action, so the velocity-gradient
// check is exact up to the finite-difference step.
inline std::vector<Vec3> momentum_field_qv(
    const TimeGrid& grid_a, const std::vector<Vec3>& qa, const std::vector<Vec3>& va,
    const TimeGrid& grid_b, const std::vector<Vec3>& qb, const std::vector<Vec3>& vb,
    double mass_a, double coupling, double sigma, int particle_tag,
    unsigned threads = 1) {
    require_sigma(sigma);
    const auto wb = grid_b.trapezoid_weights();
    std::vector<Vec3> p(qa.size());
    parallel_for(qa.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            const double tj = grid_a.node(j);
            Vec3 integral;
            for (std::size_t k = 0; k < wb.size(); ++k) {
                const double s2 =
                    interval_squared(tj, qa[j], grid_b.node(k), qb[k]);
                integral += (wb[k] * regularized_delta(s2, sigma)) * vb[k];
            }
            const double gamma_term =
                mass_a / detail::sqrt_one_minus_v2(va[j], particle_tag, j);
            p[j] = gamma_term * va[j] + (0.5 * coupling) * integral;
        }
    });
    return p;
}

inline std::pair<std::vector<Vec3>, std::vector<Vec3>> momentum_fields(
    const Trajectory& traj1, const Trajectory& traj2, const SystemParams& params,
    unsigned threads = 1) {
    require_valid(params, traj1, traj2);
    const auto v1 = velocity(traj1);
    const auto v2 = velocity(traj2);
    auto p1 = momentum_field_qv(traj1.grid, traj1.values, v1, traj2.grid,
                                traj2.values, v2, params.m1, params.coupling,
                                params.sigma, 1, threads);
    auto p2 = momentum_field_qv(traj2.grid, traj2.values, v2, traj1.grid,
                                traj1.values, v1, params.m2, params.coupling,
                                params.sigma, 2, threads);
    return {std::move(p1), std::move(p2)};
}

// dI/dq_a at fixed velocities (the configuration part of the variation):
//   dI/dq_a(t) = e1e2 int dt_b rho'(s^2) (q_a - q_b) (1 - v_a.v_b)
inline std::vector<Vec3> configuration_gradient_qv(
    const TimeGrid& grid_a, const std::vector<Vec3>& qa, const std::vector<Vec3>& va,
    const TimeGrid& grid_b, const std::vector<Vec3>& qb, const std::vector<Vec3>& vb,
    double coupling, double sigma, unsigned threads = 1) {
    require_sigma(sigma);
    const auto wb = grid_b.trapezoid_weights();
    std::vector<Vec3> g(qa.size());
    parallel_for(qa.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            const double tj = grid_a.node(j);
            Vec3 integral;
            for (std::size_t k = 0; k < wb.size(); ++k) {
                const double s2 =
                    interval_squared(tj, qa[j], grid_b.node(k), qb[k]);
                const double factor = wb[k] *
                    regularized_delta_derivative(s2, sigma) *
                    (1.0 - dot(va[j], vb[k]));
                integral += factor * (qa[j] - qb[k]);
            }
            g[j] = coupling * integral;
        }
    });
    return g;
}

namespace detail {

inline void accumulate_norms(const std::vector<Vec3>& r, const TimeGrid& grid,
                             double& sup, std::vector<double>& l2_terms) {
    const auto w = grid.trapezoid_weights();
    for (std::size_t j = 1; j + 1 < r.size(); ++j) {
        sup = std::max(sup, norm(r[j]));
        l2_terms.push_back(w[j] * norm2(r[j]));
    }
}

} // namespace detail

// Multi-time Euler-Lagrange residual
//   r_a(t_j) = dI/dq_a(t_j) - d/dt_a [dI/dv_a(t_j)],
// evaluated analytically; d/dt_a uses the same stencil as velocity().
// Endpoint nodes carry no residual (fixed-endpoint variation) and are
// excluded from the norms.
inline ResidualReport el_residual(const Trajectory& traj1, const Trajectory& traj2,
                                  const SystemParams& params,
                                  unsigned threads = 1) {
    require_valid(params, traj1, traj2);
    const auto v1 = velocity(traj1);
    const auto v2 = velocity(traj2);

    const auto p1 = momentum_field_qv(traj1.grid, traj1.values, v1, traj2.grid,
                                      traj2.values, v2, params.m1,
                                      params.coupling, params.sigma, 1, threads);
    const auto p2 = momentum_field_qv(traj2.grid, traj2.values, v2, traj1.grid,
                                      traj1.values, v1, params.m2,
                                      params.coupling, params.sigma, 2, threads);
    const auto g1 = configuration_gradient_qv(traj1.grid, traj1.values, v1,
                                              traj2.grid, traj2.values, v2,
                                              params.coupling, params.sigma,
                                              threads);
    const auto g2 = configuration_gradient_qv(traj2.grid, traj2.values, v2,
                                              traj1.grid, traj1.values, v1,
                                              params.coupling, params.sigma,
                                              threads);
    const auto dp1 = stencil_time_derivative(p1, traj1.grid.dt());
    const auto dp2 = stencil_time_derivative(p2, traj2.grid.dt());

    ResidualReport rep;
    rep.residual1.assign(traj1.n_nodes(), Vec3{});
    rep.residual2.assign(traj2.n_nodes(), Vec3{});
    for (std::size_t j = 1; j + 1 < traj1.n_nodes(); ++j)
        rep.residual1[j] = g1[j] - dp1[j];
    for (std::size_t j = 1; j + 1 < traj2.n_nodes(); ++j)
        rep.residual2[j] = g2[j] - dp2[j];

    std::vector<double> l2_terms;
    detail::accumulate_norms(rep.residual1, traj1.grid, rep.sup_norm, l2_terms);
    detail::accumulate_norms(rep.residual2, traj2.grid, rep.sup_norm, l2_terms);
    rep.l2_norm = std::sqrt(pairwise_sum(l2_terms));
    rep.n1 = traj1.grid.n_steps;
    rep.n2 = traj2.grid.n_steps;
    rep.sigma = params.sigma;
    rep.coupling = params.coupling;
    return rep;
}

// ---------------------------------------------------------------------------
// Numeric functional gradients (oracles for the analytic fields above).

enum class GradientTarget { Total, Free, Interaction };

// What is varied when a node is perturbed:
//  - Position: nodal coordinate, velocities recomputed from the perturbed
//    path (the full discrete gradient).
//  - PositionFrozenVelocity: nodal coordinate with velocity fields held
//    fixed (realizes dI/dq).
//  - Velocity: nodal velocity varied independently (realizes dI/dv).
enum class GradientVariable { Position, PositionFrozenVelocity, Velocity };

namespace detail {

inline double action_target_qv(const GradientTarget target,
                               const TimeGrid& g1, const std::vector<Vec3>& q1,
                               const std::vector<Vec3>& v1, const TimeGrid& g2,
                               const std::vector<Vec3>& q2,
                               const std::vector<Vec3>& v2,
                               const SystemParams& params) {
    const ActionBreakdown b = fokker_action_qv(g1, q1, v1, g2, q2, v2, params);
    switch (target) {
        case GradientTarget::Total: return b.total;
        case GradientTarget::Free: return b.free1 + b.free2;
        case GradientTarget::Interaction: return b.interaction;
    }
    return b.total;
}

} // namespace detail

// Central-difference derivative of the scalar action with respect to each
// nodal degree of freedom of `which` particle (1 or 2), divided by dt to
// convert nodal partials into a functional-derivative density.
inline std::vector<Vec3> numeric_functional_gradient(
    GradientTarget target, GradientVariable variable, int which,
    const Trajectory& traj1, const Trajectory& traj2, const SystemParams& params,
    double h, unsigned threads = 1) {
    if (!(h > 0.0))
        throw invalid_step_error("invalid step: h = " + std::to_string(h) +
                                 " must be > 0");
    if (which != 1 && which != 2)
        throw dimension_error("particle selector must be 1 or 2");
    require_valid(params, traj1, traj2);

    const TimeGrid& g1 = traj1.grid;
    const TimeGrid& g2 = traj2.grid;
    const auto v1 = velocity(traj1);
    const auto v2 = velocity(traj2);
    const Trajectory& target_traj = (which == 1) ? traj1 : traj2;
    const double dt = target_traj.grid.dt();
    const int dim = target_traj.dim;

    std::vector<Vec3> grad(target_traj.n_nodes());
    parallel_for(target_traj.n_nodes(), threads,
                 [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            for (int k = 0; k < dim; ++k) {
                auto eval = [&](double sign) {
                    std::vector<Vec3> q1p = traj1.values;
                    std::vector<Vec3> q2p = traj2.values;
                    std::vector<Vec3> v1p = v1;
                    std::vector<Vec3> v2p = v2;
                    auto& qp = (which == 1) ? q1p : q2p;
                    auto& vp = (which == 1) ? v1p : v2p;
                    if (variable == GradientVariable::Velocity) {
                        vp[j][static_cast<std::size_t>(k)] += sign * h;
                    } else {
                        qp[j][static_cast<std::size_t>(k)] += sign * h;
                        if (variable == GradientVariable::Position) {
                            const Trajectory& base = (which == 1) ? traj1 : traj2;
                            Trajectory perturbed = base;
                            perturbed.values = qp;
                            vp = velocity(perturbed);
                        }
                    }
                    return detail::action_target_qv(target, g1, q1p, v1p, g2,
                                                    q2p, v2p, params);
                };
                const double plus = eval(+1.0);
                const double minus = eval(-1.0);
                grad[j][static_cast<std::size_t>(k)] =
                    (plus - minus) / (2.0 * h * dt);
            }
        }
    });
    return grad;
}

// Two-step Richardson extrapolation of the central difference: combines
// G(h) and G(h/2) to cancel the O(h^2) term.
inline std::vector<Vec3> richardson_functional_gradient(
    GradientTarget target, GradientVariable variable, int which,
    const Trajectory& traj1, const Trajectory& traj2, const SystemParams& params,
    double h, unsigned threads = 1) {
    const auto gh = numeric_functional_gradient(target, variable, which, traj1,
                                                traj2, params, h, threads);
    const auto gh2 = numeric_functional_gradient(target, variable, which, traj1,
                                                 traj2, params, 0.5 * h, threads);
    std::vector<Vec3> out(gh.size());
    for (std::size_t j = 0; j < gh.size(); ++j)
        out[j] = (1.0 / 3.0) * (4.0 * gh2[j] - gh[j]);
    return out;
}

} // namespace fokker
