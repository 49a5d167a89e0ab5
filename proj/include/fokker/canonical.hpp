#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fokker/action.hpp"
#include "fokker/delta.hpp"
#include "fokker/errors.hpp"
#include "fokker/numeric.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Generalized Legendre transform machinery: velocity elimination from the
// momentum relations (perturbative and damped fixed-point), the generalized
// Hamiltonian H[q,p] = sum_a int p_a F_a dt_a - I[q, F], the canonical form
// of the action, and the two canonical stationarity residuals.

enum class VelocityMethod { PerturbativeFirstOrder, FixedPointNumeric };

struct VelocitySolution {
    std::vector<Vec3> F1;
    std::vector<Vec3> F2;
    VelocityMethod method = VelocityMethod::FixedPointNumeric;
    std::size_t iterations = 0;
    double update_norm = 0.0;     // last fixed-point update, sup-norm
    double momentum_residual = 0.0; // sup-norm of p - dI/dv at the solution
    double tolerance = 0.0;
    std::vector<double> history; // update norms per iteration
};

struct FixedPointOptions {
    double tol = 1e-12;
    std::size_t max_iter = 200;
    double damping = 0.5;
};

struct StationarityReport {
    std::vector<Vec3> residual_q1; // qdot - dH/dp, per node
    std::vector<Vec3> residual_q2;
    std::vector<Vec3> residual_p1; // pdot + dH/dq, per node
    std::vector<Vec3> residual_p2;
    double q_sup_norm = 0.0; // interior nodes
    double q_l2_norm = 0.0;
    double p_sup_norm = 0.0;
    double p_l2_norm = 0.0;
};

namespace detail {

// Zero-coupling inversion of p = m v / sqrt(1 - v^2).
inline Vec3 free_velocity(const Vec3& p, double m) {
    return (1.0 / std::sqrt(norm2(p) + m * m)) * p;
}

// (c/2) int dt_b v_b rho_sigma(s_ab^2) evaluated at every node of grid_a.
inline std::vector<Vec3> momentum_interaction_integral(
    const TimeGrid& grid_a, const std::vector<Vec3>& qa, const TimeGrid& grid_b,
    const std::vector<Vec3>& qb, const std::vector<Vec3>& vb, double coupling,
    double sigma) {
    const auto wb = grid_b.trapezoid_weights();
    std::vector<Vec3> out(qa.size());
    for (std::size_t j = 0; j < qa.size(); ++j) {
        const double tj = grid_a.node(j);
        Vec3 integral;
        for (std::size_t k = 0; k < wb.size(); ++k) {
            const double s2 = interval_squared(tj, qa[j], grid_b.node(k), qb[k]);
            integral += (wb[k] * regularized_delta(s2, sigma)) * vb[k];
        }
        out[j] = (0.5 * coupling) * integral;
    }
    return out;
}

inline double field_sup_distance(const std::vector<Vec3>& a,
                                 const std::vector<Vec3>& b) {
    double sup = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        sup = std::max(sup, norm(a[j] - b[j]));
    return sup;
}

struct PhaseView {
    const TimeGrid* grid;
    const std::vector<Vec3>* q;
    const std::vector<Vec3>* p;
    double mass;
};

inline void check_phase(const PhaseField& phase, const char* name) {
    if (phase.p.size() != phase.q.n_nodes())
        throw dimension_error(std::string(name) +
                              ": momentum field size does not match grid");
}

} // namespace detail

// First-order velocity elimination:
//   F_a = p_a/E_a + (e1e2/2) int dt_b rho_sigma(s^2)/(E_a E_b)
//                         * [ p_a (p_a.p_b)/E_a^2 - p_b ],  E = sqrt(p^2+m^2).
// Exact at coupling 0.
inline VelocitySolution perturbative_velocities(const PhaseField& phase1,
                                                const PhaseField& phase2,
                                                const SystemParams& params) {
    require_sigma(params.sigma);
    detail::check_phase(phase1, "phase1");
    detail::check_phase(phase2, "phase2");

    VelocitySolution sol;
    sol.method = VelocityMethod::PerturbativeFirstOrder;
    sol.iterations = 1;

    const detail::PhaseView views[2] = {
        {&phase1.q.grid, &phase1.q.values, &phase1.p, params.m1},
        {&phase2.q.grid, &phase2.q.values, &phase2.p, params.m2}};
    std::vector<Vec3>* out[2] = {&sol.F1, &sol.F2};

    for (int a = 0; a < 2; ++a) {
        const auto& self = views[a];
        const auto& other = views[1 - a];
        const auto wb = other.grid->trapezoid_weights();
        out[a]->resize(self.q->size());
        for (std::size_t j = 0; j < self.q->size(); ++j) {
            const Vec3& pj = (*self.p)[j];
            const double Ea2 = norm2(pj) + self.mass * self.mass;
            const double Ea = std::sqrt(Ea2);
            const double tj = self.grid->node(j);
            Vec3 correction;
            for (std::size_t k = 0; k < wb.size(); ++k) {
                const Vec3& pk = (*other.p)[k];
                const double Eb =
                    std::sqrt(norm2(pk) + other.mass * other.mass);
                const double s2 = interval_squared(tj, (*self.q)[j],
                                                   other.grid->node(k),
                                                   (*other.q)[k]);
                const double rho = regularized_delta(s2, params.sigma);
                const Vec3 bracket = (dot(pj, pk) / Ea2) * pj - pk;
                correction += (wb[k] * rho / (Ea * Eb)) * bracket;
            }
            (*out[a])[j] =
                (1.0 / Ea) * pj + (0.5 * params.coupling) * correction;
        }
    }
    return sol;
}

// Damped fixed-point elimination of velocities from the exact (discretized)
// momentum relations, started from the zero-coupling inversion. Returns when
// both the update norm and the momentum-equation residual drop below tol.
inline VelocitySolution numeric_velocities(const PhaseField& phase1,
                                           const PhaseField& phase2,
                                           const SystemParams& params,
                                           const FixedPointOptions& opt = {},
                                           const std::vector<Vec3>* warm1 = nullptr,
                                           const std::vector<Vec3>* warm2 = nullptr) {
    require_sigma(params.sigma);
    detail::check_phase(phase1, "phase1");
    detail::check_phase(phase2, "phase2");
    if (!(opt.damping > 0.0 && opt.damping <= 1.0))
        throw error("fixed-point damping must lie in (0, 1]");

    const detail::PhaseView views[2] = {
        {&phase1.q.grid, &phase1.q.values, &phase1.p, params.m1},
        {&phase2.q.grid, &phase2.q.values, &phase2.p, params.m2}};

    VelocitySolution sol;
    sol.method = VelocityMethod::FixedPointNumeric;
    sol.tolerance = opt.tol;

    std::vector<Vec3> v[2];
    for (int a = 0; a < 2; ++a) {
        v[a].resize(views[a].q->size());
        const std::vector<Vec3>* warm = (a == 0) ? warm1 : warm2;
        if (warm && warm->size() == v[a].size()) {
            v[a] = *warm;
        } else {
            for (std::size_t j = 0; j < v[a].size(); ++j)
                v[a][j] = detail::free_velocity((*views[a].p)[j], views[a].mass);
        }
    }

    auto momentum_residual = [&](const std::vector<Vec3> va[2]) {
        double sup = 0.0;
        for (int a = 0; a < 2; ++a) {
            const auto& self = views[a];
            const auto& other = views[1 - a];
            const auto integral = detail::momentum_interaction_integral(
                *self.grid, *self.q, *other.grid, *other.q, va[1 - a],
                params.coupling, params.sigma);
            for (std::size_t j = 0; j < va[a].size(); ++j) {
                const double g = 1.0 - norm2(va[a][j]);
                const Vec3 lhs = (self.mass / std::sqrt(g)) * va[a][j] +
                                 integral[j] - (*self.p)[j];
                sup = std::max(sup, norm(lhs));
            }
        }
        return sup;
    };

    for (std::size_t iter = 1; iter <= opt.max_iter; ++iter) {
        std::vector<Vec3> v_new[2];
        for (int a = 0; a < 2; ++a) {
            const auto& self = views[a];
            const auto& other = views[1 - a];
            const auto integral = detail::momentum_interaction_integral(
                *self.grid, *self.q, *other.grid, *other.q, v[1 - a],
                params.coupling, params.sigma);
            v_new[a].resize(v[a].size());
            for (std::size_t j = 0; j < v[a].size(); ++j)
                v_new[a][j] = detail::free_velocity((*self.p)[j] - integral[j],
                                                    self.mass);
        }
        const double update = std::max(detail::field_sup_distance(v[0], v_new[0]),
                                       detail::field_sup_distance(v[1], v_new[1]));
        sol.history.push_back(update);
        sol.iterations = iter;
        if (update < opt.tol) {
            v[0] = std::move(v_new[0]);
            v[1] = std::move(v_new[1]);
            sol.update_norm = update;
            const double res = momentum_residual(v);
            sol.momentum_residual = res;
            if (res < opt.tol || iter == opt.max_iter) {
                if (res >= opt.tol)
                    throw divergence_error(
                        "fixed-point velocity elimination stalled: momentum "
                        "residual " + std::to_string(res) +
                        " above tolerance after " + std::to_string(iter) +
                        " iterations",
                        sol.history);
                sol.F1 = std::move(v[0]);
                sol.F2 = std::move(v[1]);
                return sol;
            }
            continue;
        }
        if (!std::isfinite(update) || update > 1e8)
            throw divergence_error(
                "fixed-point velocity elimination diverged (update norm " +
                std::to_string(update) + " at iteration " +
                std::to_string(iter) + ")",
                sol.history);
        for (int a = 0; a < 2; ++a)
            for (std::size_t j = 0; j < v[a].size(); ++j)
                v[a][j] = (1.0 - opt.damping) * v[a][j] +
                          opt.damping * v_new[a][j];
    }
    throw divergence_error(
        "fixed-point velocity elimination did not converge in " +
        std::to_string(opt.max_iter) + " iterations",
        sol.history);
}

namespace detail {

// H = sum_a int p_a . F_a dt_a - I[q, F], all quadratures trapezoid.
inline double hamiltonian_value(const PhaseView& a, const PhaseView& b,
                                const std::vector<Vec3>& Fa,
                                const std::vector<Vec3>& Fb,
                                const SystemParams& params) {
    const auto wa = a.grid->trapezoid_weights();
    const auto wb = b.grid->trapezoid_weights();
    std::vector<double> terms;
    terms.reserve(wa.size() + wb.size());
    for (std::size_t j = 0; j < wa.size(); ++j)
        terms.push_back(wa[j] * dot((*a.p)[j], Fa[j]));
    for (std::size_t j = 0; j < wb.size(); ++j)
        terms.push_back(wb[j] * dot((*b.p)[j], Fb[j]));
    const double pq_term = pairwise_sum(terms);
    const ActionBreakdown act = fokker_action_qv(*a.grid, *a.q, Fa, *b.grid,
                                                 *b.q, Fb, params);
    return pq_term - act.total;
}

} // namespace detail

// Generalized Hamiltonian evaluated with a given velocity solution.
inline double generalized_hamiltonian(const PhaseField& phase1,
                                      const PhaseField& phase2,
                                      const SystemParams& params,
                                      const VelocitySolution& vel) {
    detail::check_phase(phase1, "phase1");
    detail::check_phase(phase2, "phase2");
    if (vel.F1.size() != phase1.q.n_nodes() ||
        vel.F2.size() != phase2.q.n_nodes())
        throw dimension_error(
            "velocity solution does not live on the phase-field grids");
    detail::PhaseView v1{&phase1.q.grid, &phase1.q.values, &phase1.p, params.m1};
    detail::PhaseView v2{&phase2.q.grid, &phase2.q.values, &phase2.p, params.m2};
    return detail::hamiltonian_value(v1, v2, vel.F1, vel.F2, params);
}

// Closed-form first-order Hamiltonian:
//   H = sum_a int sqrt(p_a^2 + m_a^2) dt_a
//     + (e1e2/2) intint rho_sigma(s^2) (1 - p1.p2 / (E1 E2)) dt1 dt2.
inline double hamiltonian_first_order(const PhaseField& phase1,
                                      const PhaseField& phase2,
                                      const SystemParams& params) {
    require_sigma(params.sigma);
    detail::check_phase(phase1, "phase1");
    detail::check_phase(phase2, "phase2");
    const auto w1 = phase1.q.grid.trapezoid_weights();
    const auto w2 = phase2.q.grid.trapezoid_weights();

    std::vector<double> free_terms;
    free_terms.reserve(w1.size() + w2.size());
    for (std::size_t j = 0; j < w1.size(); ++j)
        free_terms.push_back(
            w1[j] * std::sqrt(norm2(phase1.p[j]) + params.m1 * params.m1));
    for (std::size_t j = 0; j < w2.size(); ++j)
        free_terms.push_back(
            w2[j] * std::sqrt(norm2(phase2.p[j]) + params.m2 * params.m2));

    std::vector<double> rows(w1.size());
    std::vector<double> terms(w2.size());
    for (std::size_t j = 0; j < w1.size(); ++j) {
        const double tj = phase1.q.grid.node(j);
        const double E1 =
            std::sqrt(norm2(phase1.p[j]) + params.m1 * params.m1);
        for (std::size_t k = 0; k < w2.size(); ++k) {
            const double E2 =
                std::sqrt(norm2(phase2.p[k]) + params.m2 * params.m2);
            const double s2 = interval_squared(tj, phase1.q.values[j],
                                               phase2.q.grid.node(k),
                                               phase2.q.values[k]);
            terms[k] = w2[k] * regularized_delta(s2, params.sigma) *
                       (1.0 - dot(phase1.p[j], phase2.p[k]) / (E1 * E2));
        }
        rows[j] = w1[j] * pairwise_sum(terms);
    }
    return pairwise_sum(free_terms) +
           0.5 * params.coupling * pairwise_sum(rows);
}

// Canonical form of the action: sum_a int p_a . qdot_a dt_a - H[q, p],
// with qdot reconstructed from the coordinate trajectories and H evaluated
// through exact (fixed-point) velocity elimination.
inline double canonical_action(const PhaseField& phase1, const PhaseField& phase2,
                               const SystemParams& params,
                               const FixedPointOptions& opt = {}) {
    const VelocitySolution vel = numeric_velocities(phase1, phase2, params, opt);
    const double H = generalized_hamiltonian(phase1, phase2, params, vel);
    const auto w1 = phase1.q.grid.trapezoid_weights();
    const auto w2 = phase2.q.grid.trapezoid_weights();
    const auto qdot1 = velocity(phase1.q);
    const auto qdot2 = velocity(phase2.q);
    std::vector<double> terms;
    terms.reserve(w1.size() + w2.size());
    for (std::size_t j = 0; j < w1.size(); ++j)
        terms.push_back(w1[j] * dot(phase1.p[j], qdot1[j]));
    for (std::size_t j = 0; j < w2.size(); ++j)
        terms.push_back(w2[j] * dot(phase2.p[j], qdot2[j]));
    return pairwise_sum(terms) - H;
}

// Canonical stationarity residuals (the two generalized Poisson brackets,
// realized as residual checks):
//   residual_q = qdot - dH/dp,   residual_p = pdot + dH/dq.
// dH is taken by central differences with step h = 1e-5 (1 + |component|),
// nodal partials converted to densities by the trapezoid weight. Endpoints
// are excluded from the norms (fixed-endpoint variation).
inline StationarityReport stationarity_residuals(const PhaseField& phase1,
                                                 const PhaseField& phase2,
                                                 const SystemParams& params,
                                                 const FixedPointOptions& opt = {},
                                                 unsigned threads = 1) {
    detail::check_phase(phase1, "phase1");
    detail::check_phase(phase2, "phase2");

    // Base elimination; perturbed evaluations warm-start from it.
    const VelocitySolution base = numeric_velocities(phase1, phase2, params, opt);

    const auto qdot1 = velocity(phase1.q);
    const auto qdot2 = velocity(phase2.q);
    const auto pdot1 = stencil_time_derivative(phase1.p, phase1.q.grid.dt());
    const auto pdot2 = stencil_time_derivative(phase2.p, phase2.q.grid.dt());

    auto h_at = [&](const PhaseField& f1, const PhaseField& f2) {
        const VelocitySolution vel =
            numeric_velocities(f1, f2, params, opt, &base.F1, &base.F2);
        return generalized_hamiltonian(f1, f2, params, vel);
    };

    StationarityReport rep;
    rep.residual_q1.assign(phase1.q.n_nodes(), Vec3{});
    rep.residual_q2.assign(phase2.q.n_nodes(), Vec3{});
    rep.residual_p1.assign(phase1.q.n_nodes(), Vec3{});
    rep.residual_p2.assign(phase2.q.n_nodes(), Vec3{});

    const PhaseField* phases[2] = {&phase1, &phase2};
    const std::vector<Vec3>* qdots[2] = {&qdot1, &qdot2};
    const std::vector<Vec3>* pdots[2] = {&pdot1, &pdot2};
    std::vector<Vec3>* res_q[2] = {&rep.residual_q1, &rep.residual_q2};
    std::vector<Vec3>* res_p[2] = {&rep.residual_p1, &rep.residual_p2};

    for (int a = 0; a < 2; ++a) {
        const auto w = phases[a]->q.grid.trapezoid_weights();
        const std::size_t n = phases[a]->q.n_nodes();
        const int dim = phases[a]->q.dim;
        parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t j = lo; j < hi; ++j) {
                for (int k = 0; k < dim; ++k) {
                    const std::size_t kk = static_cast<std::size_t>(k);
                    // dH/dp
                    {
                        const double hp =
                            1e-5 * (1.0 + std::abs((*phases[a]).p[j][kk]));
                        PhaseField f1 = phase1, f2 = phase2;
                        PhaseField* mut = (a == 0) ? &f1 : &f2;
                        mut->p[j][kk] += hp;
                        const double plus = h_at(f1, f2);
                        mut->p[j][kk] -= 2.0 * hp;
                        const double minus = h_at(f1, f2);
                        const double dHdp = (plus - minus) / (2.0 * hp * w[j]);
                        (*res_q[a])[j][kk] = (*qdots[a])[j][kk] - dHdp;
                    }
                    // dH/dq
                    {
                        const double hq =
                            1e-5 *
                            (1.0 + std::abs((*phases[a]).q.values[j][kk]));
                        PhaseField f1 = phase1, f2 = phase2;
                        PhaseField* mut = (a == 0) ? &f1 : &f2;
                        mut->q.values[j][kk] += hq;
                        const double plus = h_at(f1, f2);
                        mut->q.values[j][kk] -= 2.0 * hq;
                        const double minus = h_at(f1, f2);
                        const double dHdq = (plus - minus) / (2.0 * hq * w[j]);
                        (*res_p[a])[j][kk] = (*pdots[a])[j][kk] + dHdq;
                    }
                }
            }
        });
    }

    std::vector<double> q_l2, p_l2;
    for (int a = 0; a < 2; ++a) {
        const auto w = phases[a]->q.grid.trapezoid_weights();
        for (std::size_t j = 1; j + 1 < res_q[a]->size(); ++j) {
            rep.q_sup_norm = std::max(rep.q_sup_norm, norm((*res_q[a])[j]));
            rep.p_sup_norm = std::max(rep.p_sup_norm, norm((*res_p[a])[j]));
            q_l2.push_back(w[j] * norm2((*res_q[a])[j]));
            p_l2.push_back(w[j] * norm2((*res_p[a])[j]));
        }
    }
    rep.q_l2_norm = std::sqrt(pairwise_sum(q_l2));
    rep.p_l2_norm = std::sqrt(pairwise_sum(p_l2));
    return rep;
}

} // namespace fokker
