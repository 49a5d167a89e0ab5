#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fokker/action.hpp"
#include "fokker/errors.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Boundary-value solver for the multi-time Euler-Lagrange equations: damped
// Newton root-finding on the interior-node EL residual with geometric
// coupling continuation from the free solution. The stationary point of the
// action is a saddle, so this is root-finding, never energy minimization.

enum class JacobianMode { FiniteDifference, AnalyticIfAvailable };

struct SolveConfig {
    double tol = 1e-8;            // sup-norm of the EL residual
    std::size_t max_newton = 40;
    std::size_t continuation_steps = 4;
    JacobianMode jacobian = JacobianMode::FiniteDifference;
    double damping = 1.0; // initial Newton step fraction, in (0, 1]
};

struct BvpEndpoints {
    Vec3 q1_start, q1_end;
    Vec3 q2_start, q2_end;
};

struct ContinuationStep {
    double coupling = 0.0;
    std::size_t iterations = 0;
    double residual_sup = 0.0;
};

struct Solution {
    Trajectory traj1;
    Trajectory traj2;
    ResidualReport residual;
    std::vector<ContinuationStep> trace;
};

namespace detail {

struct BvpLayout {
    TimeGrid g1, g2;
    int dim = 1;
    BvpEndpoints ep;

    std::size_t interior1() const { return g1.n_steps - 1; }
    std::size_t interior2() const { return g2.n_steps - 1; }
    std::size_t size() const {
        return (interior1() + interior2()) * static_cast<std::size_t>(dim);
    }

    void unpack(const Eigen::VectorXd& x, Trajectory& t1, Trajectory& t2) const {
        std::size_t idx = 0;
        for (std::size_t j = 1; j < g1.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                t1.values[j][static_cast<std::size_t>(k)] = x[static_cast<Eigen::Index>(idx++)];
        for (std::size_t j = 1; j < g2.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                t2.values[j][static_cast<std::size_t>(k)] = x[static_cast<Eigen::Index>(idx++)];
    }

    Eigen::VectorXd pack(const Trajectory& t1, const Trajectory& t2) const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
        std::size_t idx = 0;
        for (std::size_t j = 1; j < g1.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                x[static_cast<Eigen::Index>(idx++)] = t1.values[j][static_cast<std::size_t>(k)];
        for (std::size_t j = 1; j < g2.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                x[static_cast<Eigen::Index>(idx++)] = t2.values[j][static_cast<std::size_t>(k)];
        return x;
    }

    Eigen::VectorXd pack_residual(const ResidualReport& rep) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(size()));
        std::size_t idx = 0;
        for (std::size_t j = 1; j < g1.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                r[static_cast<Eigen::Index>(idx++)] = rep.residual1[j][static_cast<std::size_t>(k)];
        for (std::size_t j = 1; j < g2.n_steps; ++j)
            for (int k = 0; k < dim; ++k)
                r[static_cast<Eigen::Index>(idx++)] = rep.residual2[j][static_cast<std::size_t>(k)];
        return r;
    }
};

inline void check_timelike(const Vec3& q0, const Vec3& qT, double T,
                           int particle) {
    const double speed = norm(qT - q0) / T;
    if (!(speed < 1.0))
        throw no_timelike_path_error(
            "no timelike path: particle " + std::to_string(particle) +
            " endpoints require mean speed " + std::to_string(speed) + " >= 1");
}

} // namespace detail

// Free (coupling 0) solution: straight constant-velocity lines.
inline Solution solve_free(const BvpEndpoints& ep, const TimeGrid& grid1,
                           const TimeGrid& grid2, const SystemParams& params,
                           unsigned threads = 1) {
    detail::check_timelike(ep.q1_start, ep.q1_end, grid1.horizon, 1);
    detail::check_timelike(ep.q2_start, ep.q2_end, grid2.horizon, 2);
    Solution sol{straight_line(grid1, params.dim, ep.q1_start, ep.q1_end),
                 straight_line(grid2, params.dim, ep.q2_start, ep.q2_end),
                 {},
                 {}};
    SystemParams free_params = params;
    free_params.coupling = 0.0;
    sol.residual = el_residual(sol.traj1, sol.traj2, free_params, threads);
    sol.trace.push_back({0.0, 0, sol.residual.sup_norm});
    return sol;
}

namespace detail {

struct NewtonOutcome {
    Eigen::VectorXd x;
    std::size_t iterations = 0;
    double residual_sup = 0.0;
    bool converged = false;
    std::vector<double> norms;
};

inline NewtonOutcome newton_el(const BvpLayout& layout, SystemParams params,
                               double coupling, Eigen::VectorXd x,
                               const SolveConfig& cfg, unsigned threads) {
    params.coupling = coupling;
    Trajectory t1 = straight_line(layout.g1, layout.dim, layout.ep.q1_start,
                                  layout.ep.q1_end);
    Trajectory t2 = straight_line(layout.g2, layout.dim, layout.ep.q2_start,
                                  layout.ep.q2_end);

    auto eval = [&](const Eigen::VectorXd& xv) {
        layout.unpack(xv, t1, t2);
        return layout.pack_residual(el_residual(t1, t2, params, threads));
    };

    NewtonOutcome out;
    Eigen::VectorXd r = eval(x);
    double rn = r.lpNorm<Eigen::Infinity>();
    out.norms.push_back(rn);

    const Eigen::Index n = x.size();
    for (std::size_t iter = 1; iter <= cfg.max_newton; ++iter) {
        if (rn <= cfg.tol) {
            out.x = x;
            out.iterations = iter - 1;
            out.residual_sup = rn;
            out.converged = true;
            return out;
        }
        // Finite-difference Jacobian, forward differences with step
        // 1e-6 (1 + |q|). Columns are independent residual evaluations.
        Eigen::MatrixXd J(n, n);
        std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(n));
        parallel_for(static_cast<std::size_t>(n), threads,
                     [&](std::size_t lo, std::size_t hi) {
            Trajectory w1 = t1, w2 = t2;
            for (std::size_t i = lo; i < hi; ++i) {
                const double h = 1e-6 * (1.0 + std::abs(x[static_cast<Eigen::Index>(i)]));
                Eigen::VectorXd xp = x;
                xp[static_cast<Eigen::Index>(i)] += h;
                layout.unpack(xp, w1, w2);
                Eigen::VectorXd rp = layout.pack_residual(
                    el_residual(w1, w2, params, 1));
                cols[i] = (rp - r) / h;
            }
        });
        for (Eigen::Index i = 0; i < n; ++i)
            J.col(i) = cols[static_cast<std::size_t>(i)];

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        Eigen::VectorXd step = lu.solve(-r);
        const double lin_res = (J * step + r).lpNorm<Eigen::Infinity>();
        if (!step.allFinite() ||
            lin_res > 1e-6 * std::max(1.0, r.lpNorm<Eigen::Infinity>()))
            throw singular_system_error(
                "singular Jacobian in Newton iteration at coupling " +
                std::to_string(coupling));

        // Backtracking line search on the sup-norm.
        double alpha = cfg.damping;
        bool accepted = false;
        for (int bt = 0; bt < 9; ++bt) {
            Eigen::VectorXd x_try = x + alpha * step;
            Eigen::VectorXd r_try = eval(x_try);
            const double rn_try = r_try.lpNorm<Eigen::Infinity>();
            if (rn_try < rn || rn_try <= cfg.tol) {
                x = std::move(x_try);
                r = std::move(r_try);
                rn = rn_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        out.norms.push_back(rn);
        if (!accepted) {
            out.iterations = iter;
            out.residual_sup = rn;
            return out; // stalled; caller decides (bisection / divergence)
        }
    }
    out.x = x;
    out.iterations = cfg.max_newton;
    out.residual_sup = rn;
    out.converged = rn <= cfg.tol;
    return out;
}

inline bool particle2_before_particle1(const SystemParams& p,
                                       const BvpEndpoints& ep,
                                       const TimeGrid& g1, const TimeGrid& g2) {
    auto key = [&](double m, const TimeGrid& g, const Vec3& a, const Vec3& b) {
        return std::array<double, 9>{m, g.horizon, static_cast<double>(g.n_steps),
                                     a[0], a[1], a[2], b[0], b[1], b[2]};
    };
    return key(p.m2, g2, ep.q2_start, ep.q2_end) <
           key(p.m1, g1, ep.q1_start, ep.q1_end);
}

} // namespace detail

// Damped Newton with geometric coupling continuation from the free solution.
// On Newton failure the continuation increment is bisected, up to 6 times,
// before a divergence error (carrying the residual trace) is thrown.
//
// Particle ordering is canonicalized internally, so swapping labels, masses
// and endpoints yields the exactly swapped solution bit for bit.
inline Solution solve_el(const BvpEndpoints& ep, const TimeGrid& grid1,
                         const TimeGrid& grid2, const SystemParams& params,
                         const SolveConfig& cfg = {}, unsigned threads = 1) {
    if (!(cfg.tol > 0.0)) throw error("solver tolerance must be > 0");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
        throw error("solver damping must lie in (0, 1]");
    if (cfg.continuation_steps < 1)
        throw error("continuation steps must be >= 1");

    if (detail::particle2_before_particle1(params, ep, grid1, grid2)) {
        SystemParams swapped = params;
        std::swap(swapped.m1, swapped.m2);
        std::swap(swapped.T1, swapped.T2);
        BvpEndpoints ep_swapped{ep.q2_start, ep.q2_end, ep.q1_start, ep.q1_end};
        Solution s = solve_el(ep_swapped, grid2, grid1, swapped, cfg, threads);
        std::swap(s.traj1, s.traj2);
        std::swap(s.residual.residual1, s.residual.residual2);
        std::swap(s.residual.n1, s.residual.n2);
        return s;
    }

    Solution free_sol = solve_free(ep, grid1, grid2, params, threads);
    if (params.coupling == 0.0) return free_sol;

    detail::BvpLayout layout{grid1, grid2, params.dim, ep};
    Eigen::VectorXd x = layout.pack(free_sol.traj1, free_sol.traj2);

    std::vector<ContinuationStep> trace = free_sol.trace;
    std::vector<double> norm_history;

    const double target = params.coupling;
    std::vector<double> ladder(cfg.continuation_steps);
    for (std::size_t i = 0; i < cfg.continuation_steps; ++i)
        ladder[i] = target *
                    std::pow(2.0, -static_cast<double>(cfg.continuation_steps - 1 - i));

    double reached = 0.0;
    for (double rung : ladder) {
        if (rung <= reached) continue;
        double attempt = rung;
        int bisections = 0;
        while (true) {
            detail::NewtonOutcome nw;
            bool hard_failure = false;
            std::string failure_msg;
            try {
                nw = detail::newton_el(layout, params, attempt, x, cfg, threads);
            } catch (const superluminal_error& e) {
                hard_failure = true;
                failure_msg = e.what();
            } catch (const validation_error& e) {
                // Typically a superluminal iterate; retry on a smaller step.
                hard_failure = true;
                failure_msg = e.what();
            } catch (const singular_system_error& e) {
                if (bisections >= 6) throw;
                hard_failure = true;
                failure_msg = e.what();
            }
            if (!hard_failure && nw.converged) {
                norm_history.insert(norm_history.end(), nw.norms.begin(),
                                    nw.norms.end());
                trace.push_back({attempt, nw.iterations, nw.residual_sup});
                x = nw.x;
                reached = attempt;
                if (attempt >= rung) break;
                attempt = rung;
                bisections = 0;
                continue;
            }
            if (!hard_failure)
                norm_history.insert(norm_history.end(), nw.norms.begin(),
                                    nw.norms.end());
            if (++bisections > 6)
                throw divergence_error(
                    "Newton continuation diverged at coupling " +
                        std::to_string(attempt) + " (reached " +
                        std::to_string(reached) + " of " +
                        std::to_string(target) + ")" +
                        (failure_msg.empty() ? "" : ": " + failure_msg),
                    norm_history);
            attempt = 0.5 * (reached + attempt);
        }
    }

    Solution sol{straight_line(grid1, params.dim, ep.q1_start, ep.q1_end),
                 straight_line(grid2, params.dim, ep.q2_start, ep.q2_end),
                 {},
                 std::move(trace)};
    layout.unpack(x, sol.traj1, sol.traj2);
    sol.residual = el_residual(sol.traj1, sol.traj2, params, threads);
    if (!(sol.residual.sup_norm <= cfg.tol))
        throw divergence_error(
            "post-verification failed: residual sup-norm " +
                std::to_string(sol.residual.sup_norm) + " above tolerance",
            norm_history);
    return sol;
}

} // namespace fokker
