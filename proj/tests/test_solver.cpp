#include <catch_amalgamated.hpp>

#include <cmath>

#include "fokker/canonical.hpp"
#include "fokker/coulomb.hpp"
#include "fokker/solver.hpp"

using namespace fokker;

namespace {

SystemParams two_body(double coupling, double sigma, double T, double m1 = 1.0,
                      double m2 = 1.0, int dim = 1) {
    SystemParams p;
    p.m1 = m1;
    p.m2 = m2;
    p.coupling = coupling;
    p.T1 = T;
    p.T2 = T;
    p.sigma = sigma;
    p.dim = dim;
    return p;
}

BvpEndpoints rest_endpoints_1d(double x1, double x2) {
    BvpEndpoints ep;
    ep.q1_start[0] = ep.q1_end[0] = x1;
    ep.q2_start[0] = ep.q2_end[0] = x2;
    return ep;
}

} // namespace

TEST_CASE("solve_free cases") {
    const TimeGrid g = make_grid(1.0, 16);
    const SystemParams p = two_body(0.0, 0.1, 1.0);

    SECTION("rest endpoints give the rest trajectory") {
        const Solution s = solve_free(rest_endpoints_1d(0.0, 1.0), g, g, p);
        for (const auto& q : s.traj1.values) CHECK(q[0] == 0.0);
        for (const auto& q : s.traj2.values) CHECK(q[0] == 1.0);
        CHECK(s.residual.sup_norm < 1e-12);
    }

    SECTION("0 -> 0.5 over T = 1 moves at constant qdot = 0.5") {
        BvpEndpoints ep = rest_endpoints_1d(0.0, 2.0);
        ep.q1_end[0] = 0.5;
        const Solution s = solve_free(ep, g, g, p);
        const auto v = velocity(s.traj1);
        for (const auto& vj : v) CHECK(vj[0] == Catch::Approx(0.5).margin(1e-12));
        CHECK(s.residual.sup_norm < 1e-10);
    }

    SECTION("spacelike endpoints raise a no-timelike-path error") {
        BvpEndpoints ep = rest_endpoints_1d(0.0, 2.0);
        ep.q1_end[0] = 1.5;
        CHECK_THROWS_AS(solve_free(ep, g, g, p), no_timelike_path_error);
    }
}

TEST_CASE("solve_el at coupling 0 reproduces the free solution") {
    const TimeGrid g = make_grid(2.0, 24);
    const SystemParams p = two_body(0.0, 0.1, 2.0);
    BvpEndpoints ep = rest_endpoints_1d(-0.5, 0.5);
    ep.q1_end[0] = 0.0;
    const Solution free_sol = solve_free(ep, g, g, p);
    const Solution el_sol = solve_el(ep, g, g, p);
    for (std::size_t j = 0; j < free_sol.traj1.n_nodes(); ++j)
        CHECK(el_sol.traj1.values[j][0] == free_sol.traj1.values[j][0]);
}

TEST_CASE("repulsive charges bow apart symmetrically") {
    // Charges held near rest at separation 2 with a small repulsive coupling.
    const double T = 4.0;
    const TimeGrid g = make_grid(T, 64);
    const SystemParams p = two_body(0.01, 0.05, T);
    const BvpEndpoints ep = rest_endpoints_1d(-1.0, 1.0);

    SolveConfig cfg;
    cfg.tol = 1e-8;
    const Solution s = solve_el(ep, g, g, p, cfg, /*threads=*/4);

    CHECK(s.residual.sup_norm < 1e-8);
    // Exchange-symmetric endpoints give a mirror-symmetric solution.
    for (std::size_t j = 0; j < s.traj1.n_nodes(); ++j)
        CHECK(s.traj1.values[j][0] ==
              Catch::Approx(-s.traj2.values[j][0]).margin(1e-9));
    // Repulsion: particle 1 bows away (more negative) at mid-horizon.
    const std::size_t mid = s.traj1.n_nodes() / 2;
    CHECK(s.traj1.values[mid][0] < -1.0 - 1e-4);
    // Continuation trace is monotone in the coupling.
    for (std::size_t i = 1; i < s.trace.size(); ++i)
        CHECK(s.trace[i].coupling > s.trace[i - 1].coupling);
    // Canonical stationarity residuals of the solution stay within 10x tol.
    auto [p1, p2] = momentum_fields(s.traj1, s.traj2, p);
    const StationarityReport rep = stationarity_residuals(
        PhaseField{s.traj1, p1}, PhaseField{s.traj2, p2}, p, {}, 4);
    CHECK(rep.q_sup_norm <= 10.0 * cfg.tol);
    CHECK(rep.p_sup_norm <= 10.0 * cfg.tol);
}

TEST_CASE("exchange symmetry is exact bit for bit") {
    const double T = 3.0;
    const TimeGrid g = make_grid(T, 32);
    SystemParams p = two_body(0.02, 0.1, T, 1.0, 2.5);
    BvpEndpoints ep = rest_endpoints_1d(-0.8, 1.2);

    const Solution fwd = solve_el(ep, g, g, p);

    SystemParams swapped = p;
    std::swap(swapped.m1, swapped.m2);
    const BvpEndpoints ep_swapped{ep.q2_start, ep.q2_end, ep.q1_start, ep.q1_end};
    const Solution rev = solve_el(ep_swapped, g, g, swapped);

    for (std::size_t j = 0; j < fwd.traj1.n_nodes(); ++j) {
        CHECK(fwd.traj1.values[j][0] == rev.traj2.values[j][0]);
        CHECK(fwd.traj2.values[j][0] == rev.traj1.values[j][0]);
    }
}

TEST_CASE("solution depends continuously on the continuation path") {
    const double T = 3.0;
    const TimeGrid g = make_grid(T, 24);
    const SystemParams p = two_body(0.02, 0.1, T);
    const BvpEndpoints ep = rest_endpoints_1d(-1.0, 1.0);

    SolveConfig two_steps;
    two_steps.continuation_steps = 2;
    SolveConfig four_steps;
    four_steps.continuation_steps = 4;
    const Solution a = solve_el(ep, g, g, p, two_steps);
    const Solution b = solve_el(ep, g, g, p, four_steps);
    for (std::size_t j = 0; j < a.traj1.n_nodes(); ++j)
        CHECK(a.traj1.values[j][0] ==
              Catch::Approx(b.traj1.values[j][0]).margin(1e-7));
}

TEST_CASE("threads do not change solver output bits") {
    const double T = 3.0;
    const TimeGrid g = make_grid(T, 24);
    const SystemParams p = two_body(0.015, 0.08, T);
    const BvpEndpoints ep = rest_endpoints_1d(-1.0, 1.0);
    const Solution s1 = solve_el(ep, g, g, p, {}, 1);
    const Solution s4 = solve_el(ep, g, g, p, {}, 4);
    for (std::size_t j = 0; j < s1.traj1.n_nodes(); ++j) {
        CHECK(s1.traj1.values[j][0] == s4.traj1.values[j][0]);
        CHECK(s1.traj2.values[j][0] == s4.traj2.values[j][0]);
    }
    CHECK(s1.residual.sup_norm == s4.residual.sup_norm);
}

TEST_CASE("newton divergence reports a trace instead of a wrong answer") {
    const double T = 4.0;
    const TimeGrid g = make_grid(T, 24);
    const SystemParams p = two_body(8.0, 0.05, T);
    const BvpEndpoints ep = rest_endpoints_1d(-0.6, 0.6);
    SolveConfig cfg;
    cfg.max_newton = 2;
    cfg.continuation_steps = 1;
    bool threw = false;
    try {
        solve_el(ep, g, g, p, cfg);
    } catch (const divergence_error& e) {
        threw = true;
        CHECK_FALSE(e.history().empty());
    }
    CHECK(threw);
}

TEST_CASE("coulomb reference oracle") {
    SECTION("coupling 0 gives straight lines") {
        const TimeGrid g = make_grid(2.0, 16);
        const SystemParams p = two_body(0.0, 0.1, 2.0);
        BvpEndpoints ep = rest_endpoints_1d(0.0, 1.0);
        ep.q1_end[0] = 0.4;
        const CoulombSolution s = coulomb_reference(ep, g, g, p);
        for (std::size_t j = 0; j < g.n_nodes(); ++j)
            CHECK(s.solution.traj1.values[j][0] ==
                  Catch::Approx(0.4 * g.node(j) / 2.0).margin(1e-9));
    }

    SECTION("symmetric repulsion conserves energy along the path") {
        const double T = 6.0;
        const TimeGrid g = make_grid(T, 48);
        const SystemParams p = two_body(0.02, 0.05, T);
        const BvpEndpoints ep = rest_endpoints_1d(-0.5, 0.5);
        const CoulombSolution s = coulomb_reference(ep, g, g, p);
        CHECK(s.shooting_mismatch < 1e-10);
        // Symmetric bowing.
        const std::size_t mid = g.n_nodes() / 2;
        CHECK(s.solution.traj1.values[mid][0] < -0.5);
        CHECK(s.solution.traj1.values[mid][0] ==
              Catch::Approx(-s.solution.traj2.values[mid][0]).margin(1e-8));
        const double e0 = coulomb_energy(
            s.solution.traj1.values[0], s.velocities1[0],
            s.solution.traj2.values[0], s.velocities2[0], p.m1, p.m2, p.coupling);
        for (std::size_t j = 0; j < g.n_nodes(); ++j) {
            const double e = coulomb_energy(
                s.solution.traj1.values[j], s.velocities1[j],
                s.solution.traj2.values[j], s.velocities2[j], p.m1, p.m2,
                p.coupling);
            CHECK(e == Catch::Approx(e0).epsilon(1e-6));
        }
    }

    SECTION("attractive near-circular setup stays on a bounded orbit") {
        // Two equal masses on a circular relative orbit of radius 1:
        // V(r) = -(0.1)/r, mu = 1/2, v_rel = sqrt(0.2).
        const double coupling = -0.2;
        const double v_rel = std::sqrt(0.2);
        const double omega = v_rel; // r = 1
        const double T = 3.0;
        const TimeGrid g = make_grid(T, 48);
        const SystemParams p = two_body(coupling, 0.05, T, 1.0, 1.0, 2);

        BvpEndpoints ep;
        auto on_circle = [&](double t, double sign) {
            Vec3 q;
            q[0] = sign * 0.5 * std::cos(omega * t);
            q[1] = sign * 0.5 * std::sin(omega * t);
            return q;
        };
        ep.q1_start = on_circle(0.0, +1.0);
        ep.q1_end = on_circle(T, +1.0);
        ep.q2_start = on_circle(0.0, -1.0);
        ep.q2_end = on_circle(T, -1.0);

        const CoulombSolution s = coulomb_reference(ep, g, g, p);
        for (std::size_t j = 0; j < g.n_nodes(); ++j) {
            const double r = norm(s.solution.traj1.values[j] -
                                  s.solution.traj2.values[j]);
            CHECK(r == Catch::Approx(1.0).epsilon(0.02));
        }
    }

    SECTION("mismatched horizons are rejected") {
        const TimeGrid g1 = make_grid(2.0, 16);
        const TimeGrid g2 = make_grid(3.0, 16);
        SystemParams p = two_body(0.0, 0.1, 2.0);
        p.T2 = 3.0;
        CHECK_THROWS_AS(
            coulomb_reference(rest_endpoints_1d(0.0, 1.0), g1, g2, p),
            dimension_error);
    }
}

TEST_CASE("nonrelativistic regime matches the coulomb oracle") {
    // Reduced-size version of the acceptance comparison: slow repulsive
    // bowing, relativistic solver vs Newtonian oracle.
    const double T = 6.0;
    const TimeGrid g = make_grid(T, 48);
    const SystemParams p = two_body(0.015, 0.05, T);
    const BvpEndpoints ep = rest_endpoints_1d(-0.5, 0.5);

    SolveConfig cfg;
    const Solution rel = solve_el(ep, g, g, p, cfg, 4);
    const CoulombSolution newt = coulomb_reference(ep, g, g, p);

    double scale = 0.0, err = 0.0;
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        scale = std::max(scale, norm(newt.solution.traj1.values[j]));
        err = std::max(err, norm(rel.traj1.values[j] -
                                 newt.solution.traj1.values[j]));
        err = std::max(err, norm(rel.traj2.values[j] -
                                 newt.solution.traj2.values[j]));
    }
    CHECK(err / scale < 0.01);
}
