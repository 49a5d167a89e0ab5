#include <catch_amalgamated.hpp>

#include <cmath>

#include "fokker/action.hpp"
#include "fokker/delta.hpp"
#include "fokker/random_paths.hpp"

using namespace fokker;

namespace {

SystemParams base_params(double coupling, double sigma, double T1, double T2) {
    SystemParams p;
    p.m1 = 1.0;
    p.m2 = 1.0;
    p.coupling = coupling;
    p.T1 = T1;
    p.T2 = T2;
    p.sigma = sigma;
    p.dim = 1;
    return p;
}

Trajectory rest_at(const TimeGrid& g, double x) {
    Vec3 q;
    q[0] = x;
    return straight_line(g, 1, q, q);
}

// Independent tensor-product trapezoid of rho_sigma over [0,T1]x[0,T2] for
// charges at rest at separation r, on a grid refined `refine`-fold.
double static_kernel_oracle(double T1, double T2, double r, double sigma,
                            std::size_t n1, std::size_t n2) {
    double sum = 0.0;
    const double dt1 = T1 / static_cast<double>(n1);
    const double dt2 = T2 / static_cast<double>(n2);
    for (std::size_t j = 0; j <= n1; ++j) {
        const double w1 = (j == 0 || j == n1) ? 0.5 * dt1 : dt1;
        for (std::size_t k = 0; k <= n2; ++k) {
            const double w2 = (k == 0 || k == n2) ? 0.5 * dt2 : dt2;
            const double dt = static_cast<double>(j) * dt1 -
                              static_cast<double>(k) * dt2;
            sum += w1 * w2 * regularized_delta(dt * dt - r * r, sigma);
        }
    }
    return sum;
}

} // namespace

TEST_CASE("free action of resting and boosted particles") {
    const TimeGrid g = make_grid(1.0, 32);
    const SystemParams p0 = base_params(0.0, 0.1, 1.0, 1.0);
    const Trajectory r1 = rest_at(g, 0.0);
    const Trajectory r2 = rest_at(g, 1.0);

    const ActionBreakdown rest = fokker_action(r1, r2, p0);
    CHECK(rest.free1 == Catch::Approx(-1.0).epsilon(1e-12));
    CHECK(rest.free2 == Catch::Approx(-1.0).epsilon(1e-12));
    CHECK(rest.interaction == 0.0);
    CHECK(rest.total == Catch::Approx(-2.0).epsilon(1e-12));

    Vec3 qT;
    qT[0] = 0.6;
    const Trajectory boosted = straight_line(g, 1, Vec3{}, qT);
    const ActionBreakdown mov = fokker_action(boosted, r2, p0);
    CHECK(mov.free1 == Catch::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("breakdown total uses a fixed summation order") {
    const TimeGrid g = make_grid(2.0, 24);
    const SystemParams p = base_params(0.3, 0.2, 2.0, 2.0);
    const Trajectory t1 =
        random_smooth_trajectory(g, 1, Vec3{}, Vec3{}, 11, 0.2);
    Vec3 off;
    off[0] = 1.2;
    const Trajectory t2 = random_smooth_trajectory(g, 1, off, off, 12, 0.2);
    const ActionBreakdown b = fokker_action(t1, t2, p);
    CHECK(b.total == (b.free1 + b.free2) + b.interaction);
}

TEST_CASE("static interaction matches the resting-charge quadrature oracle") {
    // Charges at rest at separation 1; the interaction equals
    // -(e1e2/2) * double trapezoid of rho_sigma on the run grids, and the
    // inner integral tends to 1/r away from the horizon edges as sigma -> 0.
    const double T = 10.0;
    const std::size_t n = 256;
    const TimeGrid g = make_grid(T, n);
    const SystemParams p = base_params(1.0, 0.05, T, T);
    const Trajectory c1 = rest_at(g, 0.0);
    const Trajectory c2 = rest_at(g, 1.0);

    const ActionBreakdown b = fokker_action(c1, c2, p);
    const double oracle = static_kernel_oracle(T, T, 1.0, p.sigma, n, n);
    CHECK(b.interaction == Catch::Approx(-0.5 * oracle).epsilon(1e-12));

    // Mid-horizon rate of the same kernel against the sigma -> 0 limit 1/r.
    double inner = 0.0;
    const double dt = T / static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 0.5 * dt : dt;
        const double d = 5.0 - static_cast<double>(k) * dt;
        inner += w * regularized_delta(d * d - 1.0, p.sigma);
    }
    // Leading sigma-correction of the inner integral is 3*sigma/(8 r^4).
    CHECK(inner == Catch::Approx(1.0).epsilon(0.03));
}

TEST_CASE("interaction is exchange symmetric bit for bit") {
    const TimeGrid g1 = make_grid(1.5, 20);
    const TimeGrid g2 = make_grid(2.0, 28);
    SystemParams p = base_params(0.7, 0.3, 1.5, 2.0);
    p.m1 = 1.0;
    p.m2 = 2.5;
    Vec3 a, b;
    a[0] = -0.5;
    b[0] = 0.7;
    const Trajectory t1 = random_smooth_trajectory(g1, 1, a, a, 3, 0.2);
    const Trajectory t2 = random_smooth_trajectory(g2, 1, b, b, 4, 0.2);

    SystemParams swapped = p;
    std::swap(swapped.m1, swapped.m2);
    std::swap(swapped.T1, swapped.T2);

    const ActionBreakdown fwd = fokker_action(t1, t2, p);
    const ActionBreakdown rev = fokker_action(t2, t1, swapped);
    CHECK(fwd.interaction == rev.interaction);
    CHECK(fwd.free1 == rev.free2);
    CHECK(fwd.free2 == rev.free1);
    CHECK(fwd.total == rev.total);
}

TEST_CASE("interaction is linear in the coupling") {
    const TimeGrid g = make_grid(1.0, 16);
    Vec3 off;
    off[0] = 0.8;
    const Trajectory t1 = random_smooth_trajectory(g, 1, Vec3{}, Vec3{}, 5, 0.15);
    const Trajectory t2 = random_smooth_trajectory(g, 1, off, off, 6, 0.15);

    const SystemParams p1 = base_params(0.37, 0.2, 1.0, 1.0);
    SystemParams p2 = p1;
    p2.coupling = 2.0 * p1.coupling; // power of two: exact scaling
    SystemParams p3 = p1;
    p3.coupling = 3.0 * p1.coupling;

    const double i1 = fokker_action(t1, t2, p1).interaction;
    CHECK(fokker_action(t1, t2, p2).interaction == 2.0 * i1);
    CHECK(fokker_action(t1, t2, p3).interaction ==
          Catch::Approx(3.0 * i1).epsilon(1e-15));
}

TEST_CASE("momentum fields: closed-form cases") {
    const TimeGrid g = make_grid(1.0, 32);
    const Trajectory r2 = rest_at(g, 1.0);

    SECTION("both at rest, any coupling: p = 0 everywhere") {
        const SystemParams p = base_params(2.0, 0.2, 1.0, 1.0);
        const Trajectory r1 = rest_at(g, 0.0);
        const auto [p1, p2] = momentum_fields(r1, r2, p);
        for (const auto& v : p1) CHECK(norm(v) == 0.0);
        for (const auto& v : p2) CHECK(norm(v) == 0.0);
    }

    SECTION("coupling 0, qdot = 0.6: p = 0.75 at interior nodes") {
        const SystemParams p = base_params(0.0, 0.2, 1.0, 1.0);
        Vec3 qT;
        qT[0] = 0.6;
        const Trajectory boosted = straight_line(g, 1, Vec3{}, qT);
        const auto [p1, p2] = momentum_fields(boosted, r2, p);
        for (std::size_t j = 1; j + 1 < p1.size(); ++j)
            CHECK(p1[j][0] == Catch::Approx(0.75).epsilon(1e-12));
    }
}

TEST_CASE("momentum fields match the velocity-gradient oracle") {
    const TimeGrid g1 = make_grid(2.0, 32);
    const TimeGrid g2 = make_grid(2.0, 32);
    const SystemParams p = base_params(0.1, 0.1, 2.0, 2.0);
    Vec3 a, b;
    a[0] = -0.6;
    b[0] = 0.6;
    const Trajectory t1 = random_smooth_trajectory(g1, 1, a, a, 21, 0.25);
    const Trajectory t2 = random_smooth_trajectory(g2, 1, b, b, 22, 0.25);

    const auto [p1, p2] = momentum_fields(t1, t2, p);
    const auto num1 = richardson_functional_gradient(
        GradientTarget::Total, GradientVariable::Velocity, 1, t1, t2, p, 1e-4);
    const auto num2 = richardson_functional_gradient(
        GradientTarget::Total, GradientVariable::Velocity, 2, t1, t2, p, 1e-4);

    double sup1 = 0.0, sup2 = 0.0;
    for (std::size_t j = 0; j < p1.size(); ++j) sup1 = std::max(sup1, norm(p1[j]));
    for (std::size_t j = 0; j < p2.size(); ++j) sup2 = std::max(sup2, norm(p2[j]));
    for (std::size_t j = 1; j + 1 < p1.size(); ++j)
        CHECK(norm(p1[j] - num1[j]) / sup1 < 1e-6);
    for (std::size_t j = 1; j + 1 < p2.size(); ++j)
        CHECK(norm(p2[j] - num2[j]) / sup2 < 1e-6);
}

TEST_CASE("el_residual vanishes on free solutions") {
    const TimeGrid g = make_grid(1.0, 32);
    const SystemParams p = base_params(0.0, 0.1, 1.0, 1.0);

    SECTION("rest trajectories: residual exactly zero") {
        const Trajectory r1 = rest_at(g, 0.0);
        const Trajectory r2 = rest_at(g, 2.0);
        const ResidualReport rep = el_residual(r1, r2, p);
        CHECK(rep.sup_norm == 0.0);
    }

    SECTION("straight moving lines: residual below 1e-10") {
        Vec3 a;
        a[0] = 0.5;
        const Trajectory t1 = straight_line(g, 1, Vec3{}, a);
        Vec3 b0, b1;
        b0[0] = 2.0;
        b1[0] = 1.7;
        const Trajectory t2 = straight_line(g, 1, b0, b1);
        const ResidualReport rep = el_residual(t1, t2, p);
        CHECK(rep.sup_norm < 1e-10);
    }
}

TEST_CASE("el_residual endpoints carry no residual") {
    const TimeGrid g = make_grid(1.0, 16);
    const SystemParams p = base_params(0.4, 0.2, 1.0, 1.0);
    Vec3 off;
    off[0] = 1.0;
    const Trajectory t1 = random_smooth_trajectory(g, 1, Vec3{}, Vec3{}, 31, 0.2);
    const Trajectory t2 = random_smooth_trajectory(g, 1, off, off, 32, 0.2);
    const ResidualReport rep = el_residual(t1, t2, p);
    CHECK(norm(rep.residual1.front()) == 0.0);
    CHECK(norm(rep.residual1.back()) == 0.0);
    CHECK(norm(rep.residual2.front()) == 0.0);
    CHECK(norm(rep.residual2.back()) == 0.0);
}

TEST_CASE("el_residual matches the EL combination of numeric gradients") {
    const TimeGrid g = make_grid(2.0, 32);
    const SystemParams p = base_params(0.1, 0.1, 2.0, 2.0);
    Vec3 a, b;
    a[0] = -0.6;
    b[0] = 0.6;
    const Trajectory t1 = random_smooth_trajectory(g, 1, a, a, 41, 0.25);
    const Trajectory t2 = random_smooth_trajectory(g, 1, b, b, 42, 0.25);

    const ResidualReport rep = el_residual(t1, t2, p);
    for (int which = 1; which <= 2; ++which) {
        const auto gq = richardson_functional_gradient(
            GradientTarget::Total, GradientVariable::PositionFrozenVelocity,
            which, t1, t2, p, 1e-4);
        auto gv = richardson_functional_gradient(
            GradientTarget::Total, GradientVariable::Velocity, which, t1, t2, p,
            1e-4);
        // The 1/dt conversion understates the density at the two endpoint
        // nodes, whose trapezoid weight is dt/2; correct them before feeding
        // the stencil.
        gv.front() *= 2.0;
        gv.back() *= 2.0;
        const auto dgv = stencil_time_derivative(gv, g.dt());
        const auto& analytic = (which == 1) ? rep.residual1 : rep.residual2;
        double sup = 0.0;
        for (std::size_t j = 1; j + 1 < analytic.size(); ++j)
            sup = std::max(sup, norm(analytic[j]));
        for (std::size_t j = 1; j + 1 < analytic.size(); ++j) {
            const Vec3 numeric = gq[j] - dgv[j];
            CHECK(norm(analytic[j] - numeric) / sup < 1e-6);
        }
    }
}

TEST_CASE("residual grows linearly with perturbation amplitude") {
    const TimeGrid g = make_grid(1.0, 24);
    const SystemParams p = base_params(0.0, 0.1, 1.0, 1.0);
    Vec3 a;
    a[0] = 0.3;
    const Trajectory sol1 = straight_line(g, 1, Vec3{}, a);
    const Trajectory sol2 = rest_at(g, 1.5);

    double previous_ratio = -1.0;
    for (double amp : {1e-4, 1e-3, 1e-2}) {
        const Trajectory pert = perturb_interior(sol1, 99, amp);
        const ResidualReport rep = el_residual(pert, sol2, p);
        const double ratio = rep.sup_norm / amp;
        if (previous_ratio > 0.0)
            CHECK(ratio == Catch::Approx(previous_ratio).epsilon(0.05));
        previous_ratio = ratio;
    }
}

TEST_CASE("numeric gradient guards and trivial cases") {
    const TimeGrid g = make_grid(1.0, 8);
    const SystemParams p = base_params(0.0, 0.1, 1.0, 1.0);
    const Trajectory r1 = rest_at(g, 0.0);
    const Trajectory r2 = rest_at(g, 1.0);

    CHECK_THROWS_AS(
        numeric_functional_gradient(GradientTarget::Free,
                                    GradientVariable::Velocity, 1, r1, r2, p, 0.0),
        invalid_step_error);

    const auto grad = numeric_functional_gradient(
        GradientTarget::Free, GradientVariable::Velocity, 1, r1, r2, p, 1e-5);
    for (std::size_t j = 1; j + 1 < grad.size(); ++j)
        CHECK(norm(grad[j]) < 1e-11);
}

TEST_CASE("integrated interaction gradients balance between particles") {
    // Discrete Newton's third law: the time-integrated configuration
    // gradients of the interaction term are equal and opposite.
    const TimeGrid g = make_grid(1.5, 24);
    const SystemParams p = base_params(0.5, 0.2, 1.5, 1.5);
    Vec3 off;
    off[0] = 0.9;
    const Trajectory t1 = random_smooth_trajectory(g, 1, Vec3{}, Vec3{}, 61, 0.2);
    const Trajectory t2 = random_smooth_trajectory(g, 1, off, off, 62, 0.2);

    const auto v1 = velocity(t1);
    const auto v2 = velocity(t2);
    const auto g1 = configuration_gradient_qv(t1.grid, t1.values, v1, t2.grid,
                                              t2.values, v2, p.coupling, p.sigma);
    const auto g2 = configuration_gradient_qv(t2.grid, t2.values, v2, t1.grid,
                                              t1.values, v1, p.coupling, p.sigma);
    const auto w = g.trapezoid_weights();
    Vec3 total1, total2;
    for (std::size_t j = 0; j < g1.size(); ++j) total1 += w[j] * g1[j];
    for (std::size_t j = 0; j < g2.size(); ++j) total2 += w[j] * g2[j];
    CHECK(norm(total1 + total2) < 1e-12 * std::max(1.0, norm(total1)));

    // The same balance seen through the numeric interaction gradient. The
    // 1/dt density conversion halves the endpoint entries relative to their
    // trapezoid weight; compensate before integrating.
    auto n1 = numeric_functional_gradient(
        GradientTarget::Interaction, GradientVariable::PositionFrozenVelocity, 1,
        t1, t2, p, 1e-5);
    n1.front() *= 2.0;
    n1.back() *= 2.0;
    Vec3 numeric_total1;
    for (std::size_t j = 0; j < n1.size(); ++j) numeric_total1 += w[j] * n1[j];
    CHECK(norm(numeric_total1 - total1) < 1e-6 * std::max(1.0, norm(total1)));
}
