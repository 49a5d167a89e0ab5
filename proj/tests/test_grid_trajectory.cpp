#include <catch_amalgamated.hpp>

#include <sstream>

#include "fokker/grid.hpp"
#include "fokker/random_paths.hpp"
#include "fokker/trajectory.hpp"

using namespace fokker;

TEST_CASE("make_grid produces uniform nodes") {
    const TimeGrid g = make_grid(1.0, 4);
    REQUIRE(g.n_nodes() == 5);
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(1) == Catch::Approx(0.25));
    CHECK(g.node(2) == Catch::Approx(0.5));
    CHECK(g.node(4) == Catch::Approx(1.0));

    CHECK(make_grid(2.0, 2).dt() == Catch::Approx(1.0));
}

TEST_CASE("make_grid rejects bad input") {
    CHECK_THROWS_AS(make_grid(0.0, 4), invalid_grid_error);
    CHECK_THROWS_AS(make_grid(-1.0, 4), invalid_grid_error);
    CHECK_THROWS_AS(make_grid(1.0, 1), invalid_grid_error);
}

TEST_CASE("trapezoid weights sum to the horizon") {
    const TimeGrid g = make_grid(3.0, 7);
    const auto w = g.trapezoid_weights();
    double total = 0.0;
    for (double x : w) total += x;
    CHECK(total == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(w.front() == Catch::Approx(0.5 * g.dt()));
    CHECK(w.back() == Catch::Approx(0.5 * g.dt()));
}

TEST_CASE("velocity is exact for affine paths") {
    const TimeGrid g = make_grid(1.0, 10);
    Vec3 v0;
    v0[0] = 0.5;
    const Trajectory traj = straight_line(g, 1, Vec3{}, v0);
    const auto v = velocity(traj);
    for (const auto& vj : v) CHECK(vj[0] == Catch::Approx(0.5).margin(1e-12));

    const Trajectory rest = straight_line(g, 1, v0, v0);
    for (const auto& vj : velocity(rest)) CHECK(vj[0] == 0.0);
}

TEST_CASE("velocity converges at second order") {
    // q(t) = t^2 on [0,1]; interior stencil is exact for quadratics, the
    // endpoint stencils are exact as well (second-order one-sided).
    const TimeGrid g = make_grid(1.0, 100);
    std::vector<Vec3> vals(g.n_nodes());
    for (std::size_t j = 0; j < vals.size(); ++j) {
        const double t = g.node(j);
        vals[j][0] = 0.2 * t * t;
    }
    const Trajectory traj = make_trajectory(g, 1, vals);
    const auto v = velocity(traj);
    CHECK(v[50][0] == Catch::Approx(0.2 * 2.0 * g.node(50)).margin(1e-10));
}

TEST_CASE("velocity requires at least 3 nodes") {
    Trajectory t;
    t.grid = TimeGrid{1.0, 4};
    t.dim = 1;
    t.values.resize(2);
    CHECK_THROWS_AS(velocity(t), insufficient_resolution_error);
}

TEST_CASE("velocity of reversed path is the negated reversed field") {
    const TimeGrid g = make_grid(2.0, 24);
    Vec3 a, b;
    a[0] = -0.4;
    b[0] = 0.3;
    const Trajectory traj =
        random_smooth_trajectory(g, 1, a, b, /*seed=*/7, /*amplitude=*/0.2);
    Trajectory rev = traj;
    std::reverse(rev.values.begin(), rev.values.end());
    const auto v = velocity(traj);
    const auto vr = velocity(rev);
    const std::size_t n = v.size();
    for (std::size_t j = 0; j < n; ++j)
        CHECK(vr[j][0] == Catch::Approx(-v[n - 1 - j][0]).margin(1e-14));
}

TEST_CASE("validate aggregates violations and is pure") {
    SystemParams params;
    params.T1 = params.T2 = 1.0;
    params.sigma = 0.1;
    const TimeGrid g = make_grid(1.0, 8);
    const Trajectory rest1 = straight_line(g, 1, Vec3{}, Vec3{});
    Vec3 sep;
    sep[0] = 1.0;
    const Trajectory rest2 = straight_line(g, 1, sep, sep);

    CHECK(validate(params, rest1, rest2).empty());
    CHECK(validate(params, rest1, rest2).empty()); // idempotent

    SECTION("superluminal node is reported with its index") {
        Trajectory fast = rest1;
        fast.values[3][0] = 0.5; // jump produces |qdot| > 1 nearby
        const auto violations = validate(params, fast, rest2);
        REQUIRE_FALSE(violations.empty());
        bool found = false;
        for (const auto& v : violations)
            if (v.find("superluminal") != std::string::npos) found = true;
        CHECK(found);
    }

    SECTION("sigma <= 0 is an invalid regularization") {
        SystemParams bad = params;
        bad.sigma = 0.0;
        const auto violations = validate(bad, rest1, rest2);
        REQUIRE_FALSE(violations.empty());
        CHECK(violations.front().find("regularization") != std::string::npos);
    }

    SECTION("grid horizon mismatch is reported") {
        SystemParams bad = params;
        bad.T1 = 2.0;
        const auto violations = validate(bad, rest1, rest2);
        REQUIRE_FALSE(violations.empty());
    }
}

TEST_CASE("trajectory CSV round-trips bit-exactly") {
    const TimeGrid g = make_grid(1.5, 16);
    Vec3 a, b;
    a[1] = 0.25;
    b[0] = -0.125;
    const Trajectory traj = random_smooth_trajectory(g, 2, a, b, 42, 0.15);
    const std::string csv = trajectory_to_csv(traj);
    std::istringstream in(csv);
    const Trajectory back = trajectory_from_csv(in);
    REQUIRE(back.n_nodes() == traj.n_nodes());
    REQUIRE(back.dim == traj.dim);
    for (std::size_t j = 0; j < traj.n_nodes(); ++j)
        for (int k = 0; k < traj.dim; ++k)
            CHECK(back.values[j][static_cast<std::size_t>(k)] ==
                  traj.values[j][static_cast<std::size_t>(k)]);
}

TEST_CASE("CSV header carries one column per dimension") {
    const TimeGrid g = make_grid(1.0, 4);
    const Trajectory t1 = straight_line(g, 1, Vec3{}, Vec3{});
    CHECK(trajectory_to_csv(t1).substr(0, 5) == "t,q1\n");
    const Trajectory t3 = straight_line(g, 3, Vec3{}, Vec3{});
    CHECK(trajectory_to_csv(t3).substr(0, 11) == "t,q1,q2,q3\n");
}
