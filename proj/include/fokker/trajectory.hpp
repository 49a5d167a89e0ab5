#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fokker/errors.hpp"
#include "fokker/grid.hpp"
#include "fokker/numeric.hpp"

namespace fokker {

// Discretized particle path q(t_j) on a uniform grid. Endpoints are fixed for
// all variational operations.
struct Trajectory {
    TimeGrid grid;
    int dim = 1; // spatial dimension, 1..3
    std::vector<Vec3> values;
    bool endpoint_fixed_start = true;
    bool endpoint_fixed_end = true;

    std::size_t n_nodes() const { return values.size(); }
};

// Paired coordinate and momentum fields on one grid.
struct PhaseField {
    Trajectory q;
    std::vector<Vec3> p;
};

// Physical parameters of the two-charge system. The charges enter only
// through the product e1*e2 (`coupling`).
struct SystemParams {
    double m1 = 1.0;
    double m2 = 1.0;
    double coupling = 0.0;
    double T1 = 1.0;
    double T2 = 1.0;
    double sigma = 0.1; // width of the Gaussian lightcone regularization
    int dim = 1;
};

inline Trajectory make_trajectory(const TimeGrid& grid, int dim,
                                  std::vector<Vec3> values) {
    if (dim < 1 || dim > 3)
        throw dimension_error("spatial dimension must be 1, 2 or 3, got " +
                              std::to_string(dim));
    if (values.size() != grid.n_nodes())
        throw dimension_error("trajectory has " + std::to_string(values.size()) +
                              " values but grid has " +
                              std::to_string(grid.n_nodes()) + " nodes");
    return Trajectory{grid, dim, std::move(values)};
}

// Straight line between fixed endpoints.
inline Trajectory straight_line(const TimeGrid& grid, int dim, const Vec3& q0,
                                const Vec3& qT) {
    std::vector<Vec3> vals(grid.n_nodes());
    const double T = grid.horizon;
    for (std::size_t j = 0; j < vals.size(); ++j) {
        const double s = grid.node(j) / T;
        vals[j] = (1.0 - s) * q0 + s * qT;
    }
    return make_trajectory(grid, dim, std::move(vals));
}

// Velocity reconstruction: second-order central differences at interior
// nodes, one-sided second-order stencils at the two endpoints. Exact for
// affine paths.
inline std::vector<Vec3> velocity(const Trajectory& traj) {
    const std::size_t n = traj.n_nodes();
    if (n < 3)
        throw insufficient_resolution_error(
            "velocity reconstruction needs at least 3 nodes, got " +
            std::to_string(n));
    const double dt = traj.grid.dt();
    const auto& q = traj.values;
    std::vector<Vec3> v(n);
    v[0] = (1.0 / (2.0 * dt)) * (-3.0 * q[0] + 4.0 * q[1] - q[2]);
    for (std::size_t j = 1; j + 1 < n; ++j)
        v[j] = (1.0 / (2.0 * dt)) * (q[j + 1] - q[j - 1]);
    v[n - 1] =
        (1.0 / (2.0 * dt)) * (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]);
    return v;
}

// Same stencil applied to an arbitrary nodal field (used for d/dt of momenta).
inline std::vector<Vec3> stencil_time_derivative(const std::vector<Vec3>& f,
                                                 double dt) {
    const std::size_t n = f.size();
    if (n < 3)
        throw insufficient_resolution_error(
            "time derivative needs at least 3 nodes");
    std::vector<Vec3> d(n);
    d[0] = (1.0 / (2.0 * dt)) * (-3.0 * f[0] + 4.0 * f[1] - f[2]);
    for (std::size_t j = 1; j + 1 < n; ++j)
        d[j] = (1.0 / (2.0 * dt)) * (f[j + 1] - f[j - 1]);
    d[n - 1] = (1.0 / (2.0 * dt)) * (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]);
    return d;
}

// Aggregates every invariant violation instead of failing on the first.
// Pure: no side effects, idempotent.
inline std::vector<std::string> validate(const SystemParams& params,
                                         const Trajectory& traj1,
                                         const Trajectory& traj2) {
    std::vector<std::string> out;
    if (!(params.m1 > 0.0)) out.push_back("mass m1 must be > 0");
    if (!(params.m2 > 0.0)) out.push_back("mass m2 must be > 0");
    if (!(params.sigma > 0.0))
        out.push_back("invalid regularization: sigma must be > 0");
    if (!(params.T1 > 0.0)) out.push_back("horizon T1 must be > 0");
    if (!(params.T2 > 0.0)) out.push_back("horizon T2 must be > 0");

    const Trajectory* trajs[2] = {&traj1, &traj2};
    const double horizons[2] = {params.T1, params.T2};
    for (int a = 0; a < 2; ++a) {
        const Trajectory& t = *trajs[a];
        const std::string tag = "particle " + std::to_string(a + 1);
        if (t.values.size() != t.grid.n_nodes())
            out.push_back(tag + ": value count " + std::to_string(t.values.size()) +
                          " does not match grid node count " +
                          std::to_string(t.grid.n_nodes()));
        if (t.grid.horizon != horizons[a])
            out.push_back(tag + ": grid horizon " + std::to_string(t.grid.horizon) +
                          " does not match T" + std::to_string(a + 1) + " = " +
                          std::to_string(horizons[a]));
        if (t.dim != params.dim)
            out.push_back(tag + ": dimension mismatch with params");
        if (t.values.size() == t.grid.n_nodes() && t.n_nodes() >= 3) {
            const auto v = velocity(t);
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (!(norm2(v[j]) < 1.0))
                    out.push_back(tag + ": superluminal velocity |qdot| = " +
                                  std::to_string(norm(v[j])) + " at node " +
                                  std::to_string(j));
            }
        }
    }
    return out;
}

inline void require_valid(const SystemParams& params, const Trajectory& traj1,
                          const Trajectory& traj2) {
    auto violations = validate(params, traj1, traj2);
    if (!violations.empty()) throw validation_error(std::move(violations));
}

// ---------------------------------------------------------------------------
// Trajectory CSV format: header `t,q1[,q2,q3]`, one row per node, floating
// point at 17 significant digits so files round-trip bit-exactly.

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "t";
    for (int k = 0; k < traj.dim; ++k) out += ",q" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t j = 0; j < traj.n_nodes(); ++j) {
        out += format_double(traj.grid.node(j));
        for (int k = 0; k < traj.dim; ++k)
            out += "," + format_double(traj.values[j][static_cast<std::size_t>(k)]);
        out += "\n";
    }
    return out;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot open " + path + " for writing");
    f << trajectory_to_csv(traj);
}

inline Trajectory trajectory_from_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header))
        throw error("trajectory CSV: missing header");
    int dim = 0;
    {
        std::stringstream ss(header);
        std::string col;
        bool first = true;
        while (std::getline(ss, col, ',')) {
            if (first) {
                if (col != "t") throw error("trajectory CSV: first column must be t");
                first = false;
            } else {
                ++dim;
            }
        }
        if (dim < 1 || dim > 3)
            throw error("trajectory CSV: expected 1..3 coordinate columns");
    }
    std::vector<double> times;
    std::vector<Vec3> vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec3 q;
        if (!std::getline(ss, cell, ',')) throw error("trajectory CSV: bad row");
        times.push_back(std::stod(cell));
        for (int k = 0; k < dim; ++k) {
            if (!std::getline(ss, cell, ','))
                throw error("trajectory CSV: row has fewer than dim columns");
            q[static_cast<std::size_t>(k)] = std::stod(cell);
        }
        vals.push_back(q);
    }
    if (times.size() < 3) throw error("trajectory CSV: needs at least 3 rows");
    const double T = times.back();
    TimeGrid grid = make_grid(T, times.size() - 1);
    return make_trajectory(grid, dim, std::move(vals));
}

inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw error("cannot open " + path);
    return trajectory_from_csv(f);
}

} // namespace fokker
