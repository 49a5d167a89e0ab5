#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fokker/numeric.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Seeded smooth random trajectories for gradient checks and property tests:
// a straight line between the endpoints plus a few low-order sine modes that
// vanish at both ends. Amplitudes are scaled to keep speeds safely
// subluminal. Fully deterministic for a given seed on any platform.
inline Trajectory random_smooth_trajectory(const TimeGrid& grid, int dim,
                                           const Vec3& q0, const Vec3& qT,
                                           std::uint64_t seed,
                                           double amplitude = 0.1,
                                           int modes = 4) {
    SplitMix64 rng(seed);
    std::vector<Vec3> amps(static_cast<std::size_t>(modes));
    for (auto& a : amps)
        for (int k = 0; k < dim; ++k)
            a[static_cast<std::size_t>(k)] = amplitude * rng.next_symmetric();

    const double T = grid.horizon;
    std::vector<Vec3> vals(grid.n_nodes());
    for (std::size_t j = 0; j < vals.size(); ++j) {
        const double t = grid.node(j);
        const double s = t / T;
        Vec3 q = (1.0 - s) * q0 + s * qT;
        for (int m = 0; m < modes; ++m) {
            const double phase = std::sin(static_cast<double>(m + 1) * 3.14159265358979323846 * s);
            // 1/(m+1)^2 falloff keeps the path smooth and the speed bounded.
            q += (phase / ((m + 1.0) * (m + 1.0))) * amps[static_cast<std::size_t>(m)];
        }
        vals[j] = q;
    }
    return make_trajectory(grid, dim, std::move(vals));
}

// Interior-node perturbation that vanishes at the endpoints; used by
// linearization tests.
inline Trajectory perturb_interior(const Trajectory& base, std::uint64_t seed,
                                   double amplitude) {
    SplitMix64 rng(seed);
    Trajectory out = base;
    const double T = base.grid.horizon;
    for (std::size_t j = 1; j + 1 < out.n_nodes(); ++j) {
        const double s = base.grid.node(j) / T;
        const double window = std::sin(3.14159265358979323846 * s);
        for (int k = 0; k < base.dim; ++k)
            out.values[j][static_cast<std::size_t>(k)] +=
                amplitude * window * rng.next_symmetric();
    }
    return out;
}

} // namespace fokker
