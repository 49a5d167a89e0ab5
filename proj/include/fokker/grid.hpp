#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fokker/errors.hpp"

namespace fokker {

// Uniform time grid on [0, T] with n_steps intervals (n_steps + 1 nodes).
struct TimeGrid {
    double horizon = 0.0;
    std::size_t n_steps = 0;

    double dt() const { return horizon / static_cast<double>(n_steps); }
    std::size_t n_nodes() const { return n_steps + 1; }
    double node(std::size_t j) const { return static_cast<double>(j) * dt(); }

    // Composite trapezoid weights: dt * (1/2, 1, ..., 1, 1/2).
    std::vector<double> trapezoid_weights() const {
        std::vector<double> w(n_nodes(), dt());
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.horizon == b.horizon && a.n_steps == b.n_steps;
    }
};

inline TimeGrid make_grid(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0))
        throw invalid_grid_error("invalid grid: horizon T = " +
                                 std::to_string(horizon) + " must be > 0");
    if (n_steps < 2)
        throw invalid_grid_error("invalid grid: n = " + std::to_string(n_steps) +
                                 " must be >= 2");
    return TimeGrid{horizon, n_steps};
}

} // namespace fokker
