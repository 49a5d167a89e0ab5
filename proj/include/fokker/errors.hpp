#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fokker {

// Base class for all domain errors thrown by the library.  Every error
// message names the violated precondition or invariant.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class invalid_grid_error : public error {
public:
    using error::error;
};

class insufficient_resolution_error : public error {
public:
    using error::error;
};

class invalid_regularization_error : public error {
public:
    using error::error;
};

// Superluminal node detected while evaluating the relativistic action.
class superluminal_error : public error {
public:
    superluminal_error(int particle, std::size_t node, double speed)
        : error("superluminal velocity |qdot| = " + std::to_string(speed) +
                " >= 1 at particle " + std::to_string(particle) + ", node " +
                std::to_string(node)),
          particle_(particle), node_(node), speed_(speed) {}
    int particle() const { return particle_; }
    std::size_t node() const { return node_; }
    double speed() const { return speed_; }

private:
    int particle_;
    std::size_t node_;
    double speed_;
};

class dimension_error : public error {
public:
    using error::error;
};

class invalid_step_error : public error {
public:
    using error::error;
};

class no_timelike_path_error : public error {
public:
    using error::error;
};

// Carries the residual-norm history of the failed iteration.
class divergence_error : public error {
public:
    divergence_error(const std::string& msg, std::vector<double> history)
        : error(msg), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

class singular_system_error : public error {
public:
    using error::error;
};

class too_large_error : public error {
public:
    too_large_error(const std::string& msg, double computed_dimension)
        : error(msg), dimension_(computed_dimension) {}
    double dimension() const { return dimension_; }

private:
    double dimension_;
};

class eigensolver_error : public error {
public:
    eigensolver_error(const std::string& msg, std::vector<double> ritz_history)
        : error(msg), history_(std::move(ritz_history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
    config_error(const std::string& msg, std::vector<std::string> items)
        : error(msg), items_(std::move(items)) {}
    const std::vector<std::string>& items() const { return items_; }

private:
    std::vector<std::string> items_;
};

// Aggregated validation failure (see validate() in trajectory.hpp).
class validation_error : public error {
public:
    explicit validation_error(std::vector<std::string> violations)
        : error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "validation failed:";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

} // namespace fokker
