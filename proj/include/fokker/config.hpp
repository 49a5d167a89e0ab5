#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fokker/errors.hpp"
#include "fokker/lattice.hpp"
#include "fokker/solver.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Run configuration: one JSON file per run, CLI flags may override single
// values. Unknown keys are rejected (this guards, among other things, the
// hbar vs hbar_tilde distinction). Physics parameters have no silent
// defaults; only solver/lattice tuning knobs and the seed carry defaults,
// and the effective values are echoed in the run log.

struct RunConfig {
    SystemParams params;
    std::size_t n1 = 0, n2 = 0;
    BvpEndpoints endpoints;
    SolveConfig solver;
    bool has_hbar_tilde = false;
    double hbar_tilde = 1.0;
    bool has_lattice = false;
    LatticeSpec lattice;
    std::uint64_t seed = 0;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::ordered_json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& scope,
                                std::vector<std::string>& errors) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            std::string msg = "unknown key \"" + scope + key + "\"";
            if (key == "hbar") msg += " (the quantum constant is \"hbar_tilde\")";
            errors.push_back(msg);
        }
    }
}

inline bool read_number(const nlohmann::ordered_json& obj, const std::string& key,
                        double& out, std::vector<std::string>& errors,
                        bool required, const std::string& scope) {
    if (!obj.contains(key)) {
        if (required) errors.push_back("missing required key \"" + scope + key + "\"");
        return false;
    }
    if (!obj[key].is_number()) {
        errors.push_back("key \"" + scope + key + "\" must be a number");
        return false;
    }
    out = obj[key].get<double>();
    return true;
}

inline bool read_index(const nlohmann::ordered_json& obj, const std::string& key,
                       std::size_t& out, std::vector<std::string>& errors,
                       bool required, const std::string& scope) {
    if (!obj.contains(key)) {
        if (required) errors.push_back("missing required key \"" + scope + key + "\"");
        return false;
    }
    if (!obj[key].is_number_unsigned()) {
        errors.push_back("key \"" + scope + key +
                         "\" must be a non-negative integer");
        return false;
    }
    out = obj[key].get<std::size_t>();
    return true;
}

inline bool read_vec(const nlohmann::ordered_json& obj, const std::string& key,
                     int dim, Vec3& out, std::vector<std::string>& errors) {
    if (!obj.contains(key)) {
        errors.push_back("missing required key \"endpoints." + key + "\"");
        return false;
    }
    const auto& v = obj[key];
    if (v.is_number()) {
        if (dim != 1) {
            errors.push_back("endpoints." + key +
                             " is a scalar but dim > 1; use an array");
            return false;
        }
        out[0] = v.get<double>();
        return true;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        errors.push_back("endpoints." + key + " must be an array of length " +
                         std::to_string(dim));
        return false;
    }
    for (int k = 0; k < dim; ++k) {
        if (!v[static_cast<std::size_t>(k)].is_number()) {
            errors.push_back("endpoints." + key + "[" + std::to_string(k) +
                             "] must be a number");
            return false;
        }
        out[static_cast<std::size_t>(k)] =
            v[static_cast<std::size_t>(k)].get<double>();
    }
    return true;
}

} // namespace detail

inline RunConfig parse_config_json(const nlohmann::ordered_json& root) {
    std::vector<std::string> errors;
    if (!root.is_object()) throw config_error("config root must be a JSON object");

    static const std::set<std::string> top_keys{
        "m1", "m2", "coupling", "T1", "T2", "n1", "n2", "sigma",
        "dim", "endpoints", "hbar_tilde", "solver", "lattice", "seed"};
    detail::reject_unknown_keys(root, top_keys, "", errors);

    RunConfig cfg;
    detail::read_number(root, "m1", cfg.params.m1, errors, true, "");
    detail::read_number(root, "m2", cfg.params.m2, errors, true, "");
    detail::read_number(root, "coupling", cfg.params.coupling, errors, true, "");
    detail::read_number(root, "T1", cfg.params.T1, errors, true, "");
    detail::read_number(root, "T2", cfg.params.T2, errors, true, "");
    detail::read_index(root, "n1", cfg.n1, errors, true, "");
    detail::read_index(root, "n2", cfg.n2, errors, true, "");
    detail::read_number(root, "sigma", cfg.params.sigma, errors, true, "");
    {
        std::size_t dim = 0;
        if (detail::read_index(root, "dim", dim, errors, true, "")) {
            if (dim < 1 || dim > 3)
                errors.push_back("dim must be 1, 2 or 3");
            else
                cfg.params.dim = static_cast<int>(dim);
        }
    }

    if (root.contains("endpoints")) {
        if (!root["endpoints"].is_object()) {
            errors.push_back("endpoints must be an object");
        } else {
            const auto& ep = root["endpoints"];
            static const std::set<std::string> ep_keys{"q1_0", "q1_T", "q2_0",
                                                       "q2_T"};
            detail::reject_unknown_keys(ep, ep_keys, "endpoints.", errors);
            detail::read_vec(ep, "q1_0", cfg.params.dim, cfg.endpoints.q1_start,
                             errors);
            detail::read_vec(ep, "q1_T", cfg.params.dim, cfg.endpoints.q1_end,
                             errors);
            detail::read_vec(ep, "q2_0", cfg.params.dim, cfg.endpoints.q2_start,
                             errors);
            detail::read_vec(ep, "q2_T", cfg.params.dim, cfg.endpoints.q2_end,
                             errors);
        }
    } else {
        errors.push_back("missing required key \"endpoints\"");
    }

    if (root.contains("hbar_tilde")) {
        cfg.has_hbar_tilde =
            detail::read_number(root, "hbar_tilde", cfg.hbar_tilde, errors, false, "");
    }

    if (root.contains("solver")) {
        if (!root["solver"].is_object()) {
            errors.push_back("solver must be an object");
        } else {
            const auto& s = root["solver"];
            static const std::set<std::string> solver_keys{
                "tol", "max_iter", "continuation_steps", "damping"};
            detail::reject_unknown_keys(s, solver_keys, "solver.", errors);
            detail::read_number(s, "tol", cfg.solver.tol, errors, false, "solver.");
            detail::read_index(s, "max_iter", cfg.solver.max_newton, errors, false,
                               "solver.");
            detail::read_index(s, "continuation_steps",
                               cfg.solver.continuation_steps, errors, false,
                               "solver.");
            detail::read_number(s, "damping", cfg.solver.damping, errors, false,
                                "solver.");
        }
    }

    if (root.contains("lattice")) {
        if (!root["lattice"].is_object()) {
            errors.push_back("lattice must be an object");
        } else {
            const auto& l = root["lattice"];
            static const std::set<std::string> lattice_keys{
                "nt", "nq", "q_min", "q_max", "dim_cap"};
            detail::reject_unknown_keys(l, lattice_keys, "lattice.", errors);
            cfg.has_lattice = true;
            detail::read_index(l, "nt", cfg.lattice.n_t, errors, true, "lattice.");
            detail::read_index(l, "nq", cfg.lattice.n_q, errors, true, "lattice.");
            detail::read_number(l, "q_min", cfg.lattice.q_min, errors, true,
                                "lattice.");
            detail::read_number(l, "q_max", cfg.lattice.q_max, errors, true,
                                "lattice.");
            detail::read_number(l, "dim_cap", cfg.lattice.dim_cap, errors, false,
                                "lattice.");
        }
    }

    if (root.contains("seed")) {
        std::size_t seed = 0;
        if (detail::read_index(root, "seed", seed, errors, false, ""))
            cfg.seed = seed;
    }

    // Invariant checks, aggregated.
    if (root.contains("m1") && !(cfg.params.m1 > 0.0))
        errors.push_back("mass m1 must be > 0");
    if (root.contains("m2") && !(cfg.params.m2 > 0.0))
        errors.push_back("mass m2 must be > 0");
    if (root.contains("sigma") && !(cfg.params.sigma > 0.0))
        errors.push_back("invalid regularization: sigma = " +
                         std::to_string(cfg.params.sigma) + " must be > 0");
    if (root.contains("T1") && !(cfg.params.T1 > 0.0))
        errors.push_back("horizon T1 must be > 0");
    if (root.contains("T2") && !(cfg.params.T2 > 0.0))
        errors.push_back("horizon T2 must be > 0");
    if (root.contains("n1") && cfg.n1 < 2) errors.push_back("n1 must be >= 2");
    if (root.contains("n2") && cfg.n2 < 2) errors.push_back("n2 must be >= 2");
    if (!(cfg.solver.tol > 0.0)) errors.push_back("solver.tol must be > 0");
    if (cfg.solver.continuation_steps < 1)
        errors.push_back("solver.continuation_steps must be >= 1");
    if (!(cfg.solver.damping > 0.0 && cfg.solver.damping <= 1.0))
        errors.push_back("solver.damping must lie in (0, 1]");
    if (cfg.has_hbar_tilde && !(cfg.hbar_tilde > 0.0))
        errors.push_back("hbar_tilde must be > 0");
    if (cfg.has_lattice) {
        if (cfg.lattice.n_t < 2) errors.push_back("lattice.nt must be >= 2");
        if (cfg.lattice.n_q < 2) errors.push_back("lattice.nq must be >= 2");
        if (!(cfg.lattice.q_max > cfg.lattice.q_min))
            errors.push_back("lattice box must have q_max > q_min");
        if (!(cfg.lattice.dim_cap > 0))
            errors.push_back("lattice.dim_cap must be > 0");
    }

    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw config_error(msg, errors);
    }

    // Derived wiring: lattice endpoints come from the trajectory endpoints
    // (first component; the lattice is one-dimensional).
    cfg.lattice.hbar_tilde = cfg.hbar_tilde;
    cfg.lattice.q1_start = cfg.endpoints.q1_start[0];
    cfg.lattice.q1_end = cfg.endpoints.q1_end[0];
    cfg.lattice.q2_start = cfg.endpoints.q2_start[0];
    cfg.lattice.q2_end = cfg.endpoints.q2_end[0];
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::ordered_json root;
    try {
        root = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into line/column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw config_error("config parse error at line " + std::to_string(line) +
                           ", column " + std::to_string(col) + ": " + e.what());
    }
    return parse_config_json(root);
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

// Effective configuration echo for the run log (defaults applied).
inline nlohmann::ordered_json config_echo(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["m1"] = cfg.params.m1;
    j["m2"] = cfg.params.m2;
    j["coupling"] = cfg.params.coupling;
    j["T1"] = cfg.params.T1;
    j["T2"] = cfg.params.T2;
    j["n1"] = cfg.n1;
    j["n2"] = cfg.n2;
    j["sigma"] = cfg.params.sigma;
    j["dim"] = cfg.params.dim;
    auto vec = [&](const Vec3& v) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (int k = 0; k < cfg.params.dim; ++k)
            a.push_back(v[static_cast<std::size_t>(k)]);
        return a;
    };
    j["endpoints"] = {{"q1_0", vec(cfg.endpoints.q1_start)},
                      {"q1_T", vec(cfg.endpoints.q1_end)},
                      {"q2_0", vec(cfg.endpoints.q2_start)},
                      {"q2_T", vec(cfg.endpoints.q2_end)}};
    if (cfg.has_hbar_tilde) j["hbar_tilde"] = cfg.hbar_tilde;
    j["solver"] = {{"tol", cfg.solver.tol},
                   {"max_iter", cfg.solver.max_newton},
                   {"continuation_steps", cfg.solver.continuation_steps},
                   {"damping", cfg.solver.damping}};
    if (cfg.has_lattice)
        j["lattice"] = {{"nt", cfg.lattice.n_t},
                        {"nq", cfg.lattice.n_q},
                        {"q_min", cfg.lattice.q_min},
                        {"q_max", cfg.lattice.q_max},
                        {"dim_cap", cfg.lattice.dim_cap}};
    j["seed"] = cfg.seed;
    return j;
}

} // namespace fokker
