#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fokker/action.hpp"
#include "fokker/canonical.hpp"
#include "fokker/eigs.hpp"
#include "fokker/scan.hpp"
#include "fokker/solver.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// JSON field names follow the type definitions. ordered_json keeps key order
// deterministic so identical inputs serialize to identical bytes.
using json = nlohmann::ordered_json;

inline json to_json(const Vec3& v, int dim) {
    json arr = json::array();
    for (int k = 0; k < dim; ++k) arr.push_back(v[static_cast<std::size_t>(k)]);
    return arr;
}

inline json field_to_json(const std::vector<Vec3>& f, int dim) {
    json arr = json::array();
    for (const auto& v : f) arr.push_back(to_json(v, dim));
    return arr;
}

inline json to_json(const ActionBreakdown& b) {
    return json{{"free1", b.free1},
                {"free2", b.free2},
                {"interaction", b.interaction},
                {"total", b.total}};
}

inline json to_json(const ResidualReport& r, int dim) {
    return json{{"residual1", field_to_json(r.residual1, dim)},
                {"residual2", field_to_json(r.residual2, dim)},
                {"sup_norm", r.sup_norm},
                {"l2_norm", r.l2_norm},
                {"metadata",
                 {{"n1", r.n1}, {"n2", r.n2}, {"sigma", r.sigma},
                  {"coupling", r.coupling}}}};
}

inline json to_json(const StationarityReport& r, int dim) {
    return json{{"residual_q1", field_to_json(r.residual_q1, dim)},
                {"residual_q2", field_to_json(r.residual_q2, dim)},
                {"residual_p1", field_to_json(r.residual_p1, dim)},
                {"residual_p2", field_to_json(r.residual_p2, dim)},
                {"q_sup_norm", r.q_sup_norm},
                {"q_l2_norm", r.q_l2_norm},
                {"p_sup_norm", r.p_sup_norm},
                {"p_l2_norm", r.p_l2_norm}};
}

inline json to_json(const Solution& s, int dim) {
    json trace = json::array();
    for (const auto& step : s.trace)
        trace.push_back({{"coupling", step.coupling},
                         {"iterations", step.iterations},
                         {"residual_sup", step.residual_sup}});
    return json{{"residual", to_json(s.residual, dim)},
                {"continuation_trace", trace}};
}

inline json to_json(const SpectrumResult& s) {
    return json{{"eigenvalues", s.eigenvalues},
                {"residual_norms", s.residual_norms},
                {"normalization", s.normalization},
                {"operator_norm_estimate", s.operator_norm_estimate},
                {"matvecs", s.matvecs}};
}

inline json to_json(const ScanResult& s) {
    json rows = json::array();
    for (const auto& r : s.rows) {
        json row{{"value", r.value}, {"ok", r.ok}};
        if (r.ok) {
            row["lambdas"] = r.lambdas;
            json dl = json::array();
            for (double d : r.dlambdas) {
                if (std::isnan(d)) dl.push_back(nullptr);
                else dl.push_back(d);
            }
            row["dlambdas"] = dl;
            if (!r.match_overlap.empty()) row["match_overlap"] = r.match_overlap;
        } else {
            row["error"] = r.message;
        }
        rows.push_back(std::move(row));
    }
    json cands = json::array();
    for (const auto& [i, b] : s.stationary_candidates)
        cands.push_back({{"row", i}, {"branch", b}});
    return json{{"parameter", scan_parameter_name(s.parameter)},
                {"k", s.k},
                {"rows", rows},
                {"stationary_candidates", cands}};
}

// Scan CSV: columns param, lambda_1..k, dlambda_1..k. Failed rows carry nan.
inline std::string scan_to_csv(const ScanResult& s) {
    std::string out = scan_parameter_name(s.parameter);
    for (std::size_t b = 1; b <= s.k; ++b) out += ",lambda_" + std::to_string(b);
    for (std::size_t b = 1; b <= s.k; ++b) out += ",dlambda_" + std::to_string(b);
    out += "\n";
    for (const auto& r : s.rows) {
        out += format_double(r.value);
        for (std::size_t b = 0; b < s.k; ++b)
            out += "," + (r.ok ? format_double(r.lambdas[b]) : std::string("nan"));
        for (std::size_t b = 0; b < s.k; ++b)
            out += "," + ((r.ok && !std::isnan(r.dlambdas[b]))
                              ? format_double(r.dlambdas[b])
                              : std::string("nan"));
        out += "\n";
    }
    return out;
}

// Spectrum CSV: one row per eigenvalue.
inline std::string spectrum_to_csv(const SpectrumResult& s) {
    std::string out = "index,lambda,residual_norm,normalization\n";
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
        out += std::to_string(i + 1) + "," + format_double(s.eigenvalues[i]) +
               "," + format_double(s.residual_norms[i]) + "," +
               format_double(s.normalization[i]) + "\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot open " + path + " for writing");
    f << content;
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

} // namespace fokker
