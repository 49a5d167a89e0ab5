#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fokker/eigs.hpp"
#include "fokker/errors.hpp"
#include "fokker/lattice.hpp"

namespace fokker {

// Eigenvalue-branch scan over a free parameter of the lattice eigenproblem.
// Branches are matched across adjacent parameter values by eigenvector
// overlap; sign changes of the finite-difference derivative are flagged as
// stationary-point candidates.

enum class ScanParameter { Sigma, Horizon, HbarTilde };

inline const char* scan_parameter_name(ScanParameter p) {
    switch (p) {
        case ScanParameter::Sigma: return "sigma";
        case ScanParameter::Horizon: return "T";
        case ScanParameter::HbarTilde: return "hbar_tilde";
    }
    return "?";
}

struct ScanRow {
    double value = 0.0;
    bool ok = false;
    std::string message;                  // failure reason when !ok
    std::vector<double> lambdas;          // branch-ordered eigenvalues
    std::vector<double> dlambdas;         // d lambda / d param (NaN at ends of gaps)
    std::vector<double> match_overlap;    // overlap with previous row's branch
};

struct ScanResult {
    ScanParameter parameter = ScanParameter::Sigma;
    std::size_t k = 0;
    std::vector<ScanRow> rows;
    // (row index, branch index) pairs where dlambda changes sign.
    std::vector<std::pair<std::size_t, std::size_t>> stationary_candidates;
};

inline ScanResult stationarity_scan(const LatticeSpec& spec_template,
                                    const SystemParams& params_template,
                                    ScanParameter parameter,
                                    const std::vector<double>& values,
                                    std::size_t k, double eig_tol = 1e-9) {
    if (values.size() < 3)
        throw error("stationarity scan needs at least 3 parameter values");
    if (!std::is_sorted(values.begin(), values.end()))
        throw error("stationarity scan values must be sorted ascending");

    ScanResult result;
    result.parameter = parameter;
    result.k = k;

    std::vector<SpectrumResult> spectra(values.size());
    const ActionOperator* last_op = nullptr;
    std::vector<ActionOperator> ops;
    ops.reserve(values.size());

    // Solve every point; a failing row is flagged and the scan continues.
    for (std::size_t i = 0; i < values.size(); ++i) {
        ScanRow row;
        row.value = values[i];
        LatticeSpec spec = spec_template;
        SystemParams params = params_template;
        switch (parameter) {
            case ScanParameter::Sigma: params.sigma = values[i]; break;
            case ScanParameter::Horizon:
                params.T1 = values[i];
                params.T2 = values[i];
                break;
            case ScanParameter::HbarTilde: spec.hbar_tilde = values[i]; break;
        }
        try {
            ops.push_back(build_action_operator(spec, params));
            spectra[i] = lowest_eigenvalues(ops.back(), k, eig_tol);
            row.ok = true;
            row.lambdas = spectra[i].eigenvalues;
        } catch (const error& e) {
            ops.push_back(ActionOperator{});
            row.ok = false;
            row.message = e.what();
        }
        result.rows.push_back(std::move(row));
    }

    // Branch matching by eigenvector overlap against the last successful row.
    std::size_t prev = values.size(); // invalid
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!result.rows[i].ok) continue;
        if (prev != values.size()) {
            const auto& prev_vecs = spectra[prev].eigenvectors;
            auto& cur = spectra[i];
            std::vector<std::size_t> assignment(k);
            std::vector<bool> used(k, false);
            std::vector<double> overlaps(k, 0.0);
            for (std::size_t b = 0; b < k; ++b) {
                double best = -1.0;
                std::size_t best_j = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    if (used[j]) continue;
                    const double ov =
                        pair_overlap(ops[i], prev_vecs[b], cur.eigenvectors[j]);
                    if (ov > best) {
                        best = ov;
                        best_j = j;
                    }
                }
                assignment[b] = best_j;
                used[best_j] = true;
                overlaps[b] = best;
            }
            SpectrumResult reordered;
            reordered.matvecs = cur.matvecs;
            reordered.operator_norm_estimate = cur.operator_norm_estimate;
            for (std::size_t b = 0; b < k; ++b) {
                reordered.eigenvalues.push_back(cur.eigenvalues[assignment[b]]);
                reordered.residual_norms.push_back(
                    cur.residual_norms[assignment[b]]);
                reordered.normalization.push_back(
                    cur.normalization[assignment[b]]);
                reordered.eigenvectors.push_back(
                    std::move(cur.eigenvectors[assignment[b]]));
            }
            spectra[i] = std::move(reordered);
            result.rows[i].lambdas = spectra[i].eigenvalues;
            result.rows[i].match_overlap = overlaps;
        }
        prev = i;
    }

    // Finite-difference derivatives on matched branches: central where both
    // neighbors succeeded, one-sided at the ends.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto& row = result.rows[i];
        if (!row.ok) continue;
        row.dlambdas.assign(k, nan);
        const auto ok_at = [&](std::size_t j) {
            return j < values.size() && result.rows[j].ok;
        };
        for (std::size_t b = 0; b < k; ++b) {
            const bool has_prev = i > 0 && ok_at(i - 1);
            const bool has_next = ok_at(i + 1);
            if (has_prev && has_next)
                row.dlambdas[b] =
                    (result.rows[i + 1].lambdas[b] - result.rows[i - 1].lambdas[b]) /
                    (values[i + 1] - values[i - 1]);
            else if (has_next)
                row.dlambdas[b] = (result.rows[i + 1].lambdas[b] - row.lambdas[b]) /
                                  (values[i + 1] - values[i]);
            else if (has_prev)
                row.dlambdas[b] = (row.lambdas[b] - result.rows[i - 1].lambdas[b]) /
                                  (values[i] - values[i - 1]);
        }
    }

    // Stationary-point candidates: derivative sign changes along a branch.
    for (std::size_t b = 0; b < k; ++b) {
        double last_d = nan;
        std::size_t last_i = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto& row = result.rows[i];
            if (!row.ok || !(b < row.dlambdas.size()) ||
                std::isnan(row.dlambdas[b]))
                continue;
            if (!std::isnan(last_d) && last_d * row.dlambdas[b] < 0.0)
                result.stationary_candidates.push_back({last_i, b});
            last_d = row.dlambdas[b];
            last_i = i;
        }
    }
    return result;
}

} // namespace fokker
