#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fokker/delta.hpp"
#include "fokker/errors.hpp"
#include "fokker/trajectory.hpp"

namespace fokker {

// Desk-scale realization of the trajectory-space eigenvalue problem. Wave
// functionals live on a tensor lattice: each particle contributes n_t - 1
// interior time slices (endpoints are fixed, hence not state variables), and
// each slice coordinate ranges over an n_q-point spatial grid with Dirichlet
// walls. Spatial dimension is 1.
//
// The action operator is I = sum_a int dt qdot_a (hbar~/i) d/dq_a - H with
// the nonrelativistic H (kinetic + regularized interaction). Functional
// derivatives are realized as d/dq(t_j) = (1/dt) d/dq_j, so the equal-time
// delta in the second derivative contributes one factor 1/dt.
//
// The qdot p term has purely imaginary matrix elements (it is i times a real
// antisymmetric matrix W), while -H is real symmetric (A). The operator is
// stored in its explicitly real, symmetric form: the doubled matrix
// [[A, -W], [W, A]], acting on (Re Psi, Im Psi). Every complex eigenpair of
// A + iW appears twice in the doubled spectrum; lowest_eigenvalues collapses
// the duplicates via the partner map J(x, y) = (-y, x).

struct LatticeSpec {
    std::size_t n_t = 2;  // time steps per particle (slices 0..n_t)
    std::size_t n_q = 8;  // spatial points per slice coordinate
    double q_min = -1.0;
    double q_max = 1.0;
    double hbar_tilde = 1.0;
    double q1_start = 0.0, q1_end = 0.0; // fixed endpoint values
    double q2_start = 0.0, q2_end = 0.0;
    double dim_cap = 3e5;

    double dq() const {
        return (q_max - q_min) / static_cast<double>(n_q - 1);
    }
};

struct LatticeIndexMap {
    std::size_t n_t = 0;
    std::size_t n_q = 0;
    std::size_t n_dims = 0;        // 2 * (n_t - 1)
    std::size_t state_dim = 0;     // n_q^n_dims
    std::vector<std::size_t> stride;

    // dims are ordered particle 1 slices 1..n_t-1, then particle 2.
    std::size_t dim_index(int particle, std::size_t slice) const {
        return static_cast<std::size_t>(particle - 1) * (n_t - 1) + (slice - 1);
    }
    std::size_t digit(std::size_t state, std::size_t d) const {
        return (state / stride[d]) % n_q;
    }
    std::size_t with_digit_shift(std::size_t state, std::size_t d, int delta) const {
        return delta >= 0 ? state + stride[d] * static_cast<std::size_t>(delta)
                          : state - stride[d] * static_cast<std::size_t>(-delta);
    }
};

inline LatticeIndexMap build_lattice(const LatticeSpec& spec) {
    if (spec.n_t < 2)
        throw error("lattice needs n_t >= 2 (at least one interior slice)");
    if (spec.n_q < 2) throw error("lattice needs n_q >= 2");
    if (!(spec.q_max > spec.q_min)) throw error("lattice box must have q_max > q_min");
    for (double e : {spec.q1_start, spec.q1_end, spec.q2_start, spec.q2_end})
        if (e < spec.q_min || e > spec.q_max)
            throw error("lattice endpoint " + std::to_string(e) +
                        " lies outside the box [" + std::to_string(spec.q_min) +
                        ", " + std::to_string(spec.q_max) + "]");

    LatticeIndexMap map;
    map.n_t = spec.n_t;
    map.n_q = spec.n_q;
    map.n_dims = 2 * (spec.n_t - 1);

    const double dim_estimate =
        std::pow(static_cast<double>(spec.n_q), static_cast<double>(map.n_dims));
    if (dim_estimate > spec.dim_cap)
        throw too_large_error(
            "lattice state dimension " + std::to_string(dim_estimate) +
                " exceeds cap " + std::to_string(spec.dim_cap),
            dim_estimate);

    map.state_dim = 1;
    map.stride.resize(map.n_dims);
    for (std::size_t d = 0; d < map.n_dims; ++d) {
        map.stride[d] = map.state_dim;
        map.state_dim *= map.n_q;
    }
    return map;
}

enum class OperatorPart {
    ActionFull,        // qdot p term - H
    HamiltonianFull,   // kinetic + interaction
    HamiltonianKinetic // kinetic only
};

struct ActionOperator {
    LatticeIndexMap map;
    // Real part (symmetric) and imaginary part (antisymmetric) of the complex
    // operator; the public matrix is the doubled real symmetric form.
    Eigen::SparseMatrix<double, Eigen::RowMajor> A;
    Eigen::SparseMatrix<double, Eigen::RowMajor> W;
    OperatorPart part = OperatorPart::ActionFull;

    double sigma = 0.0;
    double coupling = 0.0;
    double m1 = 0.0, m2 = 0.0;
    double dt1 = 0.0, dt2 = 0.0;
    double dq = 0.0;
    double hbar_tilde = 0.0;

    std::size_t state_dim() const { return map.state_dim; }
    std::size_t matrix_dim() const { return 2 * map.state_dim; }

    // y = M x on the doubled real form [[A, -W], [W, A]].
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        const Eigen::Index n = static_cast<Eigen::Index>(state_dim());
        y.resize(2 * n);
        y.head(n) = A * x.head(n) - W * x.tail(n);
        y.tail(n) = W * x.head(n) + A * x.tail(n);
    }

    // Partner map J(x, y) = (-y, x); commutes with the operator and sends an
    // eigenvector to its realification duplicate.
    static Eigen::VectorXd partner(const Eigen::VectorXd& v) {
        const Eigen::Index n = v.size() / 2;
        Eigen::VectorXd out(v.size());
        out.head(n) = -v.tail(n);
        out.tail(n) = v.head(n);
        return out;
    }

    // Materialized doubled matrix (exactly symmetric by construction).
    Eigen::SparseMatrix<double> realified() const {
        const Eigen::Index n = static_cast<Eigen::Index>(state_dim());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(2 * A.nonZeros() + 2 * W.nonZeros()));
        for (int r = 0; r < A.outerSize(); ++r)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, r);
                 it; ++it) {
                trip.emplace_back(it.row(), it.col(), it.value());
                trip.emplace_back(n + it.row(), n + it.col(), it.value());
            }
        for (int r = 0; r < W.outerSize(); ++r)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, r);
                 it; ++it) {
                trip.emplace_back(it.row(), n + it.col(), -it.value());
                trip.emplace_back(n + it.col(), it.row(), -it.value());
            }
        Eigen::SparseMatrix<double> M(2 * n, 2 * n);
        M.setFromTriplets(trip.begin(), trip.end());
        return M;
    }

    // Weight of the discrete scalar product: prod over state dims of dq.
    double measure_weight() const {
        return std::pow(dq, static_cast<double>(map.n_dims));
    }
};

namespace detail {

// Coordinate value of particle `a` (1 or 2) at slice j for a given state:
// interior slices read the state digit, endpoint slices the fixed values.
inline double slice_coordinate(const LatticeSpec& spec, const LatticeIndexMap& map,
                               std::size_t state, int a, std::size_t j) {
    if (j == 0) return (a == 1) ? spec.q1_start : spec.q2_start;
    if (j == spec.n_t) return (a == 1) ? spec.q1_end : spec.q2_end;
    const std::size_t digit = map.digit(state, map.dim_index(a, j));
    return spec.q_min + static_cast<double>(digit) * spec.dq();
}

} // namespace detail

inline ActionOperator build_action_operator(const LatticeIndexMap& map,
                                            const SystemParams& params,
                                            const LatticeSpec& spec,
                                            OperatorPart part = OperatorPart::ActionFull) {
    require_sigma(params.sigma);
    if (map.state_dim == 0) throw error("empty lattice");

    ActionOperator op;
    op.map = map;
    op.part = part;
    op.sigma = params.sigma;
    op.coupling = params.coupling;
    op.m1 = params.m1;
    op.m2 = params.m2;
    op.dt1 = params.T1 / static_cast<double>(spec.n_t);
    op.dt2 = params.T2 / static_cast<double>(spec.n_t);
    op.dq = spec.dq();
    op.hbar_tilde = spec.hbar_tilde;

    const std::size_t N = map.state_dim;
    const double dq = op.dq;
    const double hb = spec.hbar_tilde;
    const bool action = part == OperatorPart::ActionFull;
    const bool with_potential = part != OperatorPart::HamiltonianKinetic;
    // -H in the action operator, +H otherwise.
    const double h_sign = action ? -1.0 : 1.0;

    std::vector<Eigen::Triplet<double>> ta;
    std::vector<Eigen::Triplet<double>> tw;
    ta.reserve(N * (2 * map.n_dims + 1));
    if (action) tw.reserve(N * 2 * map.n_dims);

    const double dts[2] = {op.dt1, op.dt2};
    const double masses[2] = {params.m1, params.m2};

    for (std::size_t s = 0; s < N; ++s) {
        double diag = 0.0;
        for (int a = 1; a <= 2; ++a) {
            const double dt = dts[a - 1];
            const double kin = hb * hb / (2.0 * masses[a - 1] * dt * dq * dq);
            for (std::size_t j = 1; j < spec.n_t; ++j) {
                const std::size_t d = map.dim_index(a, j);
                const std::size_t digit = map.digit(s, d);
                diag += h_sign * 2.0 * kin;
                if (digit > 0)
                    ta.emplace_back(static_cast<Eigen::Index>(s),
                                    static_cast<Eigen::Index>(map.with_digit_shift(s, d, -1)),
                                    h_sign * -kin);
                if (digit + 1 < map.n_q)
                    ta.emplace_back(static_cast<Eigen::Index>(s),
                                    static_cast<Eigen::Index>(map.with_digit_shift(s, d, +1)),
                                    h_sign * -kin);
                if (action) {
                    // qdot(t_j) as a multiplication operator: central
                    // difference of the neighboring slice coordinates. It
                    // does not involve q_j itself, so it commutes with the
                    // momentum stencil and the symmetrized product reduces to
                    // the plain one.
                    const double vel =
                        (detail::slice_coordinate(spec, map, s, a, j + 1) -
                         detail::slice_coordinate(spec, map, s, a, j - 1)) /
                        (2.0 * dt);
                    const double w = -hb * vel / (2.0 * dq);
                    if (digit + 1 < map.n_q)
                        tw.emplace_back(static_cast<Eigen::Index>(s),
                                        static_cast<Eigen::Index>(map.with_digit_shift(s, d, +1)),
                                        w);
                    if (digit > 0)
                        tw.emplace_back(static_cast<Eigen::Index>(s),
                                        static_cast<Eigen::Index>(map.with_digit_shift(s, d, -1)),
                                        -w);
                }
            }
        }
        if (with_potential && params.coupling != 0.0) {
            // Diagonal interaction: (e1e2/2) sum over all slice pairs of
            // dt1 dt2 rho_sigma((t_j - t_k)^2 - (q1_j - q2_k)^2).
            double pot = 0.0;
            for (std::size_t j = 0; j <= spec.n_t; ++j) {
                const double tj = static_cast<double>(j) * op.dt1;
                const double x1 = detail::slice_coordinate(spec, map, s, 1, j);
                for (std::size_t k = 0; k <= spec.n_t; ++k) {
                    const double tk = static_cast<double>(k) * op.dt2;
                    const double x2 = detail::slice_coordinate(spec, map, s, 2, k);
                    const double s2 = (tj - tk) * (tj - tk) - (x1 - x2) * (x1 - x2);
                    pot += regularized_delta(s2, params.sigma);
                }
            }
            diag += h_sign * 0.5 * params.coupling * op.dt1 * op.dt2 * pot;
        }
        ta.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), diag);
    }

    op.A.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    op.A.setFromTriplets(ta.begin(), ta.end());
    op.W.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    if (action) op.W.setFromTriplets(tw.begin(), tw.end());
    return op;
}

inline ActionOperator build_action_operator(const LatticeSpec& spec,
                                            const SystemParams& params,
                                            OperatorPart part = OperatorPart::ActionFull) {
    return build_action_operator(build_lattice(spec), params, spec, part);
}

} // namespace fokker
