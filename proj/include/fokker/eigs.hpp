#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fokker/errors.hpp"
#include "fokker/lattice.hpp"
#include "fokker/numeric.hpp"

namespace fokker {

// Iterative symmetric eigensolver for the doubled action operator, built on
// matrix-vector products only. The eigenvalues nearest zero are found by
// thick-restart Lanczos (full reorthogonalization) on the folded operator
// M^2, then refined by a Rayleigh-Ritz projection of M on the converged
// subspace augmented with partner and image vectors; the projection splits
// +/- pairs that fold onto the same M^2 eigenvalue. Realification duplicates
// are collapsed via the partner map J(x, y) = (-y, x).
//
// `tol` bounds the eigen-residual relative to the operator norm:
// ||M v - lambda v|| <= tol * ||M||_est for unit v.

struct SpectrumResult {
    std::vector<double> eigenvalues;           // ascending, one per complex pair
    std::vector<double> residual_norms;        // ||M v - lambda v||, unit v
    std::vector<double> normalization;         // weighted norms (== 1)
    std::vector<Eigen::VectorXd> eigenvectors; // doubled form, weighted-normalized
    double operator_norm_estimate = 0.0;
    std::size_t matvecs = 0;
};

namespace detail {

// Thick-restart Lanczos for the lowest eigenpairs of the PSD operator B.
// Returns Ritz vectors of the lowest `want` values (ascending), possibly
// more. Throws after the matvec budget is exhausted.
template <typename ApplyB>
inline Eigen::MatrixXd folded_lanczos_basis(ApplyB&& apply_B, Eigen::Index dim,
                                            std::size_t want, double rel_tol,
                                            std::size_t max_matvecs,
                                            std::size_t& matvecs,
                                            std::vector<double>& residual_history) {
    const std::size_t m = std::min<std::size_t>(
        static_cast<std::size_t>(dim), std::max<std::size_t>(2 * want + 24, 48));
    const std::size_t keep = std::min(m - 8, want + 12);

    Eigen::MatrixXd V(dim, static_cast<Eigen::Index>(m) + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) + 1,
                                              static_cast<Eigen::Index>(m) + 1);

    SplitMix64 rng(0x9e3779b97f4a7c15ULL);
    {
        Eigen::VectorXd v0(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v0[i] = rng.next_symmetric();
        v0.normalize();
        V.col(0) = v0;
    }

    std::size_t active = 0;
    double b_scale = 1.0;

    while (true) {
        for (std::size_t j = active; j < m; ++j) {
            const Eigen::Index jj = static_cast<Eigen::Index>(j);
            Eigen::VectorXd w = apply_B(V.col(jj));
            ++matvecs;
            // Two-pass full reorthogonalization; projections fill column j.
            Eigen::VectorXd h = V.leftCols(jj + 1).transpose() * w;
            w.noalias() -= V.leftCols(jj + 1) * h;
            Eigen::VectorXd h2 = V.leftCols(jj + 1).transpose() * w;
            w.noalias() -= V.leftCols(jj + 1) * h2;
            h += h2;
            for (Eigen::Index i = 0; i <= jj; ++i) {
                H(i, jj) = h[i];
                H(jj, i) = h[i];
            }
            const double beta = w.norm();
            if (beta < 1e-13 * std::max(1.0, b_scale)) {
                // Invariant subspace: continue with a fresh random direction.
                Eigen::VectorXd f(dim);
                for (Eigen::Index i = 0; i < dim; ++i)
                    f[i] = rng.next_symmetric();
                f -= V.leftCols(jj + 1) * (V.leftCols(jj + 1).transpose() * f);
                f -= V.leftCols(jj + 1) * (V.leftCols(jj + 1).transpose() * f);
                const double fn = f.norm();
                if (fn < 1e-10) {
                    // Whole space spanned (small problems): Ritz-rotate and
                    // return everything we have.
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_all(
                        H.topLeftCorner(jj + 1, jj + 1));
                    return V.leftCols(jj + 1) * es_all.eigenvectors();
                }
                V.col(jj + 1) = f / fn;
                H(jj + 1, jj) = 0.0;
                H(jj, jj + 1) = 0.0;
            } else {
                V.col(jj + 1) = w / beta;
                H(jj + 1, jj) = beta;
                H(jj, jj + 1) = beta;
            }
        }

        const Eigen::Index mm = static_cast<Eigen::Index>(m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            H.topLeftCorner(mm, mm));
        const Eigen::VectorXd theta = es.eigenvalues(); // ascending
        const Eigen::MatrixXd S = es.eigenvectors();
        b_scale = std::max(b_scale, std::abs(theta[mm - 1]));

        const double beta_m = H(mm, mm - 1);
        double worst = 0.0;
        for (std::size_t i = 0; i < std::min(want, m); ++i)
            worst = std::max(
                worst, std::abs(beta_m * S(mm - 1, static_cast<Eigen::Index>(i))));
        residual_history.push_back(worst);

        if (worst <= rel_tol * std::max(1.0, b_scale)) {
            const Eigen::Index nk =
                static_cast<Eigen::Index>(std::min(keep, m));
            return V.leftCols(mm) * S.leftCols(nk);
        }
        if (matvecs >= max_matvecs)
            throw eigensolver_error(
                "Lanczos did not converge within the matvec budget (" +
                    std::to_string(matvecs) + " products)",
                residual_history);

        // Thick restart: keep the lowest Ritz vectors plus the residual
        // direction; the projected matrix becomes an arrowhead.
        const Eigen::Index nk = static_cast<Eigen::Index>(keep);
        Eigen::MatrixXd U = V.leftCols(mm) * S.leftCols(nk);
        Eigen::VectorXd last = V.col(mm);
        V.leftCols(nk) = U;
        V.col(nk) = last;
        H.setZero();
        for (Eigen::Index i = 0; i < nk; ++i) {
            H(i, i) = theta[i];
            const double c = beta_m * S(mm - 1, i);
            H(nk, i) = c;
            H(i, nk) = c;
        }
        active = keep;
    }
}

// In-place modified Gram-Schmidt; drops near-dependent columns. Returns the
// retained column count.
inline Eigen::Index orthonormalize_columns(Eigen::MatrixXd& S) {
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < S.cols(); ++c) {
        Eigen::VectorXd v = S.col(c);
        const double orig = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < r; ++i)
                v -= S.col(i).dot(v) * S.col(i);
        const double vn = v.norm();
        if (vn > 1e-10 * std::max(1.0, orig)) {
            S.col(r) = v / vn;
            ++r;
        }
    }
    return r;
}

} // namespace detail

// k eigenvalues of the action operator nearest zero (one per complex pair),
// reported ascending; eigenvectors are normalized under the discrete scalar
// product (lattice sum times the dq^D measure).
inline SpectrumResult lowest_eigenvalues(const ActionOperator& op, std::size_t k,
                                         double tol = 1e-9,
                                         std::size_t max_matvecs = 300000) {
    const Eigen::Index dim = static_cast<Eigen::Index>(op.matrix_dim());
    if (k < 1) throw error("eigensolver: k must be >= 1");
    if (static_cast<Eigen::Index>(4 * k) > dim)
        throw error("eigensolver: k must be well below the operator dimension");

    std::size_t matvecs = 0;
    std::vector<double> history;

    auto apply_M = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y;
        op.apply(x, y);
        ++matvecs;
        return y;
    };
    auto apply_B = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y;
        op.apply(x, y);
        Eigen::VectorXd z;
        op.apply(y, z);
        matvecs += 2;
        return z;
    };

    // Operator norm estimate by a short power iteration on M^2.
    double norm_est = 0.0;
    {
        SplitMix64 rng(0xc0ffee1234567ULL);
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.next_symmetric();
        v.normalize();
        for (int it = 0; it < 12; ++it) {
            Eigen::VectorXd w = apply_B(v);
            const double wn = w.norm();
            if (wn == 0.0) break;
            norm_est = std::sqrt(wn);
            v = w / wn;
        }
        norm_est = std::max(norm_est, 1e-300);
    }

    // Each complex eigenvalue appears twice in the doubled operator and +/-
    // magnitudes fold together, so request a buffered count.
    const std::size_t want = std::min<std::size_t>(
        static_cast<std::size_t>(dim), 2 * k + 6);
    Eigen::MatrixXd basis = detail::folded_lanczos_basis(
        apply_B, dim, want, 1e-13, max_matvecs, matvecs, history);

    // Rayleigh-Ritz of M on span{V, JV, MV} of the lowest folded vectors.
    const Eigen::Index nb =
        std::min<Eigen::Index>(basis.cols(), static_cast<Eigen::Index>(want));
    Eigen::MatrixXd S(dim, 3 * nb);
    for (Eigen::Index c = 0; c < nb; ++c) {
        S.col(3 * c) = basis.col(c);
        S.col(3 * c + 1) = ActionOperator::partner(basis.col(c));
        S.col(3 * c + 2) = apply_M(basis.col(c));
        const double n2 = S.col(3 * c + 2).norm();
        if (n2 > 0) S.col(3 * c + 2) /= n2;
    }
    const Eigen::Index rank = detail::orthonormalize_columns(S);
    const auto Q = S.leftCols(rank);

    Eigen::MatrixXd MQ(dim, rank);
    for (Eigen::Index c = 0; c < rank; ++c) MQ.col(c) = apply_M(Q.col(c));
    Eigen::MatrixXd Hs = Q.transpose() * MQ;
    Hs = 0.5 * (Hs + Hs.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
    const Eigen::VectorXd theta = es.eigenvalues();
    const Eigen::MatrixXd Y = es.eigenvectors();

    std::vector<std::size_t> order(static_cast<std::size_t>(rank));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = std::abs(theta[static_cast<Eigen::Index>(a)]);
        const double xb = std::abs(theta[static_cast<Eigen::Index>(b)]);
        if (xa != xb) return xa < xb;
        return a < b;
    });

    struct Pair {
        double value;
        Eigen::VectorXd vec_unit;
        double residual;
    };
    std::vector<Pair> accepted;
    for (std::size_t oi = 0; oi < order.size() && accepted.size() < k; ++oi) {
        const Eigen::Index i = static_cast<Eigen::Index>(order[oi]);
        Eigen::VectorXd v = Q * Y.col(i);
        const double vn = v.norm();
        if (vn < 1e-12) continue;
        v /= vn;
        const double lambda = theta[i];
        const Eigen::VectorXd Mv = apply_M(v);
        const double res = (Mv - lambda * v).norm();
        if (res > tol * norm_est) continue; // unconverged candidate
        bool duplicate = false;
        for (const auto& acc : accepted) {
            if (std::abs(acc.value - lambda) >
                1e-7 * std::max(1.0, std::abs(lambda)))
                continue;
            const Eigen::VectorXd p = ActionOperator::partner(acc.vec_unit);
            const double c1 = acc.vec_unit.dot(v);
            const double c2 = p.dot(v);
            if (c1 * c1 + c2 * c2 > 0.5) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        accepted.push_back({lambda, std::move(v), res});
    }

    if (accepted.size() < k)
        throw eigensolver_error(
            "eigensolver accepted only " + std::to_string(accepted.size()) +
                " of " + std::to_string(k) +
                " requested pairs at relative tolerance " + std::to_string(tol),
            history);

    std::sort(accepted.begin(), accepted.end(),
              [](const Pair& a, const Pair& b) { return a.value < b.value; });

    SpectrumResult out;
    out.matvecs = matvecs;
    out.operator_norm_estimate = norm_est;
    const double weight_half = std::sqrt(op.measure_weight());
    for (auto& pr : accepted) {
        out.eigenvalues.push_back(pr.value);
        out.residual_norms.push_back(pr.residual);
        Eigen::VectorXd v = pr.vec_unit / weight_half;
        out.normalization.push_back(v.norm() * weight_half);
        out.eigenvectors.push_back(std::move(v));
    }
    return out;
}

// Complex-aware overlap of two doubled vectors under the lattice measure:
// |<u, v>| with u, v interpreted as u_re + i u_im, v_re + i v_im.
inline double pair_overlap(const ActionOperator& op, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) {
    const Eigen::Index n = u.size() / 2;
    const double re = u.head(n).dot(v.head(n)) + u.tail(n).dot(v.tail(n));
    const double im = u.head(n).dot(v.tail(n)) - u.tail(n).dot(v.head(n));
    return std::sqrt(re * re + im * im) * op.measure_weight();
}

} // namespace fokker
