#pragma once

#include <cmath>
#include <string>

#include "fokker/errors.hpp"
#include "fokker/numeric.hpp"

namespace fokker {

inline constexpr double two_pi = 6.283185307179586476925286766559;

inline void require_sigma(double sigma) {
    if (!(sigma > 0.0))
        throw invalid_regularization_error(
            "invalid regularization: sigma = " + std::to_string(sigma) +
            " must be > 0");
}

// Gaussian regularization of the lightcone delta: a normalized Gaussian of
// variance sigma in the squared-interval variable u = s^2. Strictly positive
// and even in u; integrates to 1 over the real line.
inline double regularized_delta(double u, double sigma) {
    require_sigma(sigma);
    return std::exp(-u * u / (2.0 * sigma)) / std::sqrt(two_pi * sigma);
}

// d/du of regularized_delta.
inline double regularized_delta_derivative(double u, double sigma) {
    require_sigma(sigma);
    return -(u / sigma) * regularized_delta(u, sigma);
}

// Squared Minkowski interval between (t1, q1) and (t2, q2), metric (+,-,-,-).
inline double interval_squared(double t1, const Vec3& q1, double t2,
                               const Vec3& q2) {
    const double dt = t1 - t2;
    return dt * dt - norm2(q1 - q2);
}

} // namespace fokker
