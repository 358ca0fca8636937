#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

// Small special-function layer.  Everything downstream (densities, error
// probabilities, certificates) funnels its erf usage through erf_eval so the
// whole library has a single, swappable evaluation point.

namespace wva {

// Error function.  Contract: |erf_eval(t) - erf(t)| <= 1e-14 for |t| <= 6,
// odd in t, and clamped to +-1 far in the tails.  Backed by the C library
// implementation, which meets this comfortably; the test suite re-verifies
// the contract against an independent series / continued-fraction evaluator.
inline double erf_eval(double t) { return std::erf(t); }

// Complementary error function, used where 1 - erf would cancel.
inline double erfc_eval(double t) { return std::erfc(t); }

// Inverse of erf_eval on (-1, 1).  Bisection to a tight bracket, then a few
// Newton steps where the derivative is representable.  Round-trip contract:
// |erf_eval(erf_inv(y)) - y| <= 1e-12.
inline double erf_inv(double y) {
    if (!(y > -1.0 && y < 1.0))
        throw std::domain_error("erf_inv: argument must lie in (-1, 1)");
    if (y == 0.0) return 0.0;
    const double a = std::abs(y);

    double lo = 0.0, hi = 1.0;
    while (erf_eval(hi) < a) {
        lo = hi;
        hi *= 2.0;
        if (hi > 64.0) break;  // erf(64) rounds to 1; cannot happen for a < 1
    }
    for (int k = 0; k < 120; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (erf_eval(mid) < a ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);

    // Newton polish: t -= (erf(t) - a) * sqrt(pi)/2 * exp(t^2).
    // Safe for t < 6 (exp(36) ~ 4e15 is finite and the correction is tiny).
    if (t < 6.0) {
        const double half_sqrt_pi = 0.5 / std::numbers::inv_sqrtpi_v<double>;
        for (int k = 0; k < 3; ++k)
            t -= (erf_eval(t) - a) * half_sqrt_pi * std::exp(t * t);
    }
    return y > 0.0 ? t : -t;
}

// Gaussian pdf with the given mean and variance.
inline double gauss_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-d * d / (2.0 * var)) /
           std::sqrt(2.0 * std::numbers::pi_v<double> * var);
}

// Gaussian cdf via erfc for a stable left tail.
inline double gauss_cdf(double x, double mean, double var) {
    const double z = (x - mean) / std::sqrt(2.0 * var);
    return 0.5 * erfc_eval(-z);
}

}  // namespace wva
