#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>

#include "wva/errors.hpp"

// Two-level system underlying the weak measurement: states live in the
// eigenbasis {|+>, |->} of the measured observable A = diag(+1, -1).

namespace wva {

using Complex = std::complex<double>;

// Normalized two-component state vector.  The constructor rescales to unit
// norm, so the normalization invariant holds for every instance.
struct TwoStateVector {
    Complex plus_amp;
    Complex minus_amp;

    TwoStateVector(Complex plus, Complex minus)
        : plus_amp(plus), minus_amp(minus) {
        const double n = std::sqrt(std::norm(plus_amp) + std::norm(minus_amp));
        if (!(n > 1e-300))
            throw std::invalid_argument(
                "TwoStateVector: amplitudes must not both vanish");
        plus_amp /= n;
        minus_amp /= n;
    }

    static TwoStateVector balanced() { return {1.0, 1.0}; }
    static TwoStateVector plus_state() { return {1.0, 0.0}; }
    static TwoStateVector minus_state() { return {0.0, 1.0}; }
};

// <f|i>
inline Complex overlap(const TwoStateVector& f, const TwoStateVector& i) {
    return std::conj(f.plus_amp) * i.plus_amp +
           std::conj(f.minus_amp) * i.minus_amp;
}

// <f|A|i> with A = diag(+1, -1)
inline Complex observable_overlap(const TwoStateVector& f,
                                  const TwoStateVector& i) {
    return std::conj(f.plus_amp) * i.plus_amp -
           std::conj(f.minus_amp) * i.minus_amp;
}

// State orthogonal to v: <orthogonal(v)|v> = 0.
inline TwoStateVector orthogonal(const TwoStateVector& v) {
    return {-std::conj(v.minus_amp), std::conj(v.plus_amp)};
}

// Weak value A_w = <f|A|i> / <f|i>.  Undefined (throws) when the overlap is
// numerically zero.  Invariant under global phases of either state, since
// numerator and denominator pick up the same factor.
inline Complex weak_value(const TwoStateVector& i, const TwoStateVector& f) {
    const Complex den = overlap(f, i);
    if (std::abs(den) <= 1e-12)
        throw OrthogonalPostselection(
            "weak_value: postselected state orthogonal to preselected state");
    return observable_overlap(f, i) / den;
}

// Pre/postselected von Neumann measurement: coupling g, probe width sigma,
// optional final state.  Derived quantities are fixed at construction.
struct MeasurementSetup {
    TwoStateVector i_state;
    std::optional<TwoStateVector> f_state;
    double g;
    double sigma;
    std::optional<Complex> weak_value;  // present iff f_state is
    std::optional<double> p1;           // |<f|i>|^2, present iff f_state is

    MeasurementSetup(TwoStateVector i, TwoStateVector f, double g_, double s_)
        : i_state(i), f_state(f), g(g_), sigma(s_) {
        check_sigma();
        weak_value = wva::weak_value(i_state, *f_state);
        p1 = std::norm(overlap(*f_state, i_state));
    }

    MeasurementSetup(TwoStateVector i, double g_, double s_)
        : i_state(i), f_state(std::nullopt), g(g_), sigma(s_) {
        check_sigma();
    }

  private:
    void check_sigma() const {
        if (!(sigma > 0.0))
            throw std::invalid_argument("MeasurementSetup: sigma must be > 0");
    }
};

// Build a setup whose weak value equals w, for a given preselection.  Writing
// a = <f|+><+|i> and b = <f|-><-|i>, the weak value is (a-b)/(a+b); the
// choice a = 1+w, b = 1-w realizes any w with <f|i> = 2 != 0.  Requires both
// preselection amplitudes nonzero (an eigenstate pins A_w to +-1).
inline MeasurementSetup setup_with_weak_value(
    Complex w, double g, double sigma,
    const TwoStateVector& i = TwoStateVector::balanced()) {
    if (std::abs(i.plus_amp) <= 1e-12 || std::abs(i.minus_amp) <= 1e-12)
        throw std::invalid_argument(
            "setup_with_weak_value: preselection must not be an eigenstate");
    const Complex f_plus = std::conj((1.0 + w) / i.plus_amp);
    const Complex f_minus = std::conj((1.0 - w) / i.minus_amp);
    return {i, TwoStateVector(f_plus, f_minus), g, sigma};
}

// Probability that postselection succeeds, marginalized over the probe:
//   p1/2 * [(1+|A_w|^2) + (1-|A_w|^2) e^{-g^2/2 sigma^2}].
// Additive probe noise shifts the pointer but not the click statistics, so
// this is noise-independent.
inline double success_probability(const MeasurementSetup& setup) {
    if (!setup.f_state)
        throw ModeMismatch(
            "success_probability: setup has no postselection state");
    const double aw_sq = std::norm(*setup.weak_value);
    const double e = std::exp(-setup.g * setup.g /
                              (2.0 * setup.sigma * setup.sigma));
    return 0.5 * *setup.p1 * ((1.0 + aw_sq) + (1.0 - aw_sq) * e);
}

}  // namespace wva
