#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "wva/errors.hpp"
#include "wva/quadrature.hpp"
#include "wva/special.hpp"
#include "wva/two_state.hpp"

// Exact probe (pointer) distributions after the von Neumann interaction.
// Every distribution here is a three-component Gaussian mixture on a common
// variance: two branches shifted by +-g plus an interference term at the
// origin whose weight carries the overlap factor e^{-g^2/2 sigma^2}.
// Additive detector noise of width s enters only through the effective
// variance sigma^2 + s^2; the interference attenuation keeps sigma alone.

namespace wva {

// Additive Gaussian readout noise, standard deviation s >= 0.
struct NoiseModel {
    double s = 0.0;

    NoiseModel() = default;
    explicit NoiseModel(double s_) : s(s_) {
        if (!(s >= 0.0))
            throw std::invalid_argument("NoiseModel: s must be >= 0");
    }
    static NoiseModel none() { return NoiseModel(); }
};

enum class Mode { postselected, no_postselection };

struct DensityQuery {
    double x;  // probe position (the noise-summed readout when s > 0)
    MeasurementSetup setup;
    NoiseModel noise;
    Mode mode = Mode::postselected;
};

namespace detail {

// Weighted three-Gaussian mixture  (w+ G(x-g) + w- G(x+g) + w0 G(x)) / total
// on common variance var = sigma^2 + s^2.  w0 may be negative (interference);
// the mixture as a whole is a squared amplitude and stays nonnegative.
struct GaussianMix {
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w_zero = 0.0;
    double g = 0.0;
    double var = 1.0;
    double total = 1.0;  // w_plus + w_minus + w_zero

    double density(double x) const {
        return (w_plus * gauss_pdf(x, g, var) +
                w_minus * gauss_pdf(x, -g, var) +
                w_zero * gauss_pdf(x, 0.0, var)) /
               total;
    }

    double cdf(double x) const {
        const double c = (w_plus * gauss_cdf(x, g, var) +
                          w_minus * gauss_cdf(x, -g, var) +
                          w_zero * gauss_cdf(x, 0.0, var)) /
                         total;
        return std::clamp(c, 0.0, 1.0);
    }
};

// Mixture for a selected branch, from the branch amplitudes
// a = <f|+><+|i>, b = <f|-><-|i>.  total is the branch probability.
inline GaussianMix mix_from_amplitudes(Complex a, Complex b, double g,
                                       double sigma, double s) {
    const double e = std::exp(-g * g / (2.0 * sigma * sigma));
    GaussianMix m;
    m.w_plus = std::norm(a);
    m.w_minus = std::norm(b);
    m.w_zero = 2.0 * std::real(a * std::conj(b)) * e;
    m.g = g;
    m.var = sigma * sigma + s * s;
    m.total = m.w_plus + m.w_minus + m.w_zero;
    return m;
}

inline GaussianMix mix_postselected(const MeasurementSetup& setup,
                                    const NoiseModel& noise) {
    if (!setup.f_state)
        throw ModeMismatch("postselected density: setup has no final state");
    const TwoStateVector& f = *setup.f_state;
    const Complex a = std::conj(f.plus_amp) * setup.i_state.plus_amp;
    const Complex b = std::conj(f.minus_amp) * setup.i_state.minus_amp;
    return mix_from_amplitudes(a, b, setup.g, setup.sigma, noise.s);
}

// Branch in which postselection fails: project onto the state orthogonal to
// f.  total may vanish (preselection parallel to f); callers must check.
inline GaussianMix mix_failure(const MeasurementSetup& setup,
                               const NoiseModel& noise) {
    if (!setup.f_state)
        throw ModeMismatch("failure-branch density: setup has no final state");
    const TwoStateVector fbar = orthogonal(*setup.f_state);
    const Complex a = std::conj(fbar.plus_amp) * setup.i_state.plus_amp;
    const Complex b = std::conj(fbar.minus_amp) * setup.i_state.minus_amp;
    return mix_from_amplitudes(a, b, setup.g, setup.sigma, noise.s);
}

// No postselection: incoherent sum of the two branches, no cross term.
inline GaussianMix mix_nps(const MeasurementSetup& setup,
                           const NoiseModel& noise) {
    GaussianMix m;
    m.w_plus = std::norm(setup.i_state.plus_amp);
    m.w_minus = std::norm(setup.i_state.minus_amp);
    m.w_zero = 0.0;
    m.g = setup.g;
    m.var = setup.sigma * setup.sigma + noise.s * noise.s;
    m.total = m.w_plus + m.w_minus;
    return m;
}

inline GaussianMix mix_for(const MeasurementSetup& setup,
                           const NoiseModel& noise, Mode mode) {
    return mode == Mode::postselected ? mix_postselected(setup, noise)
                                      : mix_nps(setup, noise);
}

}  // namespace detail

// Probe density at query.x for the requested mode.
inline double density(const DensityQuery& q) {
    return detail::mix_for(q.setup, q.noise, q.mode).density(q.x);
}

// P[x <= upper] under the same distribution.
inline double cdf(const DensityQuery& q, double upper) {
    return detail::mix_for(q.setup, q.noise, q.mode).cdf(upper);
}

// Verify the closed-form noisy density against the defining convolution
//   f_s(z) = (f_0 * N(0, s^2))(z)
// by adaptive quadrature on each grid point; returns the largest absolute
// deviation.  Checks the postselected density when the setup has a final
// state, the unconditioned one otherwise.  Requires s > 0 (at s = 0 the
// kernel degenerates to a delta and there is nothing to convolve).
inline double convolution_check(const MeasurementSetup& setup,
                                const NoiseModel& noise,
                                std::span<const double> z_grid) {
    if (!(noise.s > 0.0))
        throw std::invalid_argument("convolution_check: requires s > 0");
    const Mode mode =
        setup.f_state ? Mode::postselected : Mode::no_postselection;
    const auto noiseless = detail::mix_for(setup, NoiseModel::none(), mode);
    const auto noisy = detail::mix_for(setup, noise, mode);
    const double s2 = noise.s * noise.s;
    const double reach = std::abs(setup.g) + 12.0 * setup.sigma;

    double worst = 0.0;
    for (double z : z_grid) {
        const double lo = std::min(-reach, z - 12.0 * noise.s);
        const double hi = std::max(reach, z + 12.0 * noise.s);
        const double conv = integrate(
            [&](double x) {
                return noiseless.density(x) * gauss_pdf(z - x, 0.0, s2);
            },
            lo, hi, 1e-13, 1e-12);
        worst = std::max(worst, std::abs(noisy.density(z) - conv));
    }
    return worst;
}

}  // namespace wva
