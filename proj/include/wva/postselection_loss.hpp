#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wva/errors.hpp"
#include "wva/hypothesis_testing.hpp"
#include "wva/rng.hpp"
#include "wva/special.hpp"

// Accounting for postselection loss: the revised decision rule keeps failed
// postselections and applies a second threshold c_fbar to them.  Closed-form
// error probabilities, the level-alpha Lagrangian, its stationarity system,
// and a damped-Newton solver that recovers the stationary family
// c_f = c_fbar (fixed by alpha), p1 = p2.

namespace wva {

// Revised rule: threshold c_f on successful postselections, c_fbar on failed
// ones.  c_fbar = +inf recovers "discard failures as accept-null".
struct LossDecisionRule {
    double c_f;
    double c_fbar;
    double r = 1.0;

    LossDecisionRule(double c_f_, double c_fbar_, double r_ = 1.0)
        : c_f(c_f_), c_fbar(c_fbar_), r(r_) {
        if (!(c_f > 0.0) || !(c_fbar > 0.0) || std::isnan(c_fbar))
            throw std::invalid_argument(
                "LossDecisionRule: thresholds must be > 0 (c_fbar may be "
                "+inf)");
        if (!(r >= 0.0 && r <= 1.0))
            throw std::invalid_argument(
                "LossDecisionRule: r must lie in [0, 1]");
    }
};

inline Decision decide(bool postselect_success, double x, double sigma,
                       const LossDecisionRule& rule, double coin) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("decide: sigma must be > 0");
    const double c = postselect_success ? rule.c_f : rule.c_fbar;
    if (std::isinf(c)) return Decision::accept_null;  // |x| is always finite
    const double t = std::abs(x) / sigma;
    if (t > c) return Decision::reject_null;
    if (t < c) return Decision::accept_null;
    return coin < rule.r ? Decision::accept_null : Decision::reject_null;
}

// Variables of the constrained optimum: branch probabilities under the null
// p1 = |<f|i>|^2, p2 = |<f|A|i>|^2, the two thresholds, the multiplier, and
// the level of the constraint Pr[E1] = alpha.
struct LossTestPoint {
    double p1;
    double p2;
    double c_f;
    double c_fbar;
    double lambda;
    double alpha;
};

namespace loss_detail {

inline void validate(const LossTestPoint& pt) {
    if (!(pt.p1 > 0.0 && pt.p1 < 1.0 && pt.p2 > 0.0 && pt.p2 < 1.0))
        throw std::invalid_argument(
            "LossTestPoint: p1, p2 must lie in (0, 1)");
    if (!(pt.c_f > 0.0) || !(pt.c_fbar > 0.0) || std::isnan(pt.c_f) ||
        std::isnan(pt.c_fbar))
        throw std::invalid_argument(
            "LossTestPoint: thresholds must be > 0 (c_fbar may be +inf)");
}

// erf(c / sqrt(2)) with an explicit +inf path.
inline double erf_half(double c) {
    if (std::isinf(c)) return 1.0;
    return erf_eval(c / std::sqrt(2.0));
}

// Mass of a unit Gaussian shifted by gamma inside the window |t| < c:
//   [erf((c-gamma)/sqrt2) + erf((c+gamma)/sqrt2)] / 2.
inline double window_mass(double c, double gamma) {
    if (std::isinf(c)) return 1.0;
    const double rt2 = std::sqrt(2.0);
    return 0.5 * (erf_eval((c - gamma) / rt2) + erf_eval((c + gamma) / rt2));
}

// d/dc erf(c/sqrt2) = sqrt(2/pi) e^{-c^2/2}; zero at the +inf sentinel.
inline double erf_half_deriv(double c) {
    if (std::isinf(c)) return 0.0;
    return std::sqrt(2.0 / std::numbers::pi_v<double>) *
           std::exp(-0.5 * c * c);
}

}  // namespace loss_detail

// Type-1 error of the revised rule.  Under the null both branches carry the
// bare N(0, sigma^2) probe; the failure branch has weight |<fbar|i>|^2 = 1-p1:
//   1 - ( erf[c_f/sqrt2] p1 + erf[c_fbar/sqrt2] (1-p1) ).
inline double loss_type1_error(const LossTestPoint& pt, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("loss_type1_error: sigma must be > 0");
    loss_detail::validate(pt);
    return 1.0 - (loss_detail::erf_half(pt.c_f) * pt.p1 +
                  loss_detail::erf_half(pt.c_fbar) * (1.0 - pt.p1));
}

// Type-2 error at coupling g.  The success branch carries weights
// (p1+p2)/2 on the shifted pair and (p1-p2)/2 on the interference term; the
// failure branch carries the complements (2-p1-p2)/2 and -(p1-p2)/2:
//   1/2 [ (p1+p2) W(c_f) + (2-p1-p2) W(c_fbar)
//         + (p1-p2) E (erf[c_f/sqrt2] - erf[c_fbar/sqrt2]) ],
// W(c) the shifted-Gaussian window mass and E = e^{-g^2/2 sigma^2}.
inline double loss_type2_error(const LossTestPoint& pt, double g,
                               double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("loss_type2_error: sigma must be > 0");
    loss_detail::validate(pt);
    const double gamma = g / sigma;
    const double e = std::exp(-0.5 * gamma * gamma);
    const double w_f = loss_detail::window_mass(pt.c_f, gamma);
    const double w_fbar = loss_detail::window_mass(pt.c_fbar, gamma);
    return 0.5 * ((pt.p1 + pt.p2) * w_f + (2.0 - pt.p1 - pt.p2) * w_fbar +
                  (pt.p1 - pt.p2) * e *
                      (loss_detail::erf_half(pt.c_f) -
                       loss_detail::erf_half(pt.c_fbar)));
}

// L = Pr[E2] + lambda (Pr[E1] - alpha).
inline double lagrangian(const LossTestPoint& pt, double g, double sigma) {
    return loss_type2_error(pt, g, sigma) +
           pt.lambda * (loss_type1_error(pt, sigma) - pt.alpha);
}

struct StationarityResiduals {
    double d_lambda;  // dL/dlambda: the constraint Pr[E1] - alpha
    double d_p1;
    double d_p2;
    double d_c_f;
    double d_c_fbar;
};

// The five partial derivatives of the Lagrangian, in closed form.  Notation:
// er(c) = erf(c/sqrt2), N(c) = sqrt(2/pi) e^{-c^2/2}, W the window mass,
// E = e^{-gamma^2/2}, gamma = g/sigma.
inline StationarityResiduals stationarity_residuals(const LossTestPoint& pt,
                                                    double g, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument(
            "stationarity_residuals: sigma must be > 0");
    loss_detail::validate(pt);
    const double gamma = g / sigma;
    const double e = std::exp(-0.5 * gamma * gamma);
    const double er_f = loss_detail::erf_half(pt.c_f);
    const double er_fbar = loss_detail::erf_half(pt.c_fbar);
    const double w_f = loss_detail::window_mass(pt.c_f, gamma);
    const double w_fbar = loss_detail::window_mass(pt.c_fbar, gamma);
    const double n_f = loss_detail::erf_half_deriv(pt.c_f);
    const double n_fbar = loss_detail::erf_half_deriv(pt.c_fbar);

    StationarityResiduals r;
    r.d_lambda = 1.0 - (er_f * pt.p1 + er_fbar * (1.0 - pt.p1)) - pt.alpha;
    r.d_p1 = 0.5 * (w_f - w_fbar + e * (er_f - er_fbar)) +
             pt.lambda * (er_fbar - er_f);
    r.d_p2 = 0.5 * (w_f - w_fbar - e * (er_f - er_fbar));
    // dW/dc = N(c) E cosh(c gamma); the interference term adds N(c) E.
    r.d_c_f = n_f * (0.5 * e * ((pt.p1 + pt.p2) * std::cosh(pt.c_f * gamma) +
                                (pt.p1 - pt.p2)) -
                     pt.lambda * pt.p1);
    r.d_c_fbar =
        n_fbar *
        (0.5 * e * ((2.0 - pt.p1 - pt.p2) * std::cosh(pt.c_fbar * gamma) -
                    (pt.p1 - pt.p2)) -
         pt.lambda * (1.0 - pt.p1));
    return r;
}

// Solver output: the symmetric representative of the stationary family plus
// the evidence gathered about it.
struct StationarySolution {
    LossTestPoint point;
    StationarityResiduals residuals;
    double max_residual = 0.0;
    // The branch lambda = e^{-g^2/2 sigma^2} of the factored p1/p2 equation:
    // it forces both thresholds to 0, hence Pr[E1] = 1, inconsistent with
    // any alpha < 1.
    bool lambda_branch_rejected = false;
    std::string lambda_branch_note;
    // Pr[E2] compared at random constraint-preserving neighbors.  The
    // stationarity system does not certify a minimum; the family direction
    // is exactly flat, and mixed (p, c_f) perturbations typically expose a
    // saddle, so the label reports what the probe actually found:
    // "saddle", "local_min (...)", "local_max", or "flat".
    std::string classification;
    int starts_used = 0;
};

namespace loss_detail {

using Vec5 = std::array<double, 5>;

inline Vec5 residual_vector(const Vec5& th, double g, double sigma,
                            double alpha) {
    const LossTestPoint pt{th[0], th[1], th[2], th[3], th[4], alpha};
    const auto r = stationarity_residuals(pt, g, sigma);
    return {r.d_lambda, r.d_p1, r.d_p2, r.d_c_f, r.d_c_fbar};
}

inline double max_abs(const Vec5& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_sq(const Vec5& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline Vec5 clamp_box(Vec5 th) {
    th[0] = std::clamp(th[0], 1e-4, 1.0 - 1e-4);
    th[1] = std::clamp(th[1], 1e-4, 1.0 - 1e-4);
    th[2] = std::clamp(th[2], 1e-3, 30.0);
    th[3] = std::clamp(th[3], 1e-3, 30.0);
    th[4] = std::clamp(th[4], -50.0, 50.0);
    return th;
}

// Solve (A + mu I) x = b for the 5x5 normal equations, partial pivoting.
inline bool solve_5x5(std::array<std::array<double, 5>, 5> a, Vec5 b,
                      Vec5& x) {
    for (int col = 0; col < 5; ++col) {
        int piv = col;
        for (int row = col + 1; row < 5; ++row)
            if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int row = col + 1; row < 5; ++row) {
            const double f = a[row][col] / a[col][col];
            for (int k = col; k < 5; ++k) a[row][k] -= f * a[col][k];
            b[row] -= f * b[col];
        }
    }
    for (int row = 4; row >= 0; --row) {
        double s = b[row];
        for (int k = row + 1; k < 5; ++k) s -= a[row][k] * x[k];
        x[row] = s / a[row][row];
    }
    return true;
}

}  // namespace loss_detail

// Find a stationary point of the Lagrangian at level alpha by damped
// (Levenberg-Marquardt regularized) Newton iteration with random
// multi-starts.  The Jacobian is rank-deficient on the solution family
// (p1 = p2 is a flat direction), which the regularization absorbs.
inline StationarySolution solve_stationary(double g, double sigma,
                                           double alpha) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("solve_stationary: sigma must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument(
            "solve_stationary: alpha must lie in (0, 1)");
    if (g == 0.0)
        throw std::invalid_argument(
            "solve_stationary: requires a nonzero alternative coupling");

    using loss_detail::Vec5;
    const double gamma = g / sigma;
    const double e = std::exp(-0.5 * gamma * gamma);
    SplitMix64 rng(0x5bd1e995u);  // fixed: the solver is deterministic

    constexpr int kStarts = 32;
    constexpr int kMaxIter = 200;
    constexpr double kTarget = 1e-10;

    StationarySolution sol;
    bool found = false;

    for (int start = 0; start < kStarts && !found; ++start) {
        Vec5 th;
        th[0] = 0.05 + 0.90 * rng.uniform();       // p1
        th[1] = 0.05 + 0.90 * rng.uniform();       // p2
        th[2] = 0.1 + 3.9 * rng.uniform();         // c_f
        th[3] = 0.1 + 3.9 * rng.uniform();         // c_fbar
        th[4] = e * std::cosh(th[2] * gamma);      // lambda: branch-consistent guess
        th = loss_detail::clamp_box(th);

        Vec5 r = loss_detail::residual_vector(th, g, sigma, alpha);
        double mu = 1e-6;

        for (int iter = 0; iter < kMaxIter; ++iter) {
            if (loss_detail::max_abs(r) < kTarget) break;

            // Central finite-difference Jacobian, column by column.
            std::array<Vec5, 5> jac_cols;
            for (int j = 0; j < 5; ++j) {
                const double h = 1e-7 * std::max(1.0, std::abs(th[j]));
                Vec5 tp = th, tm = th;
                tp[j] += h;
                tm[j] -= h;
                const Vec5 rp =
                    loss_detail::residual_vector(tp, g, sigma, alpha);
                const Vec5 rm =
                    loss_detail::residual_vector(tm, g, sigma, alpha);
                for (int i = 0; i < 5; ++i)
                    jac_cols[j][i] = (rp[i] - rm[i]) / (2.0 * h);
            }

            bool stepped = false;
            for (int attempt = 0; attempt < 10 && !stepped; ++attempt) {
                // Normal equations (J^T J + mu I) dth = -J^T r.
                std::array<std::array<double, 5>, 5> a{};
                Vec5 b{};
                for (int i = 0; i < 5; ++i) {
                    for (int j = 0; j < 5; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < 5; ++k)
                            s += jac_cols[i][k] * jac_cols[j][k];
                        a[i][j] = s;
                    }
                    a[i][i] += mu;
                    double s = 0.0;
                    for (int k = 0; k < 5; ++k) s += jac_cols[i][k] * r[k];
                    b[i] = -s;
                }
                Vec5 dth{};
                if (!loss_detail::solve_5x5(a, b, dth)) {
                    mu *= 10.0;
                    continue;
                }
                Vec5 cand = th;
                for (int j = 0; j < 5; ++j) cand[j] += dth[j];
                cand = loss_detail::clamp_box(cand);
                const Vec5 rc =
                    loss_detail::residual_vector(cand, g, sigma, alpha);
                if (loss_detail::norm_sq(rc) < loss_detail::norm_sq(r)) {
                    th = cand;
                    r = rc;
                    mu = std::max(mu / 3.0, 1e-12);
                    stepped = true;
                } else {
                    mu *= 10.0;
                }
            }
            if (!stepped) break;  // stuck; try the next start
        }

        if (loss_detail::max_abs(r) < kTarget) {
            sol.point = {th[0], th[1], th[2], th[3], th[4], alpha};
            sol.starts_used = start + 1;
            found = true;
        }
    }

    if (!found)
        throw NoConvergence(
            "solve_stationary: no start reached the residual target");

    // Evidence about the returned point.
    const auto res = stationarity_residuals(sol.point, g, sigma);
    sol.residuals = res;
    sol.max_residual = loss_detail::max_abs(
        {res.d_lambda, res.d_p1, res.d_p2, res.d_c_f, res.d_c_fbar});

    // The factored p1/p2 equation admits lambda = E with c_f != c_fbar; the
    // threshold equations then force cosh(c gamma) = 1, i.e. both
    // thresholds at 0, so Pr[E1] = 1 and the constraint needs alpha = 1.
    sol.lambda_branch_rejected = alpha < 1.0;
    sol.lambda_branch_note =
        "lambda = e^{-g^2/2 sigma^2} forces c_f = c_fbar = 0, hence "
        "Pr[E1] = 1: inconsistent with alpha < 1";

    // Classify by Pr[E2] at random constraint-preserving neighbors: perturb
    // (p1, p2, c_f), restore the constraint through c_fbar.
    {
        const double base = loss_type2_error(sol.point, g, sigma);
        double dmin = 0.0, dmax = 0.0;
        for (int k = 0; k < 64; ++k) {
            LossTestPoint nb = sol.point;
            nb.p1 = std::clamp(nb.p1 + 2e-3 * (rng.uniform() - 0.5), 1e-3,
                               1.0 - 1e-3);
            nb.p2 = std::clamp(nb.p2 + 2e-3 * (rng.uniform() - 0.5), 1e-3,
                               1.0 - 1e-3);
            nb.c_f = std::max(nb.c_f + 2e-3 * (rng.uniform() - 0.5), 1e-3);
            const double target =
                (1.0 - alpha - nb.p1 * loss_detail::erf_half(nb.c_f)) /
                (1.0 - nb.p1);
            if (!(target > 0.0 && target < 1.0)) continue;
            nb.c_fbar = std::sqrt(2.0) * erf_inv(target);
            const double delta = loss_type2_error(nb, g, sigma) - base;
            dmin = std::min(dmin, delta);
            dmax = std::max(dmax, delta);
        }
        if (dmin >= -1e-10 && dmax > 1e-12)
            sol.classification = "local_min (flat along the p1 = p2 family)";
        else if (dmin >= -1e-10)
            sol.classification = "flat";
        else if (dmax > 1e-10)
            sol.classification = "saddle";
        else
            sol.classification = "local_max";
    }

    return sol;
}

}  // namespace wva
