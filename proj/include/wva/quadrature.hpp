#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "wva/errors.hpp"

// Adaptive Gauss-Kronrod quadrature on a finite interval.  A 7-point Gauss
// rule is embedded in the 15-point Kronrod extension; the difference of the
// two estimates drives bisection of the worst panels until the accumulated
// error estimate meets the requested tolerance.

namespace wva {

namespace quad_detail {

// Kronrod-15 abscissae (positive half) and weights, with the embedded
// Gauss-7 weights on the shared nodes.
inline constexpr double xgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double wgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double wg[4] = {
    0.1294849661688697, 0.2797053914892767,
    0.3818300505051189, 0.4179591836734694};

struct PanelResult {
    double kronrod;
    double error;  // |kronrod - gauss|
};

template <class F>
PanelResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double k = 0.0, g = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double fa = f(c - h * xgk[i]);
        const double fb = f(c + h * xgk[i]);
        const double pair = (i == 7) ? fa : fa + fb;  // center node counted once
        k += wgk[i] * pair;
        if (i % 2 == 1) g += wg[i / 2] * pair;
    }
    return {k * h, std::abs((k - g) * h)};
}

}  // namespace quad_detail

// Integrate f over [a, b].  Throws QuadratureFailure if the panel budget is
// exhausted before the error estimate drops below abs_tol + rel_tol*|I|.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                 double rel_tol = 1e-10, std::size_t max_panels = 20000) {
    if (a == b) return 0.0;

    struct Panel {
        double a, b, value, error;
    };
    std::vector<Panel> panels;
    auto first = quad_detail::gk15(f, a, b);
    panels.push_back({a, b, first.kronrod, first.error});

    for (std::size_t iter = 0; iter < max_panels; ++iter) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        if (err <= abs_tol + rel_tol * std::abs(total)) return total;

        const Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (mid == p.a || mid == p.b)
            throw QuadratureFailure(
                "integrate: panel collapsed below machine resolution");
        auto left = quad_detail::gk15(f, p.a, mid);
        auto right = quad_detail::gk15(f, mid, p.b);
        panels[worst] = {p.a, mid, left.kronrod, left.error};
        panels.push_back({mid, p.b, right.kronrod, right.error});
    }
    throw QuadratureFailure("integrate: panel budget exhausted");
}

}  // namespace wva
