#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wva/errors.hpp"
#include "wva/hypothesis_testing.hpp"
#include "wva/monte_carlo.hpp"
#include "wva/postselection_loss.hpp"
#include "wva/probe_distributions.hpp"
#include "wva/two_state.hpp"

// Scenario handling and CSV emitters behind the CLI subcommands.  Everything
// deterministic: fixed grids, fixed row order, numbers at 17 significant
// digits so a CSV round-trips to the exact double.

namespace wva {

struct SweepAxis {
    enum class Kind { g, c, aw, s };
    Kind kind;
    double start;
    double stop;
    int steps;

    double value(int index) const {
        return start + (stop - start) * static_cast<double>(index) /
                           static_cast<double>(steps - 1);
    }
};

struct Scenario {
    TwoStateVector i_state = TwoStateVector::balanced();
    std::optional<TwoStateVector> f_state;  // explicit final state
    Complex weak_value_target{0.0, 5.0};    // used when f_state is absent
    double sigma = 1.0;
    double g = 1.5;
    double s = 0.0;
    std::optional<double> c;  // absent: derived from alpha
    double alpha = 0.05;
    std::size_t samples = 1000000;
    std::uint64_t seed = 12345;
    std::vector<SweepAxis> sweeps;
};

// "axis:start:stop:steps" with axis in {g, c, aw, s}.
inline SweepAxis parse_sweep(const std::string& text) {
    std::istringstream in(text);
    std::string name;
    std::string field;
    SweepAxis axis{};
    if (!std::getline(in, name, ':'))
        throw std::invalid_argument("sweep: missing axis name");
    if (name == "g")
        axis.kind = SweepAxis::Kind::g;
    else if (name == "c")
        axis.kind = SweepAxis::Kind::c;
    else if (name == "aw")
        axis.kind = SweepAxis::Kind::aw;
    else if (name == "s")
        axis.kind = SweepAxis::Kind::s;
    else
        throw std::invalid_argument("sweep: axis must be one of g, c, aw, s");
    try {
        if (!std::getline(in, field, ':')) throw std::invalid_argument("");
        axis.start = std::stod(field);
        if (!std::getline(in, field, ':')) throw std::invalid_argument("");
        axis.stop = std::stod(field);
        if (!std::getline(in, field, ':')) throw std::invalid_argument("");
        axis.steps = std::stoi(field);
    } catch (const std::exception&) {
        throw std::invalid_argument(
            "sweep: expected <axis>:<start>:<stop>:<steps>");
    }
    if (axis.steps < 2)
        throw std::invalid_argument("sweep: steps must be >= 2");
    return axis;
}

// "re+,im+,re-,im-" -> normalized state.
inline TwoStateVector parse_state(const std::string& text) {
    std::istringstream in(text);
    double v[4];
    char sep;
    if (!(in >> v[0] >> sep >> v[1] >> sep >> v[2] >> sep >> v[3]))
        throw std::invalid_argument(
            "state: expected four comma-separated reals re+,im+,re-,im-");
    return TwoStateVector({v[0], v[1]}, {v[2], v[3]});
}

namespace csv {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string quote_if_needed(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

inline void row(std::ostream& os, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << quote_if_needed(fields[i]);
    }
    os << '\n';
}

}  // namespace csv

namespace report_detail {

inline void require_axes(const Scenario& sc, std::size_t max_axes) {
    if (sc.sweeps.size() > max_axes)
        throw std::invalid_argument("too many sweep axes for this command");
    for (const auto& a : sc.sweeps)
        if (a.steps < 2)
            throw std::invalid_argument("sweep steps must be >= 2");
}

// Scalar parameters of one grid point after applying sweep overrides.
struct Point {
    double aw;  // |A_w| magnitude actually in effect
    double g;
    double c;
    double s;
};

inline MeasurementSetup setup_for(const Scenario& sc, double aw, double g) {
    if (sc.f_state) {
        MeasurementSetup setup(sc.i_state, *sc.f_state, g, sc.sigma);
        return setup;
    }
    Complex w = sc.weak_value_target;
    const double mag = std::abs(w);
    if (mag == 0.0)
        w = Complex(0.0, aw);  // pure-imaginary ramp from a zero target
    else
        w *= aw / mag;  // rescale, preserving the phase
    return setup_with_weak_value(w, g, sc.sigma, sc.i_state);
}

inline double base_aw(const Scenario& sc) {
    if (sc.f_state)
        return std::abs(wva::weak_value(sc.i_state, *sc.f_state));
    return std::abs(sc.weak_value_target);
}

inline double resolved_c(const Scenario& sc, double s) {
    if (sc.c) return *sc.c;
    return critical_point_for_alpha(sc.alpha, NoiseModel(s), sc.sigma);
}

inline Point apply_axes(const Scenario& sc, std::span<const double> values) {
    Point p{base_aw(sc), sc.g, 0.0, sc.s};
    std::optional<double> c_override;
    for (std::size_t i = 0; i < sc.sweeps.size(); ++i) {
        switch (sc.sweeps[i].kind) {
            case SweepAxis::Kind::g: p.g = values[i]; break;
            case SweepAxis::Kind::c: c_override = values[i]; break;
            case SweepAxis::Kind::aw:
                if (sc.f_state)
                    throw std::invalid_argument(
                        "cannot sweep aw with an explicit final state");
                p.aw = values[i];
                break;
            case SweepAxis::Kind::s: p.s = values[i]; break;
        }
    }
    p.c = c_override ? *c_override : resolved_c(sc, p.s);
    return p;
}

}  // namespace report_detail

// --- density: x, f_initial, f_ps, f_nps over a symmetric grid -------------
inline void cmd_density(const Scenario& sc, std::ostream& os) {
    report_detail::require_axes(sc, 0);
    const MeasurementSetup setup =
        report_detail::setup_for(sc, report_detail::base_aw(sc), sc.g);
    const NoiseModel noise(sc.s);
    const double v = formulas::effective_variance(sc.sigma, sc.s);
    const double reach = std::abs(sc.g) + 6.0 * std::sqrt(v);
    constexpr int kSteps = 1200;  // 1201 points, always includes x = 0

    csv::row(os, std::vector<std::string>{"x", "f_initial", "f_ps", "f_nps"});
    for (int i = 0; i <= kSteps; ++i) {
        const double x = -reach + 2.0 * reach * i / kSteps;
        const DensityQuery ps{x, setup, noise, Mode::postselected};
        const DensityQuery nps{x, setup, noise, Mode::no_postselection};
        csv::row(os, std::vector<std::string>{
                         csv::num(x), csv::num(gauss_pdf(x, 0.0, v)),
                         csv::num(density(ps)), csv::num(density(nps))});
    }
}

// --- errors: one ErrorReport row per grid point ---------------------------
inline void cmd_errors(const Scenario& sc, std::ostream& os) {
    report_detail::require_axes(sc, 2);
    csv::row(os, std::vector<std::string>{"aw", "g", "c", "s", "alpha",
                                          "p_e2_ps", "p_e2_nps", "beta_ps",
                                          "beta_nps", "ratio_e2",
                                          "ratio_beta"});
    std::vector<int> steps;
    for (const auto& a : sc.sweeps) steps.push_back(a.steps);
    const int outer = steps.size() > 1 ? steps[1] : 1;
    const int inner = steps.size() > 0 ? steps[0] : 1;

    for (int j = 0; j < outer; ++j) {
        for (int i = 0; i < inner; ++i) {
            std::vector<double> values;
            if (!sc.sweeps.empty()) values.push_back(sc.sweeps[0].value(i));
            if (sc.sweeps.size() > 1) values.push_back(sc.sweeps[1].value(j));
            const auto p = report_detail::apply_axes(sc, values);
            const MeasurementSetup setup =
                report_detail::setup_for(sc, p.aw, p.g);
            const DecisionRule rule(p.c);
            const NoiseModel noise(p.s);
            const ErrorReport rep = error_report(setup, rule, noise);
            csv::row(os, std::vector<std::string>{
                             csv::num(p.aw), csv::num(p.g), csv::num(p.c),
                             csv::num(p.s), csv::num(rep.alpha),
                             csv::num(rep.p_e2_ps), csv::num(rep.p_e2_nps),
                             csv::num(rep.beta_ps), csv::num(rep.beta_nps),
                             csv::num(rep.ratio_e2),
                             csv::num(rep.ratio_beta)});
        }
    }
}

// --- contour: |A_w| x {g or c} grid of amplification ratios ---------------
inline void cmd_contour(const Scenario& sc, std::ostream& os) {
    Scenario grid = sc;
    if (grid.sweeps.empty()) {
        grid.sweeps.push_back({SweepAxis::Kind::aw, 0.2, 10.0, 50});
        grid.sweeps.push_back({SweepAxis::Kind::g, 0.1, 5.0, 50});
    }
    if (grid.sweeps.size() != 2 ||
        grid.sweeps[0].kind != SweepAxis::Kind::aw ||
        (grid.sweeps[1].kind != SweepAxis::Kind::g &&
         grid.sweeps[1].kind != SweepAxis::Kind::c))
        throw std::invalid_argument(
            "contour: needs sweeps aw:... and one of g:... or c:...");

    const bool y_is_g = grid.sweeps[1].kind == SweepAxis::Kind::g;
    csv::row(os, std::vector<std::string>{"aw", y_is_g ? "g" : "c",
                                          "ratio_e2", "ratio_beta"});
    for (int j = 0; j < grid.sweeps[1].steps; ++j) {
        for (int i = 0; i < grid.sweeps[0].steps; ++i) {
            const double values[2] = {grid.sweeps[0].value(i),
                                      grid.sweeps[1].value(j)};
            const auto p = report_detail::apply_axes(grid, values);
            const double q = p.aw * p.aw;
            const double e2_ps =
                formulas::type2_ps(q, p.c, p.g, grid.sigma, p.s);
            const double e2_nps =
                formulas::type2_nps(p.c, p.g, grid.sigma, p.s);
            if (!(e2_nps > 1e-300) || !(1.0 - e2_nps > 1e-300))
                throw DivisionDegenerate("contour: ratio denominator underflowed");
            csv::row(os, std::vector<std::string>{
                             csv::num(p.aw), csv::num(values[1]),
                             csv::num(e2_ps / e2_nps),
                             csv::num((1.0 - e2_ps) / (1.0 - e2_nps))});
        }
    }
}

// --- montecarlo: analytic vs empirical at the scenario point --------------
inline void cmd_montecarlo(const Scenario& sc, std::ostream& os) {
    report_detail::require_axes(sc, 0);
    const double c = report_detail::resolved_c(sc, sc.s);
    const DecisionRule rule(c);
    const NoiseModel noise(sc.s);
    const MeasurementSetup setup =
        report_detail::setup_for(sc, report_detail::base_aw(sc), sc.g);
    MeasurementSetup null_setup = setup;
    null_setup.g = 0.0;

    csv::row(os, std::vector<std::string>{"quantity", "analytic", "empirical",
                                          "half_width", "pass"});
    auto emit = [&](const std::string& name, double analytic,
                    double empirical) {
        const double hw =
            4.0 * std::sqrt(analytic * (1.0 - analytic) /
                            static_cast<double>(sc.samples));
        const bool pass = std::abs(empirical - analytic) <= hw;
        csv::row(os, std::vector<std::string>{name, csv::num(analytic),
                                              csv::num(empirical),
                                              csv::num(hw),
                                              pass ? "true" : "false"});
    };

    {  // type-1: null-coupling batch, postselected branch
        const auto batch = sample_postselected(null_setup, noise, sc.samples,
                                               stream_seed(sc.seed, 0));
        const auto est = empirical_errors(batch, rule, sc.sigma);
        emit("e1", type1_error(rule, noise, sc.sigma), est.value);
        if (sc.s > 0.0)  // rival scaling, expected to fail the band
            emit("e1_alt_scaling",
                 formulas::type1_alt_scaling(c, sc.sigma, sc.s), est.value);
    }
    {  // type-2, postselected mode
        const auto batch = sample_postselected(setup, noise, sc.samples,
                                               stream_seed(sc.seed, 1));
        const auto est = empirical_errors(batch, rule, sc.sigma);
        emit("e2_ps", type2_error(setup, rule, noise, Mode::postselected),
             est.value);
    }
    {  // type-2 without postselection: marginal of the full process
        const auto batch = sample_full_process(setup, noise, sc.samples,
                                               stream_seed(sc.seed, 2));
        const auto est = empirical_errors(batch, rule, sc.sigma);
        emit("e2_nps",
             type2_error(setup, rule, noise, Mode::no_postselection),
             est.value);
        double clicks = 0.0;
        for (auto b : batch.success) clicks += b;
        emit("success_prob", success_probability(setup),
             clicks / static_cast<double>(batch.n));
    }
}

// --- appendixc: stationary family of the loss-accounting rule -------------
inline void cmd_appendixc(const Scenario& sc, std::ostream& os) {
    report_detail::require_axes(sc, 0);
    const StationarySolution sol =
        solve_stationary(sc.g, sc.sigma, sc.alpha);
    csv::row(os, std::vector<std::string>{
                     "alpha", "g", "sigma", "c_f", "c_fbar", "p1", "p2",
                     "lambda", "d_lambda", "d_p1", "d_p2", "d_c_f",
                     "d_c_fbar", "max_residual", "lambda_branch_rejected",
                     "classification"});
    csv::row(os, std::vector<std::string>{
                     csv::num(sol.point.alpha), csv::num(sc.g),
                     csv::num(sc.sigma), csv::num(sol.point.c_f),
                     csv::num(sol.point.c_fbar), csv::num(sol.point.p1),
                     csv::num(sol.point.p2), csv::num(sol.point.lambda),
                     csv::num(sol.residuals.d_lambda),
                     csv::num(sol.residuals.d_p1),
                     csv::num(sol.residuals.d_p2),
                     csv::num(sol.residuals.d_c_f),
                     csv::num(sol.residuals.d_c_fbar),
                     csv::num(sol.max_residual),
                     sol.lambda_branch_rejected ? "true" : "false",
                     sol.classification});
}

}  // namespace wva
