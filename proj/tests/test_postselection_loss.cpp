#include <cmath>
#include <limits>

#include <doctest.h>

#include "support/oracles.hpp"
#include "wva/postselection_loss.hpp"

using wva::Decision;
using wva::LossDecisionRule;
using wva::LossTestPoint;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LossTestPoint random_point(wva::SplitMix64& rng) {
    return {oracle::uniform_in(rng, 0.05, 0.95),
            oracle::uniform_in(rng, 0.05, 0.95),
            oracle::uniform_in(rng, 0.3, 3.0),
            oracle::uniform_in(rng, 0.3, 3.0),
            oracle::uniform_in(rng, -2.0, 3.0),
            oracle::uniform_in(rng, 0.01, 0.5)};
}

}  // namespace

TEST_CASE("revised rule: per-branch thresholds and the discard sentinel") {
    const LossDecisionRule rule(1.5, 2.5);
    CHECK(wva::decide(true, 1.6, 1.0, rule, 0.0) == Decision::reject_null);
    CHECK(wva::decide(false, 1.6, 1.0, rule, 0.0) == Decision::accept_null);
    CHECK(wva::decide(false, -2.6, 1.0, rule, 0.0) == Decision::reject_null);
    const LossDecisionRule discard(1.5, kInf);
    CHECK(wva::decide(false, 1e12, 1.0, discard, 0.0) ==
          Decision::accept_null);
    CHECK(wva::decide(true, 1.6, 1.0, discard, 0.0) == Decision::reject_null);
    const LossDecisionRule boundary(2.0, 2.0, 0.5);
    CHECK(wva::decide(true, 2.0, 1.0, boundary, 0.3) ==
          Decision::accept_null);
    CHECK(wva::decide(true, 2.0, 1.0, boundary, 0.8) ==
          Decision::reject_null);
    CHECK_THROWS_AS(LossDecisionRule(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LossDecisionRule(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(LossDecisionRule(1.0, std::nan("")),
                    std::invalid_argument);
    CHECK_THROWS_AS(LossDecisionRule(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("revised type-1 error against the independent erf oracle") {
    wva::SplitMix64 rng(401);
    for (int k = 0; k < 50; ++k) {
        const auto pt = random_point(rng);
        const double ref =
            1.0 - (oracle::erf(pt.c_f / std::sqrt(2.0)) * pt.p1 +
                   oracle::erf(pt.c_fbar / std::sqrt(2.0)) * (1.0 - pt.p1));
        CHECK(std::abs(wva::loss_type1_error(pt, 1.0) - ref) <= 1e-14);
    }
    // discarding failures: only the success branch can reject
    const LossTestPoint pt{0.5, 0.7, 1.0, kInf, 0.0, 0.05};
    CHECK(wva::loss_type1_error(pt, 1.0) ==
          doctest::Approx(0.5 * (1.0 - oracle::erf(1.0 / std::sqrt(2.0))))
              .epsilon(1e-14));
    CHECK_THROWS_AS(
        (void)wva::loss_type1_error({0.0, 0.5, 1.0, 1.0, 0.0, 0.05}, 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS((void)wva::loss_type1_error(pt, 0.0),
                    std::invalid_argument);
}

TEST_CASE("equal thresholds erase the (p1, p2) dependence") {
    wva::SplitMix64 rng(402);
    for (int k = 0; k < 30; ++k) {
        const double c = oracle::uniform_in(rng, 0.3, 3.0);
        const double g = oracle::uniform_in(rng, -2.5, 2.5);
        const LossTestPoint a{oracle::uniform_in(rng, 0.05, 0.95),
                              oracle::uniform_in(rng, 0.05, 0.95),
                              c, c, 0.0, 0.05};
        const LossTestPoint b{oracle::uniform_in(rng, 0.05, 0.95),
                              oracle::uniform_in(rng, 0.05, 0.95),
                              c, c, 0.0, 0.05};
        CHECK(std::abs(wva::loss_type1_error(a, 1.0) -
                       wva::loss_type1_error(b, 1.0)) <= 1e-15);
        CHECK(std::abs(wva::loss_type2_error(a, g, 1.0) -
                       wva::loss_type2_error(b, g, 1.0)) <= 1e-14);
        // and both collapse to the single-threshold closed forms
        CHECK(std::abs(wva::loss_type1_error(a, 1.0) -
                       wva::formulas::type1(c, 1.0, 0.0)) <= 1e-15);
        CHECK(std::abs(wva::loss_type2_error(a, g, 1.0) -
                       wva::formulas::type2_nps(c, g, 1.0, 0.0)) <= 1e-14);
    }
}

TEST_CASE("frozen type-2 value for the discard rule in the showcase "
          "geometry") {
    const LossTestPoint pt{1.0 / 26.0, 25.0 / 26.0, 1.96, kInf, 0.0, 0.05};
    CHECK(wva::loss_type2_error(pt, 1.5, 1.0) ==
          doctest::Approx(0.8459772502635076).epsilon(1e-13));
}

TEST_CASE("type-2 error matches the raw two-branch model by quadrature") {
    // Success branch density from f, failure branch from its orthogonal
    // complement; the revised rule accepts on {|x| < c_f} and {|x| < c_fbar}
    // respectively.  Weights and window masses come from the wave packets.
    wva::SplitMix64 rng(403);
    for (int k = 0; k < 8; ++k) {
        const double p1_target = oracle::uniform_in(rng, 0.1, 0.9);
        const double p2_target = oracle::uniform_in(rng, 0.1, 0.9);
        const auto pair = oracle::states_from_p1p2(p1_target, p2_target);
        const double g = oracle::uniform_in(rng, 0.3, 2.0);
        const wva::MeasurementSetup setup(pair.i, pair.f, g, 1.0);
        const auto succ = oracle::raw_postselected(setup);
        const auto fail = oracle::raw_failure(setup);
        const LossTestPoint pt{p1_target, p2_target,
                               oracle::uniform_in(rng, 0.5, 2.5),
                               oracle::uniform_in(rng, 0.5, 2.5), 0.0, 0.05};
        const double m_succ = wva::integrate(
            [&](double x) { return succ.unnormalized(x); }, -pt.c_f, pt.c_f,
            1e-13, 1e-12);
        const double m_fail = wva::integrate(
            [&](double x) { return fail.unnormalized(x); }, -pt.c_fbar,
            pt.c_fbar, 1e-13, 1e-12);
        CHECK(std::abs(wva::loss_type2_error(pt, g, 1.0) -
                       (m_succ + m_fail)) <= 1e-10);
    }
}

TEST_CASE("lagrangian assembles the two error terms") {
    wva::SplitMix64 rng(404);
    for (int k = 0; k < 20; ++k) {
        const auto pt = random_point(rng);
        const double g = oracle::uniform_in(rng, -2.0, 2.0);
        CHECK(wva::lagrangian(pt, g, 1.0) ==
              wva::loss_type2_error(pt, g, 1.0) +
                  pt.lambda * (wva::loss_type1_error(pt, 1.0) - pt.alpha));
    }
}

TEST_CASE("closed-form partials match finite differences of the lagrangian") {
    wva::SplitMix64 rng(405);
    int checked = 0;
    for (int k = 0; k < 150; ++k) {
        const auto pt = random_point(rng);
        double g = oracle::uniform_in(rng, -2.5, 2.5);
        if (std::abs(g) < 0.05) g = 0.5;
        const double sigma = oracle::uniform_in(rng, 0.5, 2.0);
        const auto res = wva::stationarity_residuals(pt, g, sigma);
        const double closed[5] = {res.d_lambda, res.d_p1, res.d_p2, res.d_c_f,
                                  res.d_c_fbar};
        const double coords[5] = {pt.lambda, pt.p1, pt.p2, pt.c_f, pt.c_fbar};
        for (int j = 0; j < 5; ++j) {
            auto shifted = [&](double h) {
                LossTestPoint q = pt;
                double* coord[5] = {&q.lambda, &q.p1, &q.p2, &q.c_f,
                                    &q.c_fbar};
                *coord[j] += h;
                return wva::lagrangian(q, g, sigma);
            };
            const double h = 1e-6 * std::max(1.0, std::abs(coords[j]));
            const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            CHECK(std::abs(closed[j] - fd) <=
                  1e-6 * std::max(std::abs(closed[j]), 1e-3));
            ++checked;
        }
    }
    CHECK(checked == 750);
}

TEST_CASE("the p1/p2 partials factor as (er_f - er_fbar)(E - lambda)") {
    wva::SplitMix64 rng(406);
    for (int k = 0; k < 40; ++k) {
        const auto pt = random_point(rng);
        const double g = oracle::uniform_in(rng, -2.5, 2.5);
        const double e = std::exp(-0.5 * g * g);
        const auto res = wva::stationarity_residuals(pt, g, 1.0);
        const double er_f = wva::loss_detail::erf_half(pt.c_f);
        const double er_fbar = wva::loss_detail::erf_half(pt.c_fbar);
        CHECK(std::abs((res.d_p1 - res.d_p2) -
                       (er_f - er_fbar) * (e - pt.lambda)) <= 1e-14);
    }
}

TEST_CASE("the symmetric family c_f = c_fbar, p1 = p2, lambda = E cosh "
          "zeroes every residual") {
    for (double alpha : {0.01, 0.05, 0.2}) {
        for (double g : {0.5, 1.5, 3.0}) {
            for (double sigma : {0.7, 1.0}) {
                const double c = wva::critical_point_for_alpha(
                    alpha, wva::NoiseModel(), 1.0);  // in units of x/sigma
                const double gamma = g / sigma;
                const double lambda =
                    std::exp(-0.5 * gamma * gamma) * std::cosh(c * gamma);
                for (double p : {0.1, 0.5, 0.9}) {
                    const LossTestPoint pt{p, p, c, c, lambda, alpha};
                    const auto res =
                        wva::stationarity_residuals(pt, g, sigma);
                    CHECK(std::abs(res.d_lambda) <= 1e-13);
                    CHECK(res.d_p1 == 0.0);
                    CHECK(res.d_p2 == 0.0);
                    CHECK(std::abs(res.d_c_f) <= 1e-14);
                    CHECK(std::abs(res.d_c_fbar) <= 1e-14);
                }
            }
        }
    }
}

TEST_CASE("unequal branch probabilities break stationarity in c") {
    // With p1 != p2 at the symmetric thresholds the c_f equation picks up
    // the interference term: d_c_f - d_c_fbar proportional to
    // (p1 - p2)(cosh(c gamma) - 1), nonzero unless p1 = p2.
    const double alpha = 0.05;
    const double c = wva::critical_point_for_alpha(alpha, wva::NoiseModel(),
                                                   1.0);
    const double g = 1.5;
    const double lambda = std::exp(-0.5 * g * g) * std::cosh(c * g);
    const LossTestPoint pt{0.2, 0.8, c, c, lambda, alpha};
    const auto res = wva::stationarity_residuals(pt, g, 1.0);
    CHECK(std::abs(res.d_c_f) > 1e-4);
    CHECK(std::abs(res.d_c_fbar) > 1e-4);
    CHECK(std::abs(res.d_c_f + res.d_c_fbar) <= 1e-12);  // opposite signs
}

TEST_CASE("stationary solver recovers the symmetric family") {
    struct Case {
        double g, sigma, alpha;
    };
    for (const Case& cs : {Case{1.5, 1.0, 0.05}, Case{0.8, 1.3, 0.1},
                           Case{3.0, 0.7, 0.01}}) {
        const auto sol = wva::solve_stationary(cs.g, cs.sigma, cs.alpha);
        const auto& pt = sol.point;
        // threshold fixed by the size constraint
        CHECK(std::abs(wva::loss_detail::erf_half(pt.c_f) -
                       (1.0 - cs.alpha)) <= 1e-9);
        CHECK(std::abs(pt.c_f - pt.c_fbar) <= 1e-8);
        CHECK(std::abs(pt.p1 - pt.p2) <= 1e-6);
        CHECK(sol.max_residual < 1e-9);
        const double gamma = cs.g / cs.sigma;
        const double lambda_pred =
            std::exp(-0.5 * gamma * gamma) * std::cosh(pt.c_f * gamma);
        CHECK(pt.lambda == doctest::Approx(lambda_pred).epsilon(1e-6));
        CHECK(std::abs(wva::loss_type1_error(pt, cs.sigma) - cs.alpha) <=
              1e-9);
        CHECK(sol.lambda_branch_rejected);
        CHECK_FALSE(sol.lambda_branch_note.empty());
        CHECK_FALSE(sol.classification.empty());
        CHECK(sol.starts_used >= 1);
        // the flat family direction and the saddle cross term both exist, so
        // the probe must never label the point a strict local max
        CHECK(sol.classification != "local_max");
    }
}

TEST_CASE("solver input validation") {
    CHECK_THROWS_AS((void)wva::solve_stationary(0.0, 1.0, 0.05),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)wva::solve_stationary(1.5, 0.0, 0.05),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)wva::solve_stationary(1.5, 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)wva::solve_stationary(1.5, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("equal branch probabilities are realized exactly by eigenstate "
          "postselections") {
    // (p1, p2) with p1 = p2 comes from f = |+>: then <f|i> = <f|A|i> for
    // every i.  The solver's stationary point therefore corresponds to a
    // final state indistinguishable from an eigenstate of the observable.
    wva::SplitMix64 rng(407);
    for (int k = 0; k < 20; ++k) {
        const double p = oracle::uniform_in(rng, 0.05, 0.95);
        const auto pair = oracle::states_from_p1p2(p, p);
        CHECK(std::abs(pair.f.minus_amp) <= 1e-12);
        CHECK(std::norm(wva::overlap(pair.f, pair.i)) ==
              doctest::Approx(p).epsilon(1e-12));
        CHECK(std::norm(wva::observable_overlap(pair.f, pair.i)) ==
              doctest::Approx(p).epsilon(1e-12));
    }
    // the general construction hits arbitrary (p1, p2) pairs
    for (int k = 0; k < 20; ++k) {
        const double p1 = oracle::uniform_in(rng, 0.05, 0.95);
        const double p2 = oracle::uniform_in(rng, 0.05, 0.95);
        const auto pair = oracle::states_from_p1p2(p1, p2);
        CHECK(std::norm(wva::overlap(pair.f, pair.i)) ==
              doctest::Approx(p1).epsilon(1e-10));
        CHECK(std::norm(wva::observable_overlap(pair.f, pair.i)) ==
              doctest::Approx(p2).epsilon(1e-10));
    }
    const auto sol = wva::solve_stationary(1.5, 1.0, 0.05);
    const auto pair =
        oracle::states_from_p1p2(sol.point.p1, sol.point.p2);
    CHECK(std::abs(pair.f.minus_amp) <= 1e-3);  // p1 ~ p2 to solver accuracy
}
