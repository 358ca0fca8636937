#include <cmath>

#include <doctest.h>

#include "wva/quadrature.hpp"
#include "wva/special.hpp"

TEST_CASE("integrate: Gaussian mass over a wide interval") {
    const double v = wva::integrate(
        [](double x) { return wva::gauss_pdf(x, 0.0, 1.0); }, -12.0, 12.0,
        1e-14, 1e-13);
    CHECK(std::abs(v - 1.0) <= 1e-13);
}

TEST_CASE("integrate: polynomial handled exactly by the embedded rule") {
    const double v =
        wva::integrate([](double x) { return x * x * x * x * x * x * x * x; },
                       0.0, 1.0);
    CHECK(v == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("integrate: oscillatory integrand") {
    const double v = wva::integrate([](double x) { return std::sin(x); }, 0.0,
                                    20.0, 1e-13, 1e-12);
    CHECK(v == doctest::Approx(1.0 - std::cos(20.0)).epsilon(1e-12));
}

TEST_CASE("integrate: orientation and empty interval") {
    CHECK(wva::integrate([](double x) { return x; }, 2.0, 2.0) == 0.0);
    const double fwd = wva::integrate([](double x) { return x * x; }, 0.0, 2.0);
    const double rev = wva::integrate([](double x) { return x * x; }, 2.0, 0.0);
    CHECK(fwd == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(rev == doctest::Approx(-8.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("integrate: exhausting the panel budget throws") {
    // A spike the rule can see but cannot resolve to the requested accuracy
    // with only a handful of panels allowed.
    CHECK_THROWS_AS(
        (void)wva::integrate(
            [](double x) { return wva::gauss_pdf(x, 0.0, 1e-6); }, -1.0, 1.0,
            1e-15, 1e-15, 4),
        wva::QuadratureFailure);
}
