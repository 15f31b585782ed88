#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "bai/numeric.hpp"
#include "bai/quadrature.hpp"
#include "bai/rng.hpp"
#include "bai/special.hpp"

using namespace bai;
using namespace bai::numeric;
using namespace bai::quadrature;

// Boost's ibeta is the independent oracle for the in-house continued fraction.
TEST(LogIbeta, MatchesBoostOnRandomArguments) {
    RngStream r(3, 0);
    for (int k = 0; k < 5000; ++k) {
        const double a = 1.0 + std::floor(r.uniform() * 300.0);
        const double b = 1.0 + std::floor(r.uniform() * 300.0);
        const double x = r.uniform();
        const double expect = boost::math::ibeta(a, b, x);
        const double got = special::ibeta(x, a, b);
        ASSERT_NEAR(got, expect, 1e-12 + 1e-10 * expect) << a << ' ' << b << ' ' << x;
    }
}

TEST(LogIbeta, DeepLowerTailKeepsRelativeAccuracy) {
    // x far below the mean; the second value underflows in linear space.
    // References evaluated at 40 digits.
    EXPECT_NEAR(special::log_ibeta(0.5, 400.0, 20.0), -215.414856900108158021, 1e-11 * 215.4);
    EXPECT_NEAR(special::log_ibeta(0.05, 3000.0, 3000.0), -4987.35703660107780901, 1e-11 * 4987.4);
}

TEST(LogIbeta, Endpoints) {
    EXPECT_EQ(special::log_ibeta(0.0, 2.0, 3.0), special::neg_inf);
    EXPECT_EQ(special::log_ibeta(1.0, 2.0, 3.0), 0.0);
    EXPECT_NEAR(special::ibeta(0.3, 1.0, 1.0), 0.3, 1e-15);
}

TEST(LogNormalCdf, MatchesErfcAndAsymptoticTail) {
    for (double z = -36.0; z <= 8.0; z += 0.25) {
        const double expect = std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
        ASSERT_NEAR(special::log_normal_cdf(z), expect, 1e-12 * std::max(1.0, std::abs(expect))) << z;
    }
    // log Φ(z) ≈ -z²/2 - log(-z) - log √(2π) for very negative z.
    for (double z : {-40.0, -100.0, -1e4}) {
        const double lead = -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * M_PI);
        EXPECT_NEAR(special::log_normal_cdf(z), lead, 1.1 / (z * z));
    }
}

TEST(Logs, Log1mexpAndLogaddexp) {
    EXPECT_NEAR(special::log1mexp(-1e-20), std::log(1e-20), 1e-12);
    EXPECT_NEAR(special::log1mexp(-50.0), -std::exp(-50.0), 1e-30);
    EXPECT_NEAR(special::logaddexp(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15);
    EXPECT_EQ(special::logaddexp(special::neg_inf, 1.0), 1.0);
}

TEST(GoldenSection, FindsQuadraticMinimum) {
    const auto m = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10);
    EXPECT_NEAR(m.x, 0.3, 1e-9);
    EXPECT_LT(m.value, 1e-18);
}

TEST(GoldenSection, ReturnsEndpointWhenMonotone) {
    const auto m = golden_section_minimize([](double x) { return x; }, 1.0, 2.0, 1e-10);
    EXPECT_NEAR(m.x, 1.0, 1e-8);
}

TEST(Bisect, BracketsRoot) {
    const auto [lo, hi] = bisect_increasing([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, 1e-13);
    EXPECT_LE(hi - lo, 1e-12);
    EXPECT_NEAR(lo, std::cbrt(2.0), 1e-12);
}

TEST(Quadrature, PolynomialIsExact) {
    const auto r = integrate([](double x) { return 3 * x * x; }, std::vector<double>{0.0, 2.0}, 1e-14, 0.0);
    EXPECT_NEAR(r.value, 8.0, 1e-13);
}

TEST(Quadrature, GaussianDensityIntegratesToOne) {
    const auto r = integrate([](double x) { return special::normal_pdf(x); }, std::vector<double>{-40.0, 0.0, 40.0},
                             1e-13, 0.0);
    EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Quadrature, PeakedIntegrandNeedsRefinement) {
    // Narrow bump far from the breakpoints.
    const double s = 1e-3;
    const auto r = integrate([&](double x) { return std::exp(-0.5 * (x - 0.37) * (x - 0.37) / (s * s)); },
                             std::vector<double>{0.0, 1.0}, 1e-12, 0.0);
    EXPECT_NEAR(r.value, s * std::sqrt(2.0 * M_PI), 1e-13);
    EXPECT_GT(r.panels, 1);
}

TEST(Quadrature, BudgetExhaustionIsNumericalError) {
    EXPECT_THROW(integrate([](double x) { return std::sin(1.0 / x); }, std::vector<double>{1e-9, 1.0}, 1e-15, 0.0, 8),
                 numerical_error);
}
