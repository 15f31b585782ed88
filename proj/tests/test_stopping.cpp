#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bai/stopping.hpp"
#include "bai/transport.hpp"
#include "test_helpers.hpp"

using namespace bai;
using namespace bai::test;

TEST(ChernoffThreshold, UnitCalibrationExample) {
    // K = 2 and ln(1/δ) = 2 give x = 1, so d = 4 ln 4 + 2.
    EXPECT_NEAR(chernoff_threshold(1, std::exp(-2.0), 2), 7.54517744447956247534, 1e-13);
}

TEST(ChernoffThreshold, MonotoneInRoundAndDelta) {
    for (long n = 1; n < 1'000'000; n = n < 1000 ? n + 1 : n + 997)
        ASSERT_GT(chernoff_threshold(n + 1, 0.01, 5), chernoff_threshold(n, 0.01, 5));
    for (double d = 0.001; d < 0.9; d += 0.01) ASSERT_GT(chernoff_threshold(100, d, 5), chernoff_threshold(100, d + 0.01, 5));
}

TEST(ChernoffThreshold, CalibrationClampForSmallArgument) {
    EXPECT_EQ(calibration_function(0.3), 0.3);
    EXPECT_NEAR(calibration_function(std::numbers::e), std::numbers::e + 1.0, 1e-15);
}

TEST(BayesThreshold, ClosedFormExample) {
    // 0.01 / (80 √(2πe) e^{√(2 ln 8000)}), evaluated at 30 digits.
    const double comp = bayes_threshold_complement(10, 0.01, 5, ThresholdVariant::closed_form);
    EXPECT_NEAR(comp, 4.35941739000619407245e-7, 1e-20);
    EXPECT_NEAR(bayes_threshold(10, 0.01, 5, ThresholdVariant::closed_form), 1.0 - 4.35941739000619407245e-7, 1e-15);
}

TEST(BayesThreshold, BetweenHalfAndOneAndIncreasing) {
    for (auto v : {ThresholdVariant::theorem1, ThresholdVariant::closed_form}) {
        for (double delta : {0.5, 0.1, 0.01, 1e-4}) {
            for (std::size_t k : {2u, 5u, 20u}) {
                double prev = 0.0;
                for (long n = 1; n <= 10'000'000; n *= 3) {
                    const double comp = bayes_threshold_complement(n, delta, k, v);
                    ASSERT_GT(comp, 0.0);
                    ASSERT_LT(comp, 0.5);
                    const double c = 1.0 - comp;
                    ASSERT_GE(c, prev);
                    prev = c;
                }
            }
        }
    }
}

TEST(BayesThreshold, Theorem1RoundTrip) {
    for (long n : {1L, 10L, 1000L, 100000L}) {
        const double d = chernoff_threshold(n, 0.01, 5);
        const double comp = bayes_threshold_complement(n, 0.01, 5, ThresholdVariant::theorem1);
        const double r = std::sqrt(std::log(1.0 / (std::sqrt(2.0 * std::numbers::pi) * comp))) - 1.0 / std::numbers::sqrt2;
        EXPECT_NEAR(r * r, d, 1e-10 * d);
    }
}

TEST(ShouldStop, BayesExample) {
    const auto s = gaussian_state(1.0, {3, 3, 3}, {1.0, 0.0, 0.0});
    const std::vector<double> a{0.999999, 0.0000005, 0.0000005};
    // At n = 9, δ = 0.3, K = 3 the closed-form threshold is c ≈ 0.9999.
    const auto crit = StoppingCriterion::bayes(0.3, 3, ThresholdVariant::closed_form);
    const double comp = bayes_threshold_complement(9, 0.3, 3, ThresholdVariant::closed_form);
    ASSERT_NEAR(comp, 1e-4, 2e-5);
    const auto d = should_stop(crit, s, std::span<const double>(a), std::nullopt);
    EXPECT_TRUE(d.stop);
    EXPECT_EQ(d.recommendation, 0u);
}

TEST(ShouldStop, ChernoffNeverStopsAtZeroStatistic) {
    const auto s = gaussian_state(1.0, {5, 5}, {0.2, 0.2});
    const auto crit = StoppingCriterion::chernoff(0.99, 2);
    const auto d = should_stop(crit, s, std::nullopt, glr_statistic(s));
    EXPECT_FALSE(d.stop);
    EXPECT_FALSE(d.recommendation);
    EXPECT_GT(d.threshold, 4.0 * std::log(4.0));
}

TEST(ShouldStop, ChernoffRecommendsEmpiricalBest) {
    const auto s = gaussian_state(1.0, {500, 500, 500}, {0.0, 1.0, 0.2});
    const auto d = should_stop(StoppingCriterion::chernoff(0.01, 3), s, std::nullopt, glr_statistic(s));
    EXPECT_TRUE(d.stop);
    EXPECT_EQ(d.recommendation, 1u);
}

TEST(ShouldStop, MissingStatisticIsArgumentError) {
    const auto s = gaussian_state(1.0, {1, 1}, {0.0, 1.0});
    EXPECT_THROW(should_stop(StoppingCriterion::bayes(0.1, 2), s, std::nullopt, 3.0), config_error);
    EXPECT_THROW(should_stop(StoppingCriterion::chernoff(0.1, 2), s, std::nullopt, std::nullopt), config_error);
}

TEST(ShouldStop, MonotoneInStatistic) {
    const auto s = gaussian_state(1.0, {10, 10}, {1.0, 0.0});
    const auto crit = StoppingCriterion::chernoff(0.05, 2);
    bool fired = false;
    for (double z = 0.0; z < 30.0; z += 0.01) {
        const bool stop = should_stop(crit, s, std::nullopt, z).stop;
        if (fired) ASSERT_TRUE(stop);
        fired = fired || stop;
    }
    EXPECT_TRUE(fired);
}

TEST(Recommendation, PureAndLowestIndexOnTies) {
    const auto s = gaussian_state(1.0, {2, 2, 2}, {0.5, 0.7, 0.7});
    EXPECT_EQ(empirical_recommendation(s), 1u);
    EXPECT_EQ(empirical_recommendation(s), empirical_recommendation(s));
    const std::vector<double> a{0.2, 0.4, 0.4};
    EXPECT_EQ(bayes_recommendation(a), 1u);
}

TEST(Criterion, Validation) {
    EXPECT_THROW(StoppingCriterion::chernoff(0.0, 2), config_error);
    EXPECT_THROW(StoppingCriterion::chernoff(1.0, 2), config_error);
    EXPECT_THROW(StoppingCriterion::bayes(0.1, 1), config_error);
}
