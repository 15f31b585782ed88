#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "bai/posterior.hpp"
#include "test_helpers.hpp"

using namespace bai;
using namespace bai::test;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Exact P[X > Y], X ~ Beta(a, b), Y ~ Beta(c, d), integer parameters:
// F_Y(x) = P[Bin(c+d-1, x) >= c], and each binomial term integrates against
// the Beta(a, b) density in closed form.
double exact_beta_exceedance(int a, int b, int c, int d) {
    const int n = c + d - 1;
    double p = 0.0;
    for (int k = c; k <= n; ++k) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                std::lgamma(a + k) + std::lgamma(b + n - k) - std::lgamma(a + b + n) -
                                (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
        p += std::exp(log_term);
    }
    return p;
}

std::vector<double> monte_carlo_action_probabilities(const PosteriorState& s, RngStream& r, long draws) {
    std::vector<double> freq(s.arms(), 0.0);
    const auto params = all_params(s);
    std::vector<double> theta(s.arms());
    for (long k = 0; k < draws; ++k) {
        sample_theta_into(s, params, r, theta);
        freq[static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin())] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(draws);
    return freq;
}

}  // namespace

TEST(Update, GaussianSinglePull) {
    PosteriorState s(RewardFamily::gaussian(1.5), 3);
    s = update(s, 0, 2.0);
    const auto p = s.params(0);
    EXPECT_EQ(p.mean, 2.0);
    EXPECT_EQ(p.variance, 1.5 * 1.5);
}

TEST(Update, GaussianTwoPulls) {
    PosteriorState s(RewardFamily::gaussian(1.0), 2);
    s.update(1, 1.0);
    s.update(1, 3.0);
    EXPECT_EQ(s.params(1).mean, 2.0);
    EXPECT_EQ(s.params(1).variance, 0.5);
}

TEST(Update, BernoulliConjugacy) {
    auto s = bernoulli_state({3, 0}, {2, 0});
    s.update(0, 1.0);
    const auto p = s.params(0);
    EXPECT_EQ(p.alpha, 4.0);
    EXPECT_EQ(p.beta, 2.0);
    EXPECT_EQ(s.params(1).alpha, 1.0);
    EXPECT_EQ(s.params(1).beta, 1.0);
}

TEST(Update, PureFunctionLeavesInputUntouched) {
    PosteriorState s(RewardFamily::gaussian(1.0), 2);
    const auto t = update(s, 0, 1.0);
    EXPECT_EQ(s.count(0), 0);
    EXPECT_EQ(t.count(0), 1);
}

TEST(Update, RejectsBadRewardsAndArms) {
    PosteriorState b(RewardFamily::bernoulli(), 2);
    EXPECT_THROW(b.update(0, 0.5), config_error);
    EXPECT_THROW(b.update(2, 1.0), std::out_of_range);
}

TEST(Update, InvariantsOnRandomTrajectories) {
    RngStream r(21, 0);
    PosteriorState g(RewardFamily::gaussian(2.0), 3), b(RewardFamily::bernoulli(), 3);
    for (int k = 0; k < 2000; ++k) {
        const arm_t i = r.index(3);
        g.update(i, r.normal(0.0, 2.0));
        b.update(i, r.bernoulli(0.3) ? 1.0 : 0.0);
        const auto pg = g.params(i);
        ASSERT_NEAR(pg.mean, g.sum(i) / static_cast<double>(g.count(i)), 1e-12);
        ASSERT_DOUBLE_EQ(pg.variance, 4.0 / static_cast<double>(g.count(i)));
        const auto pb = b.params(i);
        ASSERT_EQ(pb.alpha - 1.0 + pb.beta - 1.0, static_cast<double>(b.count(i)));
        ASSERT_EQ(pb.alpha - 1.0, b.sum(i));
    }
}

TEST(SampleTheta, ImproperGaussianThrows) {
    PosteriorState s(RewardFamily::gaussian(1.0), 2);
    s.update(0, 0.0);
    RngStream r(0, 0);
    EXPECT_THROW(sample_theta(s, r), precondition_error);
}

TEST(SampleTheta, Deterministic) {
    const auto s = gaussian_state(1.0, {3, 4}, {0.1, 0.2});
    RngStream a(8, 1), b(8, 1);
    EXPECT_EQ(sample_theta(s, a), sample_theta(s, b));
}

TEST(SampleTheta, ConcentratedPosteriorPicksEmpiricalBest) {
    PosteriorState s(RewardFamily::gaussian(1.0), 3);
    const std::vector<double> means{0.0, 0.01, -0.01};
    // T = 1e6 per arm, set through one update of the mean and then sums of the same value.
    for (arm_t i = 0; i < 3; ++i)
        for (long k = 0; k < 1'000'000; ++k) s.update(i, means[i]);
    RngStream r(4, 0);
    int hits = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto th = sample_theta(s, r);
        hits += std::max_element(th.begin(), th.end()) - th.begin() == 1;
    }
    EXPECT_GE(hits, 999);
}

TEST(SampleTheta, UniformPriorPassesKolmogorovSmirnov) {
    PosteriorState s(RewardFamily::bernoulli(), 2);
    RngStream r(17, 0);
    std::vector<double> x;
    for (int k = 0; k < 10000; ++k) x.push_back(sample_theta(s, r)[0]);
    std::sort(x.begin(), x.end());
    double d = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        d = std::max({d, (k + 1) / n - x[k], x[k] - k / n});
    // Asymptotic 1% critical value 1.628 / sqrt(n).
    EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(ActionProbabilities, SymmetricPosteriors) {
    for (const auto& s : {gaussian_state(1.0, {5, 5, 5}, {0.3, 0.3, 0.3}), bernoulli_state({6, 6, 6}, {2, 2, 2})}) {
        const auto a = optimal_action_probabilities(s, 1e-10);
        for (double v : a) EXPECT_NEAR(v, 1.0 / 3.0, 1e-10);
    }
}

TEST(ActionProbabilities, TwoArmGaussianClosedForm) {
    const auto s = gaussian_state(1.0, {4, 4}, {1.0, 0.0});
    const auto a = optimal_action_probabilities(s, 1e-12);
    // Φ(√2), evaluated independently at 30 digits.
    EXPECT_NEAR(a[0], 0.921350396474857434670, 1e-11);
    EXPECT_NEAR(a[1], 1.0 - 0.921350396474857434670, 1e-11);
}

TEST(ActionProbabilities, TwoArmGaussianMatchesPhiOnRandomStates) {
    RngStream r(5, 0);
    for (int k = 0; k < 200; ++k) {
        const auto s = random_gaussian_state(r, 2, 50, 4.0);
        const auto a = optimal_action_probabilities(s, 1e-11);
        const double z = (s.params(0).mean - s.params(1).mean) / std::sqrt(s.params(0).variance + s.params(1).variance);
        ASSERT_NEAR(a[0], phi(z), 1e-10);
    }
}

TEST(ActionProbabilities, TwoArmBernoulliMatchesExactSum) {
    // Π[θ_0 > θ_1] with Beta(3, 5) vs Beta(7, 2), exact by the finite sum.
    const auto s = bernoulli_state({6, 7}, {2, 6});
    const auto a = optimal_action_probabilities(s, 1e-12);
    EXPECT_NEAR(a[0], exact_beta_exceedance(3, 5, 7, 2), 1e-11);
}

TEST(ActionProbabilities, DominantArmLimit) {
    const auto s = gaussian_state(1.0, {1, 1, 1}, {100.0, 0.0, -0.5});
    const auto a = optimal_action_probabilities(s);
    EXPECT_GE(a[0], 1.0 - 1e-12);
}

TEST(ActionProbabilities, SumToOneAndInRange) {
    RngStream r(6, 0);
    for (int k = 0; k < 100; ++k) {
        for (const auto& s : {random_gaussian_state(r, 5, 200, 2.0), random_bernoulli_state(r, 5, 60)}) {
            const auto d = action_probability_details(s);
            double sum = 0.0;
            for (double v : d.probabilities) {
                ASSERT_GE(v, 0.0);
                ASSERT_LE(v, 1.0);
                sum += v;
            }
            ASSERT_NEAR(sum, 1.0, 1e-9);
            ASSERT_LT(d.defect, 1e-9);
        }
    }
}

TEST(ActionProbabilities, LogComplementStaysFiniteWhenDeep) {
    // 1 - a_0 ≈ Φ(-gap·√(T/2)) underflows; its log must not.
    const auto s = gaussian_state(1.0, {100000, 100000}, {1.0, 0.0});
    const double z = -std::sqrt(100000.0 / 2.0);
    const double expect = -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(log_prob_not_optimal(s, 0), expect, 1e-6 * std::abs(expect));
}

TEST(ActionProbabilities, MatchMonteCarloOnRandomStates) {
    // 80 arm-level comparisons at 3 standard errors each: under exact agreement
    // about 0.2 exceed by chance, so allow at most 2 (P ≈ 1e-3) and none past 4.5.
    RngStream pick(7, 0), draw(7, 1);
    const long draws = 1'000'000;
    int beyond3 = 0;
    for (int family = 0; family < 2; ++family) {
        for (int k = 0; k < 20; ++k) {
            const auto s = family == 0 ? random_gaussian_state(pick, 4, 30, 1.0) : random_bernoulli_state(pick, 4, 20);
            const auto a = optimal_action_probabilities(s);
            const auto f = monte_carlo_action_probabilities(s, draw, draws);
            for (arm_t i = 0; i < s.arms(); ++i) {
                const double se = std::sqrt(std::max(a[i] * (1.0 - a[i]), 1e-12) / draws);
                EXPECT_NEAR(f[i], a[i], 4.5 * se) << "family " << family << " state " << k << " arm " << i;
                beyond3 += std::abs(f[i] - a[i]) > 3.0 * se;
            }
        }
    }
    EXPECT_LE(beyond3, 2);
}

TEST(TailBounds, ZeroGap) {
    const auto s = gaussian_state(1.0, {2, 2}, {0.5, 0.5});
    const auto b = gaussian_tail_bounds(s, 0, 1);
    EXPECT_DOUBLE_EQ(b.upper, 0.5);
    EXPECT_NEAR(gaussian_pairwise_probability(s, 0, 1), 0.5, 1e-15);
    EXPECT_NEAR(b.lower, std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(TailBounds, UnitGap) {
    const auto s = gaussian_state(1.0, {2, 2}, {0.0, 1.0});
    const auto b = gaussian_tail_bounds(s, 0, 1);
    const double exact = gaussian_pairwise_probability(s, 0, 1);
    EXPECT_NEAR(b.upper, 0.5 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(exact, 0.158655253931457051415, 1e-15);  // Φ(-1)
    EXPECT_NEAR(b.lower, std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    EXPECT_LE(b.lower, exact);
    EXPECT_LE(exact, b.upper);
}

TEST(TailBounds, Preconditions) {
    const auto s = gaussian_state(1.0, {2, 2}, {1.0, 0.0});
    EXPECT_THROW(gaussian_tail_bounds(s, 0, 1), precondition_error);
    EXPECT_THROW(gaussian_tail_bounds(bernoulli_state({2, 2}, {1, 1}), 0, 1), precondition_error);
}

TEST(TailBounds, SandwichOnRandomStates) {
    RngStream r(9, 0);
    int violations = 0;
    for (int k = 0; k < 10000; ++k) {
        auto s = random_gaussian_state(r, 2, 1000, 1.0);
        arm_t i = 0, j = 1;
        if (s.params(0).mean > s.params(1).mean) std::swap(i, j);
        const auto b = gaussian_tail_bounds(s, i, j);
        const double z = (s.params(i).mean - s.params(j).mean) / std::sqrt(s.params(i).variance + s.params(j).variance);
        const double exact = phi(z);
        violations += !(b.lower <= exact && exact <= b.upper);
    }
    EXPECT_EQ(violations, 0);
}

TEST(BetaTail, Example2_10_10_2) {
    const auto t = beta_tail_bound(2, 10, 10, 2);
    const double exact = exact_beta_exceedance(2, 10, 10, 2);
    EXPECT_NEAR(exact, 0.000172943671395683779585, 1e-16);  // 30-digit quadrature
    EXPECT_GE(t.bound, exact);
    EXPECT_GT(t.C, 0.0);
}

TEST(BetaTail, DoubleIntegralOracle) {
    // P[X > Y] = ∫∫_{x>y} f_X(x) f_Y(y), integrated numerically in two dimensions.
    const auto pdf = [](double x, double a, double b) {
        return std::pow(x, a - 1) * std::pow(1 - x, b - 1) / boost::math::beta(a, b);
    };
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double exact = gk::integrate(
        [&](double x) { return pdf(x, 2, 2) * gk::integrate([&](double y) { return pdf(y, 3, 2); }, 0.0, x, 5, 1e-14); },
        0.0, 1.0, 5, 1e-14);
    EXPECT_NEAR(exact, 13.0 / 35.0, 1e-12);  // 0.371428…, rational closed form
    EXPECT_GE(beta_tail_bound(2, 2, 3, 2).bound, exact);
}

TEST(BetaTail, PreconditionViolated) {
    EXPECT_THROW(beta_tail_bound(3, 3, 3, 3), precondition_error);
    EXPECT_THROW(beta_tail_bound(5, 2, 2, 5), precondition_error);
    EXPECT_THROW(beta_tail_bound(1, 2, 3, 4), precondition_error);
    EXPECT_THROW(beta_tail_bound(0, 2, 3, 4), precondition_error);
}

TEST(BetaTail, DominatesExactOnFullGrid) {
    int checked = 0, violations = 0;
    for (int a = 1; a <= 12; ++a)
        for (int b = 1; b <= 12; ++b)
            for (int c = 1; c <= 12; ++c)
                for (int d = 1; d <= 12; ++d) {
                    const double p = (a - 1.0) / (a + b - 1.0), q = (c - 1.0) / (c + d - 1.0);
                    if (!(0.0 < p && p < q)) continue;
                    ++checked;
                    violations += beta_tail_bound(a, b, c, d).bound < exact_beta_exceedance(a, b, c, d);
                }
    EXPECT_GT(checked, 1000);
    EXPECT_EQ(violations, 0);
}
