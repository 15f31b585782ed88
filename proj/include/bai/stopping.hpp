#pragma once
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/posterior.hpp"

namespace bai {

enum class ThresholdVariant { theorem1, closed_form };

// Stopping criterion: the Bayesian rule (max_i a_{n,i} ≥ c_{n,δ}) or the
// Chernoff rule (Z_n > d_{n,δ}).
struct StoppingCriterion {
    enum class Kind { bayes, chernoff };

    Kind kind = Kind::chernoff;
    double delta = 0.01;
    std::size_t arms = 2;
    ThresholdVariant variant = ThresholdVariant::theorem1;

    static StoppingCriterion chernoff(double delta, std::size_t arms) {
        return make(Kind::chernoff, delta, arms, ThresholdVariant::theorem1);
    }
    static StoppingCriterion bayes(double delta, std::size_t arms, ThresholdVariant v = ThresholdVariant::theorem1) {
        return make(Kind::bayes, delta, arms, v);
    }

    bool is_bayes() const { return kind == Kind::bayes; }

private:
    static StoppingCriterion make(Kind k, double delta, std::size_t arms, ThresholdVariant v) {
        if (!(delta > 0.0 && delta < 1.0)) throw config_error("delta must lie in (0, 1)");
        if (arms < 2) throw config_error("stopping criterion needs K >= 2");
        StoppingCriterion c;
        c.kind = k;
        c.delta = delta;
        c.arms = arms;
        c.variant = v;
        return c;
    }
};

struct StopDecision {
    bool stop = false;
    std::optional<arm_t> recommendation;  // present iff stop
    double statistic = 0.0;
    double threshold = 0.0;
};

// Approximation of the mixture-martingale calibration function,
// x + ln(x) for x >= 1, clamped to x below 1 so the correction never lowers
// the threshold.
inline double calibration_function(double x) { return x + std::log(std::max(x, 1.0)); }

// d_{n,δ} = 4 ln(4 + ln n) + 2 C(ln((K-1)/δ) / 2).
inline double chernoff_threshold(long n, double delta, std::size_t arms) {
    if (n < 1) throw config_error("threshold round must be >= 1");
    if (arms < 2) throw config_error("threshold needs K >= 2");
    const double x = std::log(static_cast<double>(arms - 1) / delta) / 2.0;
    return 4.0 * std::log(4.0 + std::log(static_cast<double>(n))) + 2.0 * calibration_function(x);
}

// 1 - c_{n,δ}; kept separately because c itself rounds to 1 for large n.
inline double bayes_threshold_complement(long n, double delta, std::size_t arms, ThresholdVariant variant) {
    if (n < 1) throw config_error("threshold round must be >= 1");
    if (variant == ThresholdVariant::theorem1) {
        const double d = chernoff_threshold(n, delta, arms);
        const double r = std::sqrt(d) + 1.0 / std::numbers::sqrt2;
        return std::exp(-r * r) / std::sqrt(2.0 * std::numbers::pi);
    }
    const double m = 2.0 * static_cast<double>(n) * static_cast<double>(arms - 1);
    return delta / (m * std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * std::exp(std::sqrt(2.0 * std::log(m / delta))));
}

// c_{n,δ}: threshold on max_i a_{n,i} for the Bayesian stopping rule.
inline double bayes_threshold(long n, double delta, std::size_t arms, ThresholdVariant variant) {
    return 1.0 - bayes_threshold_complement(n, delta, arms, variant);
}

namespace detail {

// Lowest index among the maxima: recommendation rules are pure in the state.
inline arm_t first_argmax(std::span<const double> v) {
    return static_cast<arm_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

// J_n for the Bayesian rule: argmax_i a_{n,i}.
inline arm_t bayes_recommendation(std::span<const double> action_probabilities) {
    return detail::first_argmax(action_probabilities);
}

// J_n for the Chernoff rule: argmax_i μ_{n,i}.
inline arm_t empirical_recommendation(const PosteriorState& state) {
    const auto means = state.empirical_means();
    return detail::first_argmax(means);
}

// Evaluates the criterion at the current state. The round index used in the
// thresholds is the total number of pulls. Bayes needs the action
// probabilities `a`; Chernoff needs the GLR statistic `z`.
inline StopDecision should_stop(const StoppingCriterion& criterion, const PosteriorState& state,
                                std::optional<std::span<const double>> a, std::optional<double> z) {
    const long n = std::max<long>(state.total_pulls(), 1);
    StopDecision out;
    if (criterion.is_bayes()) {
        if (!a) throw config_error("bayesian stopping needs action probabilities");
        if (a->size() != state.arms()) throw config_error("action probability vector has the wrong size");
        const arm_t j = bayes_recommendation(*a);
        out.statistic = (*a)[j];
        // max a >= 1 - (1 - c), compared on the complement to survive rounding.
        const double complement = bayes_threshold_complement(n, criterion.delta, criterion.arms, criterion.variant);
        out.threshold = 1.0 - complement;
        double rest = 0.0;
        for (arm_t i = 0; i < a->size(); ++i) {
            if (i != j) rest += (*a)[i];
        }
        out.stop = rest <= complement;
        if (out.stop) out.recommendation = j;
        return out;
    }
    if (!z) throw config_error("chernoff stopping needs the GLR statistic");
    out.statistic = *z;
    out.threshold = chernoff_threshold(n, criterion.delta, criterion.arms);
    out.stop = *z > out.threshold;
    if (out.stop) out.recommendation = empirical_recommendation(state);
    return out;
}

}  // namespace bai
