#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/posterior.hpp"

namespace bai {

// μ_{n,i,j} = (T_i μ_i + T_j μ_j) / (T_i + T_j).
inline double pooled_mean(const PosteriorState& state, arm_t i, arm_t j) {
    const long ti = state.count(i), tj = state.count(j);
    if (ti + tj == 0) throw precondition_error("pooled mean of two unpulled arms is undefined");
    if (tj == 0) return state.empirical_mean(i);
    if (ti == 0) return state.empirical_mean(j);
    return (state.sum(i) + state.sum(j)) / static_cast<double>(ti + tj);
}

namespace detail {

// W from sufficient statistics; both counts >= 1.
inline double transport_from_stats(const RewardFamily& family, double ti, double mi, double tj, double mj) {
    if (mj >= mi) return 0.0;
    if (family.is_gaussian()) {
        const double gap = mi - mj;
        const double s2 = family.sigma() * family.sigma();
        return gap * gap / (2.0 * s2 * (1.0 / ti + 1.0 / tj));
    }
    const double pooled = (ti * mi + tj * mj) / (ti + tj);
    return ti * bernoulli_kl(mi, pooled) + tj * bernoulli_kl(mj, pooled);
}

}  // namespace detail

// W_n(i, j): evidence that arm i's mean exceeds arm j's. Zero when μ_{n,j} ≥ μ_{n,i},
// and zero when either arm is unpulled (the pooled mean then equals the other
// arm's mean, so neither term carries weight).
inline double transportation_cost(const PosteriorState& state, arm_t i, arm_t j) {
    if (i == j) throw config_error("transportation cost needs two distinct arms");
    const long ti = state.count(i), tj = state.count(j);
    if (ti < 1 || tj < 1) return 0.0;
    return detail::transport_from_stats(state.family(), static_cast<double>(ti), state.empirical_mean(i),
                                        static_cast<double>(tj), state.empirical_mean(j));
}

// All W_n(i, j); the diagonal is left at 0.
class CostMatrix {
public:
    explicit CostMatrix(const PosteriorState& state) : k_(state.arms()), w_(k_ * k_, 0.0) {
        for (arm_t i = 0; i < k_; ++i) {
            for (arm_t j = 0; j < k_; ++j) {
                if (i != j) w_[i * k_ + j] = transportation_cost(state, i, j);
            }
        }
    }

    double operator()(arm_t i, arm_t j) const { return w_[i * k_ + j]; }
    std::size_t arms() const { return k_; }

    // min_{j≠i} W(i, j)
    double row_min(arm_t i) const {
        double m = std::numeric_limits<double>::infinity();
        for (arm_t j = 0; j < k_; ++j) {
            if (j != i) m = std::min(m, (*this)(i, j));
        }
        return m;
    }

private:
    std::size_t k_;
    std::vector<double> w_;
};

// Z_n = max_i min_{j≠i} W_n(i, j). Only the empirical best arm can have a
// positive inner minimum, so one row suffices; ties in the empirical best all
// give Z_n = 0.
inline double glr_statistic(const PosteriorState& state) {
    if (!state.all_pulled()) throw precondition_error("glr statistic needs every arm pulled");
    const auto means = state.empirical_means();
    const arm_t best = static_cast<arm_t>(std::max_element(means.begin(), means.end()) - means.begin());
    double z = std::numeric_limits<double>::infinity();
    for (arm_t j = 0; j < state.arms(); ++j) {
        if (j == best) continue;
        z = std::min(z, detail::transport_from_stats(state.family(), static_cast<double>(state.count(best)),
                                                     means[best], static_cast<double>(state.count(j)), means[j]));
    }
    return z;
}

// C_i(w_star, w_i) = min_x w_star d(μ*; x) + w_i d(μ_i; x), attained at the
// weighted mean x = (w_star μ* + w_i μ_i) / (w_star + w_i).
inline double population_cost(const RewardFamily& family, double mu_star, double mu_i, double w_star, double w_i) {
    if (!(mu_star > mu_i)) throw precondition_error("population_cost requires mu_star > mu_i");
    if (w_star < 0.0 || w_i < 0.0) throw config_error("population_cost weights must be non-negative");
    if (w_star == 0.0 || w_i == 0.0) return 0.0;
    if (family.is_gaussian()) {
        const double gap = mu_star - mu_i;
        return gap * gap / (2.0 * family.sigma() * family.sigma() * (1.0 / w_i + 1.0 / w_star));
    }
    const double x = (w_star * mu_star + w_i * mu_i) / (w_star + w_i);
    return w_star * bernoulli_kl(mu_star, x) + w_i * bernoulli_kl(mu_i, x);
}

}  // namespace bai
