#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/numeric.hpp"
#include "bai/transport.hpp"

namespace bai {

// β-optimal allocation ω^β and its rate Γ*_β.
//
// weights sum to 1 with weights[best] == beta; residual is the spread
// max_i C_i - min_i C_i of the equalized costs; rate is min_i C_i.
struct AllocationResult {
    std::vector<double> weights;
    double rate = 0.0;
    double beta = 0.0;
    double residual = 0.0;
    arm_t best = 0;
    int iterations = 0;
    // Set by optimal_allocation when the 99-point β grid beats golden-section.
    bool grid_warning = false;
};

namespace detail {

inline arm_t validated_best(std::span<const double> means, const RewardFamily& family) {
    if (means.size() < 2) throw config_error("allocation needs at least 2 arms");
    for (double m : means) {
        if (!std::isfinite(m)) throw config_error("arm means must be finite");
        if (family.is_bernoulli() && !(m > 0.0 && m < 1.0))
            throw config_error("bernoulli means must lie strictly inside (0, 1)");
    }
    const arm_t best = static_cast<arm_t>(std::max_element(means.begin(), means.end()) - means.begin());
    for (arm_t i = 0; i < means.size(); ++i) {
        if (i != best && means[i] == means[best]) throw config_error("best arm is not unique");
    }
    return best;
}

inline void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw config_error("beta must lie in (0, 1)");
}

// Rescales sub-optimal weights to sum exactly 1 - β and fills rate/residual.
inline void finish(AllocationResult& r, std::span<const double> means, const RewardFamily& family) {
    double sub = 0.0;
    for (arm_t i = 0; i < r.weights.size(); ++i) {
        if (i != r.best) sub += r.weights[i];
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (arm_t i = 0; i < r.weights.size(); ++i) {
        if (i == r.best) continue;
        r.weights[i] = (1.0 - r.beta) * (r.weights[i] / sub);
        const double c = population_cost(family, means[r.best], means[i], r.beta, r.weights[i]);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    r.weights[r.best] = r.beta;
    r.rate = lo;
    r.residual = hi - lo;
}

}  // namespace detail

// Solves Σ_{i≠I*} x_i(y) = 1 - β for y = Γ*_β by bisection, where x_i = g_i^{-1}
// and g_i(x) = C_i(β, x) is itself inverted by bisection.
inline AllocationResult optimal_allocation_beta(std::span<const double> means, const RewardFamily& family,
                                                double beta, double tol = 1e-12) {
    const arm_t best = detail::validated_best(means, family);
    detail::check_beta(beta);
    const std::size_t k = means.size();
    AllocationResult r;
    r.best = best;
    r.beta = beta;
    r.weights.assign(k, 0.0);
    if (k == 2) {
        r.weights[1 - best] = 1.0 - beta;
        detail::finish(r, means, family);
        return r;
    }

    double y_hi = std::numeric_limits<double>::infinity();
    for (arm_t i = 0; i < k; ++i) {
        if (i != best) y_hi = std::min(y_hi, beta * kl_div(family, means[best], means[i]));
    }
    y_hi -= 1e-15;

    auto g = [&](arm_t i, double x) { return population_cost(family, means[best], means[i], beta, x); };
    // x_i(y): g_i is strictly increasing with range [0, β d(μ*; μ_i)).
    auto invert = [&](arm_t i, double y) {
        if (y <= 0.0) return 0.0;
        double x_max = 1.0;
        while (g(i, x_max) <= y) {
            x_max *= 2.0;
            if (x_max > 1e300) throw numerical_error("allocation inner bracket diverged");
        }
        const auto [lo, hi] = numeric::bisect_increasing([&](double x) { return g(i, x) - y; }, 1e-15, x_max, 0.0);
        return 0.5 * (lo + hi);
    };
    auto excess = [&](double y) {
        double s = 0.0;
        for (arm_t i = 0; i < k; ++i) {
            if (i != best) s += invert(i, y);
        }
        return s - (1.0 - beta);
    };

    double lo = 0.0, hi = y_hi;
    int it = 0;
    for (; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    r.iterations = it;
    const double y = 0.5 * (lo + hi);
    for (arm_t i = 0; i < k; ++i) {
        if (i != best) r.weights[i] = invert(i, y);
    }
    detail::finish(r, means, family);
    return r;
}

// Gaussian-only solver: with x_j = 1/ω_j + 1/β, equal costs force
// x_j = a_j x for a_j = (μ* - μ_j)² / (μ* - μ_ref)², so one bisection on x solves
// Σ_j 1 / (a_j x - 1/β) = 1 - β.
inline AllocationResult gaussian_fast_path(std::span<const double> means, double sigma, double beta,
                                           double tol = 1e-12) {
    const RewardFamily family = RewardFamily::gaussian(sigma);
    const arm_t best = detail::validated_best(means, family);
    detail::check_beta(beta);
    const std::size_t k = means.size();
    AllocationResult r;
    r.best = best;
    r.beta = beta;
    r.weights.assign(k, 0.0);
    if (k == 2) {
        r.weights[1 - best] = 1.0 - beta;
        detail::finish(r, means, family);
        return r;
    }
    // Reference arm: the smallest gap, so every a_j >= 1 and x > 1/β suffices.
    double ref_gap = std::numeric_limits<double>::infinity();
    for (arm_t j = 0; j < k; ++j) {
        if (j != best) ref_gap = std::min(ref_gap, means[best] - means[j]);
    }
    std::vector<double> a(k, 0.0);
    for (arm_t j = 0; j < k; ++j) {
        if (j != best) a[j] = (means[best] - means[j]) * (means[best] - means[j]) / (ref_gap * ref_gap);
    }
    const double inv_beta = 1.0 / beta;
    auto total = [&](double x) {
        double s = 0.0;
        for (arm_t j = 0; j < k; ++j) {
            if (j != best) s += 1.0 / (a[j] * x - inv_beta);
        }
        return s;
    };
    double hi = 2.0 * inv_beta;
    while (total(hi) > 1.0 - beta) hi *= 2.0;
    // total is decreasing in x; bisect on (1 - β) - total.
    const auto [lo_x, hi_x] = numeric::bisect_increasing([&](double x) { return (1.0 - beta) - total(x); },
                                                         inv_beta, hi, tol * inv_beta, 400);
    const double x = 0.5 * (lo_x + hi_x);
    for (arm_t j = 0; j < k; ++j) {
        if (j != best) r.weights[j] = 1.0 / (a[j] * x - inv_beta);
    }
    detail::finish(r, means, family);
    return r;
}

// Γ*_β via the fastest applicable solver.
inline AllocationResult solve_allocation_beta(std::span<const double> means, const RewardFamily& family,
                                              double beta, double tol = 1e-12) {
    if (family.is_gaussian()) return gaussian_fast_path(means, family.sigma(), beta, tol);
    return optimal_allocation_beta(means, family, beta, tol);
}

// β* = argmax_β Γ*_β by golden-section on [1e-4, 1 - 1e-4] (tolerance beta_tol
// in β), returning the allocation at β*. With grid_check, a 99-point β grid is
// also evaluated and grid_warning is set if it beats golden-section by more
// than rate_tol (β ↦ Γ*_β is not known to be unimodal).
inline AllocationResult optimal_allocation(std::span<const double> means, const RewardFamily& family,
                                           double beta_tol = 1e-6, bool grid_check = true,
                                           double solver_tol = 1e-12, double rate_tol = 1e-9) {
    detail::validated_best(means, family);
    auto neg_rate = [&](double b) { return -solve_allocation_beta(means, family, b, solver_tol).rate; };
    const auto m = numeric::golden_section_minimize(neg_rate, 1e-4, 1.0 - 1e-4, beta_tol);
    AllocationResult r = solve_allocation_beta(means, family, m.x, solver_tol);
    r.iterations = m.iterations;
    if (grid_check) {
        for (int g = 1; g <= 99; ++g) {
            if (-neg_rate(g / 100.0) > r.rate + rate_tol) {
                r.grid_warning = true;
                break;
            }
        }
    }
    return r;
}

// Validation oracle: max over a grid of the simplex slice {ω_{I*} = β} of
// min_i C_i(β, ω_i). The first K-2 sub-optimal weights range over multiples of
// grid_step and the last takes the remainder. Exponential in K; refuses K > 6.
inline double brute_force_gamma(std::span<const double> means, const RewardFamily& family, double beta,
                                double grid_step) {
    if (means.size() > 6) throw config_error("brute_force_gamma refuses K > 6");
    if (!(grid_step > 0.0)) throw config_error("grid_step must be positive");
    const arm_t best = detail::validated_best(means, family);
    detail::check_beta(beta);
    std::vector<arm_t> subs;
    for (arm_t i = 0; i < means.size(); ++i) {
        if (i != best) subs.push_back(i);
    }
    const double budget = 1.0 - beta;
    const long steps = static_cast<long>(std::floor(budget / grid_step + 1e-9));
    double best_rate = 0.0;
    auto cost = [&](std::size_t idx, double w) { return population_cost(family, means[best], means[subs[idx]], beta, w); };
    // Depth-first over the free coordinates, carrying the running minimum.
    auto recurse = [&](auto&& self, std::size_t idx, long used, double running_min) -> void {
        if (running_min <= best_rate) return;
        if (idx + 1 == subs.size()) {
            const double last = budget - static_cast<double>(used) * grid_step;
            const double v = std::min(running_min, cost(idx, std::max(last, 0.0)));
            best_rate = std::max(best_rate, v);
            return;
        }
        for (long s = 0; s + used <= steps; ++s) {
            self(self, idx + 1, used + s, std::min(running_min, cost(idx, static_cast<double>(s) * grid_step)));
        }
    };
    recurse(recurse, 0, 0, std::numeric_limits<double>::infinity());
    return best_rate;
}

}  // namespace bai
