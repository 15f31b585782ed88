#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bai/allocation.hpp"
#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/posterior.hpp"
#include "bai/rng.hpp"
#include "bai/special.hpp"
#include "bai/transport.hpp"

namespace bai {

enum class SelectionRole { leader, challenger, forced };

inline std::string to_string(SelectionRole r) {
    switch (r) {
        case SelectionRole::leader: return "leader";
        case SelectionRole::challenger: return "challenger";
        case SelectionRole::forced: return "forced";
    }
    return "?";
}

struct SelectionTrace {
    arm_t arm = 0;
    SelectionRole role = SelectionRole::leader;
    long resamples = 0;        // TTTS: posterior redraws spent finding the challenger
    std::size_t tie_size = 1;  // size of the tie set the final choice was drawn from
    bool fallback = false;     // TTTS: resample cap hit, challenger drawn from its exact law
};

namespace detail {

// Index of the maximum (or minimum) with ties broken uniformly at random; the
// rng is only consumed when there is an actual tie.
template <class Better>
std::pair<arm_t, std::size_t> select_extreme(std::span<const double> v, Better better, RngStream& rng,
                                             std::optional<arm_t> exclude = std::nullopt) {
    arm_t best = v.size();
    std::size_t ties = 0;
    for (arm_t i = 0; i < v.size(); ++i) {
        if (exclude && *exclude == i) continue;
        if (best == v.size() || better(v[i], v[best])) {
            best = i;
            ties = 1;
        } else if (v[i] == v[best]) {
            ++ties;
        }
    }
    if (ties <= 1) return {best, 1};
    std::size_t pick = rng.index(ties);
    for (arm_t i = 0; i < v.size(); ++i) {
        if (exclude && *exclude == i) continue;
        if (v[i] == v[best] && pick-- == 0) return {i, ties};
    }
    return {best, ties};
}

inline std::pair<arm_t, std::size_t> argmax_random(std::span<const double> v, RngStream& rng,
                                                   std::optional<arm_t> exclude = std::nullopt) {
    return select_extreme(v, [](double a, double b) { return a > b; }, rng, exclude);
}

inline std::pair<arm_t, std::size_t> argmin_random(std::span<const double> v, RngStream& rng,
                                                   std::optional<arm_t> exclude = std::nullopt) {
    return select_extreme(v, [](double a, double b) { return a < b; }, rng, exclude);
}

// argmin_{j≠leader} W_n(leader, j), random ties.
inline std::pair<arm_t, std::size_t> cheapest_challenger(const PosteriorState& state, arm_t leader, RngStream& rng) {
    std::vector<double> w(state.arms(), 0.0);
    for (arm_t j = 0; j < state.arms(); ++j) {
        if (j != leader) w[j] = transportation_cost(state, leader, j);
    }
    return argmin_random(w, rng, leader);
}

inline arm_t least_pulled(const PosteriorState& state, RngStream& rng, std::size_t& ties) {
    std::vector<double> t(state.arms());
    for (arm_t i = 0; i < state.arms(); ++i) t[i] = static_cast<double>(state.count(i));
    auto [arm, n] = argmin_random(t, rng);
    ties = n;
    return arm;
}

inline void check_rule_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw config_error("rule beta must lie in (0, 1)");
}

}  // namespace detail

// Top-two Thompson sampling: leader = argmax of a posterior draw; with
// probability 1-β, redraw until a different argmax appears and play it.
struct Ttts {
    double beta = 0.5;
    // After this many redraws the challenger is drawn from its exact conditional
    // law a_j / Σ_{k≠leader} a_k (computed by quadrature), which is the law of
    // the first redraw whose argmax differs from the leader.
    long resample_cap = 1'000'000;
};

// Top-two transportation cost: leader as in TTTS, challenger = argmin W_n(leader, ·).
struct T3c {
    double beta = 0.5;
};

// Top-two probability sampling: leader/challenger = first/second argmax of a_n.
struct Ttps {
    double beta = 0.5;
};

// Top-two best challenger with forced exploration of arms pulled < √n times.
struct BestChallenger {
    double beta = 0.5;
};

// Direct tracking of the optimal allocation at the empirical means, with
// forced exploration when min_i T_i < √n - K/2.
struct DTracking {
    std::optional<AllocationResult> last_allocation;
};

struct Uniform {};

class SamplingRule {
public:
    using Variant = std::variant<Ttts, T3c, Ttps, BestChallenger, DTracking, Uniform>;

    template <class R>
        requires std::is_constructible_v<Variant, R>
    SamplingRule(R r) : rule_(std::move(r)) {  // NOLINT(google-explicit-constructor)
        std::visit(
            [](const auto& r) {
                if constexpr (requires { r.beta; }) detail::check_rule_beta(r.beta);
            },
            rule_);
    }

    // Parses {ttts,t3c,ttps,bc,dtracking,uniform}.
    static SamplingRule from_name(const std::string& name, double beta = 0.5) {
        if (name == "ttts") return Ttts{beta};
        if (name == "t3c") return T3c{beta};
        if (name == "ttps") return Ttps{beta};
        if (name == "bc") return BestChallenger{beta};
        if (name == "dtracking") return DTracking{};
        if (name == "uniform") return Uniform{};
        throw config_error("unknown sampling rule '" + name + "'");
    }

    std::string name() const {
        return std::visit(
            [](const auto& r) -> std::string {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, Ttts>) return "ttts";
                else if constexpr (std::is_same_v<R, T3c>) return "t3c";
                else if constexpr (std::is_same_v<R, Ttps>) return "ttps";
                else if constexpr (std::is_same_v<R, BestChallenger>) return "bc";
                else if constexpr (std::is_same_v<R, DTracking>) return "dtracking";
                else return "uniform";
            },
            rule_);
    }

    // β of top-two rules; nullopt for D-Tracking and uniform.
    std::optional<double> beta() const {
        return std::visit(
            [](const auto& r) -> std::optional<double> {
                if constexpr (requires { r.beta; }) return r.beta;
                else return std::nullopt;
            },
            rule_);
    }

    bool needs_action_probabilities() const { return std::holds_alternative<Ttps>(rule_); }

    Variant& get() { return rule_; }
    const Variant& get() const { return rule_; }

private:
    Variant rule_;
};

namespace detail {

inline std::pair<arm_t, SelectionTrace> select(Ttts& r, const PosteriorState& state, RngStream& rng) {
    const auto params = all_params(state);
    std::vector<double> theta(state.arms());
    sample_theta_into(state, params, rng, theta);
    SelectionTrace tr;
    auto [leader, ties] = argmax_random(theta, rng);
    tr.tie_size = ties;
    if (rng.uniform() < r.beta) {
        tr.arm = leader;
        return {leader, tr};
    }
    tr.role = SelectionRole::challenger;
    while (tr.resamples < r.resample_cap) {
        sample_theta_into(state, params, rng, theta);
        ++tr.resamples;
        auto [c, n] = argmax_random(theta, rng);
        if (c != leader) {
            tr.arm = c;
            tr.tie_size = n;
            return {c, tr};
        }
    }
    tr.fallback = true;
    const auto logm = log_action_masses_excluding(state, leader);
    double top = special::neg_inf;
    for (double v : logm) top = std::max(top, v);
    std::vector<double> cum(state.arms(), 0.0);
    double acc = 0.0;
    for (arm_t j = 0; j < state.arms(); ++j) {
        acc += (j == leader) ? 0.0 : std::exp(logm[j] - top);
        cum[j] = acc;
    }
    const double u = rng.uniform() * acc;
    arm_t pick = state.arms() - 1;
    for (arm_t j = 0; j < state.arms(); ++j) {
        if (j != leader && u < cum[j]) {
            pick = j;
            break;
        }
    }
    if (pick == leader) pick = (leader == 0) ? 1 : 0;
    tr.arm = pick;
    return {pick, tr};
}

inline std::pair<arm_t, SelectionTrace> select(T3c& r, const PosteriorState& state, RngStream& rng) {
    const auto theta = sample_theta(state, rng);
    SelectionTrace tr;
    auto [leader, ties] = argmax_random(theta, rng);
    tr.tie_size = ties;
    if (rng.uniform() < r.beta) {
        tr.arm = leader;
        return {leader, tr};
    }
    auto [c, n] = cheapest_challenger(state, leader, rng);
    tr.role = SelectionRole::challenger;
    tr.arm = c;
    tr.tie_size = n;
    return {c, tr};
}

inline std::pair<arm_t, SelectionTrace> select(Ttps& r, const PosteriorState& state,
                                               std::optional<std::span<const double>> a, RngStream& rng) {
    if (!a) throw config_error("ttps needs the optimal action probabilities");
    if (a->size() != state.arms()) throw config_error("action probability vector has the wrong size");
    SelectionTrace tr;
    auto [leader, ties] = argmax_random(*a, rng);
    tr.tie_size = ties;
    if (rng.uniform() < r.beta) {
        tr.arm = leader;
        return {leader, tr};
    }
    auto [c, n] = argmax_random(*a, rng, leader);
    tr.role = SelectionRole::challenger;
    tr.arm = c;
    tr.tie_size = n;
    return {c, tr};
}

inline std::pair<arm_t, SelectionTrace> select(BestChallenger& r, const PosteriorState& state, RngStream& rng) {
    SelectionTrace tr;
    const double root = std::sqrt(static_cast<double>(state.total_pulls()));
    double fewest = std::numeric_limits<double>::infinity();
    for (arm_t i = 0; i < state.arms(); ++i) fewest = std::min(fewest, static_cast<double>(state.count(i)));
    if (fewest < root) {
        tr.role = SelectionRole::forced;
        tr.arm = least_pulled(state, rng, tr.tie_size);
        return {tr.arm, tr};
    }
    const auto means = state.empirical_means();
    auto [leader, ties] = argmax_random(means, rng);
    tr.tie_size = ties;
    if (rng.uniform() < r.beta) {
        tr.arm = leader;
        return {leader, tr};
    }
    auto [c, n] = cheapest_challenger(state, leader, rng);
    tr.role = SelectionRole::challenger;
    tr.arm = c;
    tr.tie_size = n;
    return {c, tr};
}

// Empirical means prepared for the allocation solver: Bernoulli means kept
// inside (0, 1) and the top mean separated from ties by 1e-9.
inline std::vector<double> solver_means(const PosteriorState& state, RngStream& rng) {
    auto means = state.empirical_means();
    if (state.family().is_bernoulli()) {
        for (double& m : means) m = std::clamp(m, 1e-6, 1.0 - 1e-6);
    }
    auto [best, ties] = argmax_random(means, rng);
    (void)ties;
    for (arm_t i = 0; i < means.size(); ++i) {
        if (i != best && means[i] > means[best] - 1e-9) means[i] = means[best] - 1e-9;
    }
    return means;
}

inline std::pair<arm_t, SelectionTrace> select(DTracking& r, const PosteriorState& state, RngStream& rng) {
    SelectionTrace tr;
    const double t = static_cast<double>(state.total_pulls());
    const double k = static_cast<double>(state.arms());
    double fewest = std::numeric_limits<double>::infinity();
    for (arm_t i = 0; i < state.arms(); ++i) fewest = std::min(fewest, static_cast<double>(state.count(i)));
    if (fewest < std::sqrt(t) - k / 2.0 || !state.all_pulled()) {
        tr.role = SelectionRole::forced;
        tr.arm = least_pulled(state, rng, tr.tie_size);
        return {tr.arm, tr};
    }
    const auto means = solver_means(state, rng);
    r.last_allocation = optimal_allocation(means, state.family(), 1e-6, false);
    std::vector<double> deficit(state.arms());
    for (arm_t i = 0; i < state.arms(); ++i)
        deficit[i] = t * r.last_allocation->weights[i] - static_cast<double>(state.count(i));
    auto [arm, ties] = argmax_random(deficit, rng);
    tr.arm = arm;
    tr.tie_size = ties;
    return {arm, tr};
}

inline std::pair<arm_t, SelectionTrace> select(Uniform&, const PosteriorState& state, RngStream&) {
    SelectionTrace tr;
    tr.arm = static_cast<arm_t>(state.round() % static_cast<long>(state.arms()));
    return {tr.arm, tr};
}

}  // namespace detail

// One round of the sampling rule. `a` (the optimal action probabilities) is
// required by TTPS and ignored by the other rules.
inline std::pair<arm_t, SelectionTrace> select_arm(SamplingRule& rule, const PosteriorState& state,
                                                   std::optional<std::span<const double>> a, RngStream& rng) {
    return std::visit(
        [&](auto& r) -> std::pair<arm_t, SelectionTrace> {
            using R = std::decay_t<decltype(r)>;
            if constexpr (!std::is_same_v<R, Uniform>) require_proper(state);
            if constexpr (std::is_same_v<R, Ttps>)
                return detail::select(r, state, a, rng);
            else
                return detail::select(r, state, rng);
        },
        rule.get());
}

// Analytic selection probabilities ψ_{n,i} = P(I_n = i | F_{n-1}).
//   TTTS: ψ_i = β a_i + (1-β) a_i Σ_{j≠i} a_j / (1 - a_j)
//   T3C:  ψ_i = β a_i + (1-β) Σ_{j≠i} a_j 1{i ∈ argmin_{k≠j} W(j,k)} / |argmin_{k≠j} W(j,k)|
// Requires every a_j < 1 for TTTS.
enum class TopTwoKind { ttts, t3c };

inline std::vector<double> selection_probabilities(TopTwoKind kind, double beta, std::span<const double> a,
                                                   const CostMatrix& w) {
    const std::size_t k = a.size();
    if (w.arms() != k) throw config_error("cost matrix and action probabilities disagree on K");
    std::vector<double> psi(k, 0.0);
    if (kind == TopTwoKind::ttts) {
        for (arm_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (arm_t j = 0; j < k; ++j) {
                if (j != i) s += a[j] / (1.0 - a[j]);
            }
            psi[i] = beta * a[i] + (1.0 - beta) * a[i] * s;
        }
        return psi;
    }
    for (arm_t i = 0; i < k; ++i) psi[i] = beta * a[i];
    for (arm_t j = 0; j < k; ++j) {
        const double m = w.row_min(j);
        std::size_t count = 0;
        for (arm_t i = 0; i < k; ++i) {
            if (i != j && w(j, i) == m) ++count;
        }
        for (arm_t i = 0; i < k; ++i) {
            if (i != j && w(j, i) == m) psi[i] += (1.0 - beta) * a[j] / static_cast<double>(count);
        }
    }
    return psi;
}

}  // namespace bai
