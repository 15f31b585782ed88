#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bai/errors.hpp"
#include "bai/rng.hpp"

namespace bai {

using arm_t = std::size_t;

// Reward model of every arm: Gaussian with known common σ, or Bernoulli.
class RewardFamily {
public:
    enum class Kind { gaussian, bernoulli };

    static RewardFamily gaussian(double sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw config_error("gaussian family requires sigma > 0");
        return RewardFamily(Kind::gaussian, sigma);
    }
    static RewardFamily bernoulli() { return RewardFamily(Kind::bernoulli, 0.0); }

    Kind kind() const noexcept { return kind_; }
    bool is_gaussian() const noexcept { return kind_ == Kind::gaussian; }
    bool is_bernoulli() const noexcept { return kind_ == Kind::bernoulli; }
    // Only meaningful for the Gaussian family.
    double sigma() const noexcept { return sigma_; }

    std::string name() const { return is_gaussian() ? "gaussian" : "bernoulli"; }

    friend bool operator==(const RewardFamily&, const RewardFamily&) = default;

private:
    RewardFamily(Kind k, double s) : kind_(k), sigma_(s) {}
    Kind kind_;
    double sigma_;
};

// Bernoulli relative entropy kl(p; q) with 0·ln 0 = 0.
// Returns +infinity when q ∈ {0, 1} and p ≠ q; callers minimizing over
// divergences treat that value as an infinite cost.
inline double bernoulli_kl(double p, double q) noexcept {
    if (p == q) return 0.0;
    if (q <= 0.0 || q >= 1.0) return std::numeric_limits<double>::infinity();
    double r = 0.0;
    if (p > 0.0) r += p * std::log(p / q);
    if (p < 1.0) r += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return std::max(r, 0.0);
}

inline bool is_infinite_divergence(double d) noexcept { return std::isinf(d); }

// d(mu1; mu2): KL divergence between the family members with means mu1 and mu2.
inline double kl_div(const RewardFamily& family, double mu1, double mu2) {
    if (family.is_gaussian()) {
        const double diff = mu1 - mu2;
        return diff * diff / (2.0 * family.sigma() * family.sigma());
    }
    if (!(mu1 >= 0.0 && mu1 <= 1.0) || !(mu2 >= 0.0 && mu2 <= 1.0))
        throw config_error("bernoulli kl requires means in [0, 1]");
    return bernoulli_kl(mu1, mu2);
}

// A K-armed bandit with a unique best arm.
class BanditInstance {
public:
    BanditInstance(RewardFamily family, std::vector<double> means)
        : family_(family), means_(std::move(means)) {
        if (means_.size() < 2) throw config_error("a bandit needs at least 2 arms");
        for (double m : means_) {
            if (!std::isfinite(m)) throw config_error("arm means must be finite");
            if (family_.is_bernoulli() && !(m > 0.0 && m < 1.0))
                throw config_error("bernoulli means must lie strictly inside (0, 1)");
        }
        best_ = static_cast<arm_t>(std::max_element(means_.begin(), means_.end()) - means_.begin());
        double runner_up = -std::numeric_limits<double>::infinity();
        for (arm_t i = 0; i < means_.size(); ++i) {
            if (i == best_) continue;
            if (means_[i] == means_[best_])
                throw config_error("best arm is not unique (tied maximal means)");
            runner_up = std::max(runner_up, means_[i]);
        }
        near_tie_ = means_[best_] - runner_up < 1e-12;
    }

    const RewardFamily& family() const noexcept { return family_; }
    std::span<const double> means() const noexcept { return means_; }
    double mean(arm_t i) const { return means_.at(i); }
    std::size_t arms() const noexcept { return means_.size(); }
    arm_t best() const noexcept { return best_; }
    // The top-two gap is below 1e-12: the instance is valid but numerically fragile.
    bool near_tie() const noexcept { return near_tie_; }

private:
    RewardFamily family_;
    std::vector<double> means_;
    arm_t best_ = 0;
    bool near_tie_ = false;
};

inline arm_t best_arm(const BanditInstance& instance) noexcept { return instance.best(); }

inline double sample_reward(const BanditInstance& instance, arm_t arm, RngStream& rng) {
    if (arm >= instance.arms()) throw std::out_of_range("arm index out of range");
    const double mu = instance.mean(arm);
    if (instance.family().is_gaussian()) return rng.normal(mu, instance.family().sigma());
    return rng.bernoulli(mu) ? 1.0 : 0.0;
}

// The two instances used throughout the experiments.
inline std::vector<double> reference_means_1() { return {0.5, 0.9, 0.4, 0.45, 0.44999}; }
inline std::vector<double> reference_means_2() { return {1.0, 0.8, 0.75, 0.7}; }

}  // namespace bai
