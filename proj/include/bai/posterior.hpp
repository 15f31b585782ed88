#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/numeric.hpp"
#include "bai/quadrature.hpp"
#include "bai/rng.hpp"
#include "bai/special.hpp"

namespace bai {

// Conjugate posterior parameters of one arm.
//   Gaussian (improper flat prior): N(mean, variance) with variance = σ²/T.
//   Bernoulli (uniform Beta(1,1) prior): Beta(alpha, beta) with alpha = S+1, beta = T-S+1.
struct PosteriorParams {
    double mean = 0.0;
    double variance = 0.0;
    double alpha = 1.0;
    double beta = 1.0;

    double sd() const { return std::sqrt(variance); }
};

// Pull counts and reward sums of every arm.
//
// round() counts the rounds played after initialization. For the Gaussian
// family the harness pulls each arm once and then calls begin_rounds(), which
// records those K pulls as the initialization offset; for Bernoulli the prior
// is proper and the offset stays 0. round() == total_pulls() - init_offset().
class PosteriorState {
public:
    PosteriorState(RewardFamily family, std::size_t arms)
        : family_(family), counts_(arms, 0), sums_(arms, 0.0) {
        if (arms < 2) throw config_error("posterior state needs at least 2 arms");
    }

    const RewardFamily& family() const noexcept { return family_; }
    std::size_t arms() const noexcept { return counts_.size(); }
    std::span<const long> counts() const noexcept { return counts_; }
    std::span<const double> sums() const noexcept { return sums_; }
    long count(arm_t i) const { return counts_.at(i); }
    double sum(arm_t i) const { return sums_.at(i); }
    long round() const noexcept { return round_; }
    long init_offset() const noexcept { return offset_; }
    long total_pulls() const noexcept { return round_ + offset_; }

    bool all_pulled() const noexcept {
        return std::all_of(counts_.begin(), counts_.end(), [](long t) { return t > 0; });
    }

    // In-place Bayes update after observing `reward` on `arm`.
    void update(arm_t arm, double reward) {
        if (arm >= arms()) throw std::out_of_range("arm index out of range");
        if (family_.is_bernoulli() && reward != 0.0 && reward != 1.0)
            throw config_error("bernoulli reward must be 0 or 1");
        if (!std::isfinite(reward)) throw config_error("reward must be finite");
        ++counts_[arm];
        sums_[arm] += reward;
        ++round_;
    }

    // Marks the end of forced initialization: pulls so far become the offset.
    void begin_rounds() noexcept {
        offset_ += round_;
        round_ = 0;
    }

    // Empirical mean S/T; for an unpulled Bernoulli arm, the prior mean 1/2.
    double empirical_mean(arm_t i) const {
        const long t = counts_.at(i);
        if (t == 0) {
            if (family_.is_bernoulli()) return 0.5;
            throw precondition_error("gaussian arm " + std::to_string(i) + " has not been pulled");
        }
        return sums_[i] / static_cast<double>(t);
    }

    std::vector<double> empirical_means() const {
        std::vector<double> m(arms());
        for (arm_t i = 0; i < arms(); ++i) m[i] = empirical_mean(i);
        return m;
    }

    PosteriorParams params(arm_t i) const {
        const long t = counts_.at(i);
        PosteriorParams p;
        if (family_.is_gaussian()) {
            if (t == 0)
                throw precondition_error("improper posterior: gaussian arm " + std::to_string(i) +
                                         " has not been pulled");
            p.mean = sums_[i] / static_cast<double>(t);
            p.variance = family_.sigma() * family_.sigma() / static_cast<double>(t);
            return p;
        }
        p.alpha = sums_[i] + 1.0;
        p.beta = static_cast<double>(t) - sums_[i] + 1.0;
        const double ab = p.alpha + p.beta;
        p.mean = p.alpha / ab;
        p.variance = p.alpha * p.beta / (ab * ab * (ab + 1.0));
        return p;
    }

private:
    RewardFamily family_;
    std::vector<long> counts_;
    std::vector<double> sums_;
    long round_ = 0;
    long offset_ = 0;
};

// Value-returning update.
inline PosteriorState update(PosteriorState state, arm_t arm, double reward) {
    state.update(arm, reward);
    return state;
}

inline void require_proper(const PosteriorState& state) {
    if (state.family().is_gaussian() && !state.all_pulled())
        throw precondition_error("improper posterior: every gaussian arm must be pulled once");
}

// One joint draw θ ~ Π_n (independent across arms).
inline std::vector<double> sample_theta(const PosteriorState& state, RngStream& rng) {
    require_proper(state);
    std::vector<double> theta(state.arms());
    for (arm_t i = 0; i < state.arms(); ++i) {
        const PosteriorParams p = state.params(i);
        theta[i] = state.family().is_gaussian() ? rng.normal(p.mean, p.sd()) : rng.beta(p.alpha, p.beta);
    }
    return theta;
}

// Writes a draw into `theta` without allocating; used by the hot loops of the
// sampling rules.
inline void sample_theta_into(const PosteriorState& state, std::span<const PosteriorParams> params,
                              RngStream& rng, std::span<double> theta) {
    if (state.family().is_gaussian()) {
        for (arm_t i = 0; i < theta.size(); ++i) theta[i] = rng.normal(params[i].mean, params[i].sd());
    } else {
        for (arm_t i = 0; i < theta.size(); ++i) theta[i] = rng.beta(params[i].alpha, params[i].beta);
    }
}

inline std::vector<PosteriorParams> all_params(const PosteriorState& state) {
    std::vector<PosteriorParams> p(state.arms());
    for (arm_t i = 0; i < state.arms(); ++i) p[i] = state.params(i);
    return p;
}

// ---------------------------------------------------------------------------
// Optimal action probabilities a_i = Π_n(θ_i > max_{j≠i} θ_j)
// ---------------------------------------------------------------------------

struct ActionProbabilities {
    std::vector<double> probabilities;  // renormalized to sum to 1
    std::vector<double> log_masses;     // log a_i before renormalization
    double defect = 0.0;                // |Σ a_i - 1| before renormalization
    int panels = 0;                     // total quadrature panels used
};

namespace detail {

// Per-arm log-density and log-cdf of the posterior marginals.
class MarginalSet {
public:
    explicit MarginalSet(const PosteriorState& state) : gaussian_(state.family().is_gaussian()) {
        require_proper(state);
        params_ = all_params(state);
        if (!gaussian_) {
            log_beta_.resize(params_.size());
            for (std::size_t i = 0; i < params_.size(); ++i)
                log_beta_[i] = special::log_beta_fn(params_[i].alpha, params_[i].beta);
        }
    }

    std::size_t size() const { return params_.size(); }
    const PosteriorParams& operator[](std::size_t i) const { return params_[i]; }
    bool gaussian() const { return gaussian_; }

    double log_pdf(std::size_t i, double x) const {
        const auto& p = params_[i];
        if (gaussian_) {
            const double z = (x - p.mean) / p.sd();
            return -0.5 * z * z - std::log(p.sd()) - 0.5 * std::log(2.0 * std::numbers::pi);
        }
        return special::log_beta_pdf(x, p.alpha, p.beta, log_beta_[i]);
    }

    double log_cdf(std::size_t i, double x) const {
        const auto& p = params_[i];
        if (gaussian_) return special::log_normal_cdf((x - p.mean) / p.sd());
        return special::log_ibeta(x, p.alpha, p.beta, log_beta_[i]);
    }

    // log of pdf_i(x) · Π_{j≠i} cdf_j(x); concave in x for both families.
    double log_integrand(std::size_t i, double x) const {
        double v = log_pdf(i, x);
        for (std::size_t j = 0; j < params_.size() && v > special::neg_inf; ++j) {
            if (j != i) v += log_cdf(j, x);
        }
        return v;
    }

private:
    bool gaussian_;
    std::vector<PosteriorParams> params_;
    std::vector<double> log_beta_;
};

struct LogMass {
    double value;
    int panels;
};

// log ∫ pdf_i Π_{j≠i} cdf_j, integrated relative to the integrand's peak so
// that masses far below the double-precision floor keep full relative accuracy.
inline LogMass log_action_mass(const MarginalSet& m, std::size_t i, double rel_tol) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double min_sd = lo;
    for (std::size_t k = 0; k < m.size(); ++k) {
        lo = std::min(lo, m[k].mean - 8.0 * m[k].sd());
        hi = std::max(hi, m[k].mean + 8.0 * m[k].sd());
        min_sd = std::min(min_sd, m[k].sd());
    }
    if (!m.gaussian()) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, 1.0);
    }
    auto neg = [&](double x) { return -m.log_integrand(i, x); };
    const auto peak = numeric::golden_section_minimize(neg, lo, hi, 1e-3 * min_sd);
    const double log_peak = -peak.value;
    if (!std::isfinite(log_peak)) return {special::neg_inf, 0};

    const double width = min_sd / std::sqrt(static_cast<double>(m.size()));
    double dom_lo = std::min(lo, peak.x - 128.0 * width);
    double dom_hi = std::max(hi, peak.x + 128.0 * width);
    if (!m.gaussian()) {
        dom_lo = 0.0;
        dom_hi = 1.0;
    }
    std::vector<double> breaks{dom_lo, dom_hi, peak.x};
    for (double s = width; s <= 128.0 * width; s *= 2.0) {
        breaks.push_back(peak.x - s);
        breaks.push_back(peak.x + s);
    }
    for (std::size_t k = 0; k < m.size(); ++k) breaks.push_back(m[k].mean);
    std::erase_if(breaks, [&](double b) { return b < dom_lo || b > dom_hi; });
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto scaled = [&](double x) {
        const double v = m.log_integrand(i, x) - log_peak;
        return v > -745.0 ? std::exp(v) : 0.0;
    };
    const auto r = quadrature::integrate(scaled, breaks, rel_tol, 0.0);
    if (!(r.value > 0.0))
        throw numerical_error("optimal action probability quadrature returned a non-positive mass for arm " +
                              std::to_string(i));
    return {log_peak + std::log(r.value), r.panels};
}

}  // namespace detail

// a_{n,i} for every arm, each to relative (hence absolute) accuracy `tol`,
// with the pre-normalization defect reported.
inline ActionProbabilities action_probability_details(const PosteriorState& state, double tol = 1e-10) {
    if (!(tol > 0.0)) throw config_error("quadrature tolerance must be positive");
    const detail::MarginalSet m(state);
    const double rel = std::max(tol, 1e-13);
    ActionProbabilities out;
    out.log_masses.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto lm = detail::log_action_mass(m, i, rel);
        out.log_masses[i] = lm.value;
        out.panels += lm.panels;
    }
    double total = 0.0;
    out.probabilities.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out.probabilities[i] = std::exp(out.log_masses[i]);
        total += out.probabilities[i];
    }
    out.defect = std::abs(total - 1.0);
    for (double& p : out.probabilities) p /= total;
    return out;
}

inline std::vector<double> optimal_action_probabilities(const PosteriorState& state, double tol = 1e-10) {
    return action_probability_details(state, tol).probabilities;
}

// log(1 - a_{n,arm}) = log Σ_{i≠arm} a_{n,i}; finite even when 1 - a underflows.
inline double log_prob_not_optimal(const PosteriorState& state, arm_t arm, double tol = 1e-10) {
    const detail::MarginalSet m(state);
    double acc = special::neg_inf;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == arm) continue;
        acc = special::logaddexp(acc, detail::log_action_mass(m, i, std::max(tol, 1e-13)).value);
    }
    return acc;
}

// Log-masses of every arm except `skip`, used to draw a TTTS challenger from
// its exact conditional law a_j / Σ_{k≠skip} a_k.
inline std::vector<double> log_action_masses_excluding(const PosteriorState& state, arm_t skip,
                                                       double tol = 1e-8) {
    const detail::MarginalSet m(state);
    std::vector<double> out(m.size(), special::neg_inf);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i != skip) out[i] = detail::log_action_mass(m, i, tol).value;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tail bounds
// ---------------------------------------------------------------------------

struct TailBoundPair {
    double lower;
    double upper;
};

// Bounds on Π_n[θ_i ≥ θ_j] for a Gaussian posterior with μ_{n,i} ≤ μ_{n,j}:
//   upper = ½ exp(-gap² / (2 s²)),  lower = exp(-(gap + s)² / (2 s²)) / √(2π),
// where s² = σ²/T_i + σ²/T_j.
inline TailBoundPair gaussian_tail_bounds(const PosteriorState& state, arm_t i, arm_t j) {
    if (!state.family().is_gaussian()) throw precondition_error("gaussian_tail_bounds needs a gaussian posterior");
    const PosteriorParams pi = state.params(i), pj = state.params(j);
    if (pi.mean > pj.mean) throw precondition_error("gaussian_tail_bounds requires mu_i <= mu_j");
    const double s2 = pi.variance + pj.variance;
    const double s = std::sqrt(s2);
    const double gap = pj.mean - pi.mean;
    return {std::exp(-(gap + s) * (gap + s) / (2.0 * s2)) / std::sqrt(2.0 * std::numbers::pi),
            0.5 * std::exp(-gap * gap / (2.0 * s2))};
}

// Exact Π_n[θ_i ≥ θ_j] = Φ((μ_i - μ_j)/s) for a Gaussian posterior.
inline double gaussian_pairwise_probability(const PosteriorState& state, arm_t i, arm_t j) {
    const PosteriorParams pi = state.params(i), pj = state.params(j);
    return special::normal_cdf((pi.mean - pj.mean) / std::sqrt(pi.variance + pj.variance));
}

struct BetaTailBound {
    double C;
    double D;
    double bound;
};

// C_{a,b}(y) = (a+b-1) kl((a-1)/(a+b-1); y).
inline double beta_rate(double a, double b, double y) {
    return (a + b - 1.0) * bernoulli_kl((a - 1.0) / (a + b - 1.0), y);
}

// Upper bound P[X > Y] ≤ D e^{-C} for X ~ Beta(a, b), Y ~ Beta(c, d) whose
// modes satisfy 0 < (a-1)/(a+b-1) < (c-1)/(c+d-1).
inline BetaTailBound beta_tail_bound(int a, int b, int c, int d) {
    if (a < 1 || b < 1 || c < 1 || d < 1) throw precondition_error("beta_tail_bound needs a, b, c, d >= 1");
    const double A = a, B = b, Cc = c, Dd = d;
    const double p = (A - 1.0) / (A + B - 1.0);
    const double q = (Cc - 1.0) / (Cc + Dd - 1.0);
    if (!(0.0 < p && p < q))
        throw precondition_error("beta_tail_bound requires 0 < (a-1)/(a+b-1) < (c-1)/(c+d-1)");
    auto objective = [&](double y) { return beta_rate(A, B, y) + beta_rate(Cc, Dd, y); };
    const auto m = numeric::golden_section_minimize(objective, p, q, 1e-10);
    const double C = m.value;
    const double D = 3.0 + std::min(beta_rate(A, B, q), beta_rate(Cc, Dd, p));
    return {C, D, std::min(1.0, D * std::exp(-C))};
}

}  // namespace bai
