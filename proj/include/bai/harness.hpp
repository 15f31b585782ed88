#pragma once
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bai/allocation.hpp"
#include "bai/bandit.hpp"
#include "bai/errors.hpp"
#include "bai/posterior.hpp"
#include "bai/rng.hpp"
#include "bai/rules.hpp"
#include "bai/stopping.hpp"
#include "bai/transport.hpp"

namespace bai {

inline constexpr const char* version = "0.1.0";

struct ExperimentConfig {
    BanditInstance instance;
    SamplingRule rule;
    StoppingCriterion criterion;
    long replications = 1;
    std::uint64_t base_seed = 0;
    long n_max = 1'000'000;  // cap on total pulls
    long trace_stride = 100;
    bool record_trace = false;
    // When false the run is played to n_max (diagnostic runs).
    bool stopping_enabled = true;
    // Rounds between stopping checks; 0 selects 1 for Chernoff, 10 for Bayes.
    long check_every = 0;
    // Per-step wall-clock timing of select_arm; off by default so that the
    // exported records are a pure function of (config, seed).
    bool measure_time = false;
    double quadrature_tol = 1e-10;
    // Worker threads; 0 reads BAI_THREADS, then the hardware concurrency.
    unsigned threads = 0;

    long effective_check_every() const {
        if (check_every > 0) return check_every;
        return criterion.is_bayes() ? 10 : 1;
    }

    void validate() const {
        if (replications < 1) throw config_error("replications must be >= 1");
        if (n_max < static_cast<long>(instance.arms())) throw config_error("n_max must be >= K");
        if (trace_stride < 1) throw config_error("trace_stride must be >= 1");
        if (check_every < 0) throw config_error("check_every must be >= 0");
        if (criterion.arms != instance.arms()) throw config_error("stopping criterion K differs from the instance");
        if (!(quadrature_tol > 0.0)) throw config_error("quadrature_tol must be positive");
    }
};

struct TracePoint {
    long n = 0;                       // total pulls
    std::vector<double> proportions;  // T_{n,i} / n
    double log_one_minus_a = 0.0;     // log(1 - a_{n,I*})
};

struct RunRecord {
    long replication = 0;
    long tau = 0;  // total pulls at stopping (n_max when censored)
    arm_t recommendation = 0;
    bool correct = false;
    bool censored = false;
    double step_time_s = 0.0;  // mean select_arm time, 0 unless measured
    std::vector<long> counts;  // T_{τ,i}
    long fallbacks = 0;        // TTTS challenger draws that hit the resample cap
    std::vector<TracePoint> trace;
};

struct ExperimentSummary {
    long replications = 0;
    long errors = 0;    // runs without a correct recommendation (censored included)
    long censored = 0;
    double error_rate = 0.0;
    double tau_mean = 0.0;
    double tau_median = 0.0;
    double tau_p90 = 0.0;
    double mean_step_time_s = 0.0;
    double tracking_error = 0.0;  // mean over runs of max_i |T_{τ,i}/τ - ω_i|
    std::optional<double> slope;  // mean posterior-convergence slope, when traced
    bool heuristic_guarantee = false;  // δ-correctness only proven for Gaussian
};

struct ConvergenceDiagnostics {
    double slope = 0.0;           // least-squares slope of -log(1 - a_{n,I*}) vs n, last half
    double tracking_error = 0.0;  // max_i |T_{n,i}/n - ω_i| at the final point
};

namespace detail {

struct TrialOutput {
    RunRecord record;
    PosteriorState state;
};

inline TrialOutput run_trial_impl(const ExperimentConfig& config, long replication) {
    const BanditInstance& inst = config.instance;
    RngStream root(config.base_seed, static_cast<std::uint64_t>(replication));
    RngStream reward_rng = root.substream(0);
    RngStream rule_rng = root.substream(1);
    SamplingRule rule = config.rule;
    PosteriorState state(inst.family(), inst.arms());
    RunRecord rec;
    rec.replication = replication;

    if (inst.family().is_gaussian()) {
        for (arm_t i = 0; i < inst.arms(); ++i) state.update(i, sample_reward(inst, i, reward_rng));
        state.begin_rounds();
    }
    const long check_every = config.effective_check_every();
    double time_total = 0.0;
    long timed_steps = 0;
    std::vector<double> a;

    while (true) {
        bool have_a = false;
        if (config.stopping_enabled && state.all_pulled() && state.round() % check_every == 0) {
            StopDecision d;
            if (config.criterion.is_bayes()) {
                a = optimal_action_probabilities(state, config.quadrature_tol);
                have_a = true;
                d = should_stop(config.criterion, state, std::span<const double>(a), std::nullopt);
            } else {
                d = should_stop(config.criterion, state, std::nullopt, glr_statistic(state));
            }
            if (d.stop) {
                rec.tau = state.total_pulls();
                rec.recommendation = *d.recommendation;
                rec.correct = rec.recommendation == inst.best();
                break;
            }
        }
        if (config.record_trace && state.all_pulled() && state.total_pulls() % config.trace_stride == 0) {
            TracePoint p;
            p.n = state.total_pulls();
            for (arm_t i = 0; i < inst.arms(); ++i)
                p.proportions.push_back(static_cast<double>(state.count(i)) / static_cast<double>(p.n));
            p.log_one_minus_a = log_prob_not_optimal(state, inst.best(), config.quadrature_tol);
            rec.trace.push_back(std::move(p));
        }
        if (state.total_pulls() >= config.n_max) {
            rec.censored = true;
            rec.tau = config.n_max;
            rec.recommendation = empirical_recommendation(state);
            rec.correct = false;
            break;
        }
        if (rule.needs_action_probabilities() && !have_a) a = optimal_action_probabilities(state, config.quadrature_tol);
        std::optional<std::span<const double>> a_view;
        if (rule.needs_action_probabilities()) a_view = std::span<const double>(a);

        std::pair<arm_t, SelectionTrace> pick;
        if (config.measure_time) {
            const auto t0 = std::chrono::steady_clock::now();
            pick = select_arm(rule, state, a_view, rule_rng);
            time_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ++timed_steps;
        } else {
            pick = select_arm(rule, state, a_view, rule_rng);
        }
        if (pick.second.fallback) ++rec.fallbacks;
        state.update(pick.first, sample_reward(inst, pick.first, reward_rng));
    }
    rec.step_time_s = timed_steps > 0 ? time_total / static_cast<double>(timed_steps) : 0.0;
    rec.counts.assign(state.counts().begin(), state.counts().end());
    return {std::move(rec), std::move(state)};
}

inline unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BAI_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    // Linear interpolation between order statistics.
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

// One replication; a pure function of (config, replication) unless timing is on.
inline RunRecord run_trial(const ExperimentConfig& config, long replication) {
    config.validate();
    return detail::run_trial_impl(config, replication).record;
}

// The posterior at the end of a replication, e.g. a converged state to benchmark.
inline PosteriorState final_state(const ExperimentConfig& config, long replication) {
    config.validate();
    return detail::run_trial_impl(config, replication).state;
}

// Target allocation the rule's proportions are compared against: ω^β for the
// top-two rules (β = 1/2 for uniform), ω^{β*} for D-Tracking.
inline AllocationResult target_allocation(const ExperimentConfig& config) {
    const auto means = config.instance.means();
    if (std::holds_alternative<DTracking>(config.rule.get()))
        return optimal_allocation(means, config.instance.family());
    return solve_allocation_beta(means, config.instance.family(), config.rule.beta().value_or(0.5));
}

inline ConvergenceDiagnostics convergence_diagnostics(std::span<const TracePoint> trace, const AllocationResult& allocation) {
    if (trace.size() < 10) throw precondition_error("convergence diagnostics need at least 10 trace points");
    const std::size_t start = trace.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(trace.size() - start);
    for (std::size_t k = start; k < trace.size(); ++k) {
        const double x = static_cast<double>(trace[k].n);
        const double y = -trace[k].log_one_minus_a;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    ConvergenceDiagnostics out;
    out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const auto& last = trace.back().proportions;
    for (arm_t i = 0; i < last.size(); ++i)
        out.tracking_error = std::max(out.tracking_error, std::abs(last[i] - allocation.weights.at(i)));
    return out;
}

inline double tracking_error(std::span<const long> counts, const AllocationResult& allocation) {
    double total = 0.0;
    for (long c : counts) total += static_cast<double>(c);
    double e = 0.0;
    for (arm_t i = 0; i < counts.size(); ++i)
        e = std::max(e, std::abs(static_cast<double>(counts[i]) / total - allocation.weights.at(i)));
    return e;
}

// Runs every replication on a worker pool. Results land in a buffer indexed
// by replication, so the output is independent of scheduling.
inline std::vector<RunRecord> run_replications(const ExperimentConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.replications);
    std::vector<RunRecord> records(n);
    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next++; r < n; r = next++) {
            try {
                records[r] = detail::run_trial_impl(config, static_cast<long>(r)).record;
            } catch (...) {
                failures[r] = std::current_exception();
            }
        }
    };
    const unsigned workers = std::min<unsigned>(detail::worker_count(config.threads), static_cast<unsigned>(n));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (!failures[r]) continue;
        try {
            std::rethrow_exception(failures[r]);
        } catch (const numerical_error& e) {
            throw numerical_error("replication " + std::to_string(r) + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(r) + ": " + e.what());
        }
    }
    return records;
}

inline ExperimentSummary summarize(const ExperimentConfig& config, std::span<const RunRecord> records) {
    ExperimentSummary s;
    s.replications = static_cast<long>(records.size());
    s.heuristic_guarantee = config.instance.family().is_bernoulli();
    if (records.empty()) return s;
    const AllocationResult target = target_allocation(config);
    std::vector<double> taus;
    double time_sum = 0.0, track_sum = 0.0, slope_sum = 0.0;
    long slopes = 0;
    for (const auto& r : records) {
        if (!r.correct) ++s.errors;
        if (r.censored) ++s.censored;
        taus.push_back(static_cast<double>(r.tau));
        time_sum += r.step_time_s;
        track_sum += tracking_error(r.counts, target);
        if (r.trace.size() >= 10) {
            slope_sum += convergence_diagnostics(r.trace, target).slope;
            ++slopes;
        }
    }
    const double n = static_cast<double>(records.size());
    s.error_rate = static_cast<double>(s.errors) / n;
    double tau_sum = 0.0;
    for (double t : taus) tau_sum += t;
    s.tau_mean = tau_sum / n;
    s.tau_median = detail::quantile(taus, 0.5);
    s.tau_p90 = detail::quantile(taus, 0.9);
    s.mean_step_time_s = time_sum / n;
    s.tracking_error = track_sum / n;
    if (slopes > 0) s.slope = slope_sum / static_cast<double>(slopes);
    return s;
}

inline ExperimentSummary run_experiment(const ExperimentConfig& config) {
    const auto records = run_replications(config);
    return summarize(config, records);
}

struct BenchmarkResult {
    double mean_s = 0.0;
    long iterations = 0;
    std::vector<arm_t> decisions;
};

// Mean wall-clock of select_arm at a frozen state (no reward sampling or
// posterior update). TTPS pays for its action probabilities inside the timer.
inline BenchmarkResult benchmark_step_time(const SamplingRule& rule, const PosteriorState& state, long iterations,
                                           std::uint64_t seed = 0) {
    if (iterations < 1) throw config_error("benchmark needs at least one iteration");
    SamplingRule local = rule;
    RngStream rng(seed, 0);
    BenchmarkResult out;
    out.iterations = iterations;
    out.decisions.reserve(static_cast<std::size_t>(iterations));
    const auto t0 = std::chrono::steady_clock::now();
    for (long it = 0; it < iterations; ++it) {
        std::vector<double> a;
        std::optional<std::span<const double>> view;
        if (local.needs_action_probabilities()) {
            a = optimal_action_probabilities(state);
            view = std::span<const double>(a);
        }
        out.decisions.push_back(select_arm(local, state, view, rng).first);
    }
    out.mean_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
                 static_cast<double>(iterations);
    return out;
}

}  // namespace bai
