// Command-line front end: solve-allocation, run, bench, diagnose.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "bai/allocation.hpp"
#include "bai/export.hpp"
#include "bai/harness.hpp"

using namespace bai;

namespace {

// Flags shared by every subcommand. Flags that were given override the
// --config file; the merged JSON goes through the same parser as config files.
struct CommonFlags {
    std::string config_file;
    std::string instance = "mu1";
    std::vector<double> means;
    std::string family = "gaussian";
    double sigma = 1.0;
    std::string rule = "t3c";
    double beta = 0.5;
    long resample_cap = 1'000'000;
    std::string stopping = "chernoff";
    std::string threshold_variant = "theorem1";
    double delta = 0.01;
    long check_every = 0;
    long replications = 1;
    std::uint64_t seed = 0;
    long n_max = 1'000'000;
    unsigned threads = 0;
    bool timing = false;

    std::map<std::string, CLI::Option*> opts;

    void add(CLI::App& app) {
        opts["config"] = app.add_option("--config", config_file, "JSON config (keys as in ExperimentConfig)");
        opts["instance"] = app.add_option("--instance", instance, "Reference instance: mu1 or mu2")
                               ->check(CLI::IsMember({"mu1", "mu2"}));
        opts["means"] = app.add_option("--means", means, "Arm means (overrides --instance)")->delimiter(',');
        opts["family"] = app.add_option("--family", family, "gaussian or bernoulli")
                             ->check(CLI::IsMember({"gaussian", "bernoulli"}));
        opts["sigma"] = app.add_option("--sigma", sigma, "Gaussian noise level");
        opts["rule"] = app.add_option("--rule", rule, "ttts, t3c, ttps, bc, dtracking, uniform")
                           ->check(CLI::IsMember({"ttts", "t3c", "ttps", "bc", "dtracking", "uniform"}));
        opts["beta"] = app.add_option("--beta", beta, "Leader probability of top-two rules");
        opts["resample_cap"] = app.add_option("--resample-cap", resample_cap, "TTTS redraw cap per round");
        opts["stopping"] = app.add_option("--stopping", stopping, "bayes or chernoff")
                               ->check(CLI::IsMember({"bayes", "chernoff"}));
        opts["threshold_variant"] = app.add_option("--threshold-variant", threshold_variant, "theorem1 or closed-form")
                                        ->check(CLI::IsMember({"theorem1", "closed-form"}));
        opts["delta"] = app.add_option("--delta", delta, "Risk parameter");
        opts["check_every"] = app.add_option("--check-every", check_every, "Rounds between stopping checks (0: default)");
        opts["replications"] = app.add_option("--replications", replications, "Number of replications");
        opts["seed"] = app.add_option("--seed", seed, "Base seed");
        opts["n_max"] = app.add_option("--n-max", n_max, "Cap on total pulls");
        opts["threads"] = app.add_option("--threads", threads, "Worker threads (0: BAI_THREADS or all cores)");
        opts["timing"] = app.add_flag("--timing", timing, "Measure per-step select time (makes output non-deterministic)");
    }

    bool given(const std::string& k) const { return opts.at(k)->count() > 0; }

    json merged() const {
        json j = json::object();
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw config_error("cannot read config file '" + config_file + "'");
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw config_error(std::string("config file is not valid json: ") + e.what());
            }
        }
        json& ji = j["instance"];
        if (ji.is_null()) ji = json::object();
        if (given("means"))
            ji["means"] = means;
        else if (given("instance") || !ji.contains("means"))
            ji["means"] = instance == "mu2" ? reference_means_2() : reference_means_1();
        if (given("family") || !ji.contains("family")) ji["family"] = family;
        if (given("sigma") || !ji.contains("sigma")) ji["sigma"] = sigma;

        json& jr = j["rule"];
        if (jr.is_null()) jr = json::object();
        if (given("rule") || !jr.contains("name")) jr["name"] = rule;
        if (given("beta") || !jr.contains("beta")) jr["beta"] = beta;
        if (given("resample_cap") || !jr.contains("resample_cap")) jr["resample_cap"] = resample_cap;

        json& jc = j["criterion"];
        if (jc.is_null()) jc = json::object();
        if (given("stopping") || !jc.contains("kind")) jc["kind"] = stopping;
        if (given("delta") || !jc.contains("delta")) jc["delta"] = delta;
        if (given("threshold_variant") || !jc.contains("threshold_variant")) jc["threshold_variant"] = threshold_variant;

        if (given("check_every") || !j.contains("check_every")) j["check_every"] = check_every;
        if (given("replications") || !j.contains("replications")) j["replications"] = replications;
        if (given("seed") || !j.contains("base_seed")) j["base_seed"] = seed;
        if (given("n_max") || !j.contains("n_max")) j["n_max"] = n_max;
        if (given("timing")) j["measure_time"] = timing;
        return j;
    }

    ExperimentConfig config() const {
        ExperimentConfig c = config_from_json(merged());
        c.threads = threads;
        return c;
    }
};

void note_heuristic(const ExperimentConfig& c) {
    if (c.instance.family().is_bernoulli())
        std::cerr << "note: delta-correctness of the stopping rules is heuristic for Bernoulli rewards\n";
}

void write_or_print(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw export_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush()) throw export_error("write to '" + path + "' failed");
}

int cmd_solve(const CommonFlags& f) {
    const ExperimentConfig c = f.config();
    const auto means = c.instance.means();
    const auto& fam = c.instance.family();
    const double beta = c.rule.beta().value_or(0.5);
    const auto at_beta = solve_allocation_beta(means, fam, beta);
    const auto star = optimal_allocation(means, fam);
    json out{{"family", fam.name()},
             {"means", std::vector<double>(means.begin(), means.end())},
             {"beta", beta},
             {"omega_beta", at_beta.weights},
             {"gamma_beta", at_beta.rate},
             {"residual", at_beta.residual},
             {"beta_star", star.beta},
             {"omega_star", star.weights},
             {"gamma_star", star.rate},
             {"grid_warning", star.grid_warning}};
    if (star.grid_warning) std::cerr << "warning: the beta grid found a higher rate than golden-section search\n";
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_run(const CommonFlags& f, const std::string& out, const std::string& format, const std::string& summary_out) {
    const ExperimentConfig c = f.config();
    note_heuristic(c);
    const auto records = run_replications(c);
    const auto summary = summarize(c, records);
    const ExportFormat fmt = export_format_from_name(format);
    if (!out.empty()) export_records(records, c, fmt, out);
    if (!summary_out.empty()) export_summary(summary, c, ExportFormat::json, summary_out);
    std::cout << to_json(summary).dump(2) << '\n';
    return 0;
}

int cmd_bench(const CommonFlags& f, long iterations, const std::vector<std::string>& rules) {
    ExperimentConfig c = f.config();
    // Converged state: the posterior at the stopping time of one replication.
    const PosteriorState state = final_state(c, 0);
    json out{{"state_pulls", state.total_pulls()}, {"iterations", iterations}, {"mean_step_time_s", json::object()}};
    for (const auto& name : rules) {
        SamplingRule rule = SamplingRule::from_name(name, c.rule.beta().value_or(0.5));
        out["mean_step_time_s"][name] = benchmark_step_time(rule, state, iterations, c.base_seed).mean_s;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_diagnose(const CommonFlags& f, long stride, const std::string& out) {
    ExperimentConfig c = f.config();
    c.stopping_enabled = false;
    c.record_trace = true;
    c.trace_stride = stride;
    c.replications = 1;
    const RunRecord r = run_trial(c, 0);
    const auto target = target_allocation(c);
    std::string csv = "n,log_one_minus_a";
    for (arm_t i = 0; i < c.instance.arms(); ++i) csv += ",p" + std::to_string(i);
    csv += '\n';
    for (const auto& p : r.trace) {
        csv += std::to_string(p.n) + ',' + detail::format_double(p.log_one_minus_a);
        for (double v : p.proportions) csv += ',' + detail::format_double(v);
        csv += '\n';
    }
    if (!out.empty()) {
        write_or_print(csv, out);
        write_metadata(c, out);
    }
    json j{{"n", r.tau},
           {"target_weights", target.weights},
           {"target_rate", target.rate},
           {"final_proportions", r.trace.empty() ? std::vector<double>{} : r.trace.back().proportions},
           {"tracking_error", tracking_error(r.counts, target)},
           {"fallbacks", r.fallbacks}};
    if (r.trace.size() >= 10) j["slope"] = convergence_diagnostics(r.trace, target).slope;
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Best-arm identification with top-two sampling rules"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    CommonFlags solve_f, run_f, bench_f, diag_f;
    auto* solve = app.add_subcommand("solve-allocation", "Print omega^beta, Gamma_beta, beta* and Gamma*");
    solve_f.add(*solve);

    auto* run = app.add_subcommand("run", "Run replicated experiments and print the summary");
    run_f.add(*run);
    std::string out, format = "csv", summary_out;
    run->add_option("--out", out, "Write per-replication records here");
    run->add_option("--format", format, "Records format: csv or json")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--summary-out", summary_out, "Write the summary JSON here");

    auto* bench = app.add_subcommand("bench", "Mean select-arm time per rule at a converged state");
    bench_f.add(*bench);
    long iterations = 2000;
    std::vector<std::string> bench_rules{"uniform", "t3c", "ttts", "ttps", "bc", "dtracking"};
    bench->add_option("--iterations", iterations, "Timed calls per rule");
    bench->add_option("--rules", bench_rules, "Rules to time")->delimiter(',');

    auto* diag = app.add_subcommand("diagnose", "Long single run with traces (stopping disabled)");
    diag_f.add(*diag);
    long stride = 1000;
    std::string trace_out;
    diag->add_option("--trace-stride", stride, "Pulls between trace points");
    diag->add_option("--out", trace_out, "Write the trace CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve) return cmd_solve(solve_f);
        if (*run) return cmd_run(run_f, out, format, summary_out);
        if (*bench) return cmd_bench(bench_f, iterations, bench_rules);
        if (*diag) return cmd_diagnose(diag_f, stride, trace_out);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
