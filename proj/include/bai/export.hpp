#pragma once
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bai/harness.hpp"

// CSV/JSON export of experiment results and JSON (de)serialization of
// ExperimentConfig. Config keys match the ExperimentConfig field names.
namespace bai {

using json = nlohmann::json;

inline std::string to_string(ThresholdVariant v) { return v == ThresholdVariant::theorem1 ? "theorem1" : "closed-form"; }

inline ThresholdVariant threshold_variant_from_name(const std::string& s) {
    if (s == "theorem1") return ThresholdVariant::theorem1;
    if (s == "closed-form") return ThresholdVariant::closed_form;
    throw config_error("unknown threshold variant '" + s + "'");
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["instance"] = {{"family", c.instance.family().name()},
                     {"means", std::vector<double>(c.instance.means().begin(), c.instance.means().end())}};
    if (c.instance.family().is_gaussian()) j["instance"]["sigma"] = c.instance.family().sigma();
    j["rule"] = {{"name", c.rule.name()}};
    if (auto b = c.rule.beta()) j["rule"]["beta"] = *b;
    if (const auto* t = std::get_if<Ttts>(&c.rule.get())) j["rule"]["resample_cap"] = t->resample_cap;
    j["criterion"] = {{"kind", c.criterion.is_bayes() ? "bayes" : "chernoff"},
                      {"delta", c.criterion.delta},
                      {"threshold_variant", to_string(c.criterion.variant)}};
    j["replications"] = c.replications;
    j["base_seed"] = c.base_seed;
    j["n_max"] = c.n_max;
    j["trace_stride"] = c.trace_stride;
    j["record_trace"] = c.record_trace;
    j["stopping_enabled"] = c.stopping_enabled;
    j["check_every"] = c.effective_check_every();
    j["measure_time"] = c.measure_time;
    j["quadrature_tol"] = c.quadrature_tol;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    try {
        const json& ji = j.at("instance");
        const std::string fam = ji.value("family", "gaussian");
        RewardFamily family = fam == "gaussian"    ? RewardFamily::gaussian(ji.value("sigma", 1.0))
                              : fam == "bernoulli" ? RewardFamily::bernoulli()
                                                   : throw config_error("unknown family '" + fam + "'");
        BanditInstance instance(family, ji.at("means").get<std::vector<double>>());

        const json jr = j.value("rule", json::object());
        SamplingRule rule = SamplingRule::from_name(jr.value("name", "t3c"), jr.value("beta", 0.5));
        if (auto* t = std::get_if<Ttts>(&rule.get())) t->resample_cap = jr.value("resample_cap", t->resample_cap);

        const json jc = j.value("criterion", json::object());
        const std::string kind = jc.value("kind", "chernoff");
        const double delta = jc.value("delta", 0.01);
        StoppingCriterion crit =
            kind == "chernoff" ? StoppingCriterion::chernoff(delta, instance.arms())
            : kind == "bayes"  ? StoppingCriterion::bayes(delta, instance.arms(),
                                                          threshold_variant_from_name(jc.value("threshold_variant", "theorem1")))
                               : throw config_error("unknown stopping kind '" + kind + "'");

        ExperimentConfig c{.instance = instance, .rule = rule, .criterion = crit};
        c.replications = j.value("replications", c.replications);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.n_max = j.value("n_max", c.n_max);
        c.trace_stride = j.value("trace_stride", c.trace_stride);
        c.record_trace = j.value("record_trace", c.record_trace);
        c.stopping_enabled = j.value("stopping_enabled", c.stopping_enabled);
        c.check_every = j.value("check_every", c.check_every);
        c.measure_time = j.value("measure_time", c.measure_time);
        c.quadrature_tol = j.value("quadrature_tol", c.quadrature_tol);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw config_error(std::string("invalid config json: ") + e.what());
    }
}

inline json to_json(const ExperimentSummary& s) {
    json j{{"replications", s.replications},
           {"errors", s.errors},
           {"censored", s.censored},
           {"error_rate", s.error_rate},
           {"tau_mean", s.tau_mean},
           {"tau_median", s.tau_median},
           {"tau_p90", s.tau_p90},
           {"mean_step_time_s", s.mean_step_time_s},
           {"tracking_error", s.tracking_error},
           {"heuristic_guarantee", s.heuristic_guarantee}};
    j["slope"] = s.slope ? json(*s.slope) : json(nullptr);
    return j;
}

inline ExperimentSummary summary_from_json(const json& j) {
    ExperimentSummary s;
    s.replications = j.at("replications").get<long>();
    s.errors = j.at("errors").get<long>();
    s.censored = j.at("censored").get<long>();
    s.error_rate = j.at("error_rate").get<double>();
    s.tau_mean = j.at("tau_mean").get<double>();
    s.tau_median = j.at("tau_median").get<double>();
    s.tau_p90 = j.at("tau_p90").get<double>();
    s.mean_step_time_s = j.at("mean_step_time_s").get<double>();
    s.tracking_error = j.at("tracking_error").get<double>();
    s.heuristic_guarantee = j.at("heuristic_guarantee").get<bool>();
    if (!j.at("slope").is_null()) s.slope = j.at("slope").get<double>();
    return s;
}

inline json to_json(const RunRecord& r) {
    return {{"replication", r.replication}, {"tau", r.tau},         {"recommendation", r.recommendation},
            {"correct", r.correct},         {"censored", r.censored}, {"step_time_s", r.step_time_s},
            {"counts", r.counts},           {"fallbacks", r.fallbacks}};
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw export_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw export_error("write to '" + path.string() + "' failed");
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string records_csv(std::span<const RunRecord> records) {
    std::string s = "replication,tau,recommendation,correct,censored,step_time_s\n";
    for (const auto& r : records) {
        s += std::to_string(r.replication) + ',' + std::to_string(r.tau) + ',' + std::to_string(r.recommendation) + ',' +
             (r.correct ? "1" : "0") + ',' + (r.censored ? "1" : "0") + ',' + detail::format_double(r.step_time_s) + '\n';
    }
    return s;
}

// Sidecar written next to every export: config, seed and solver tolerances,
// enough to rerun the experiment exactly.
inline json export_metadata(const ExperimentConfig& config) {
    return {{"config", to_json(config)},
            {"base_seed", config.base_seed},
            {"tolerances",
             {{"quadrature_tol", config.quadrature_tol},
              {"allocation_rate_tol", 1e-12},
              {"allocation_beta_tol", 1e-6},
              {"beta_tail_golden_tol", 1e-10}}},
            {"code_version", version}};
}

inline std::filesystem::path metadata_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

enum class ExportFormat { csv, json };

inline ExportFormat export_format_from_name(const std::string& s) {
    if (s == "csv") return ExportFormat::csv;
    if (s == "json") return ExportFormat::json;
    throw config_error("unknown export format '" + s + "'");
}

inline void write_metadata(const ExperimentConfig& config, const std::filesystem::path& path) {
    const auto meta = metadata_path(path);
    auto out = detail::open_for_write(meta);
    out << export_metadata(config).dump(2) << '\n';
    detail::check_written(out, meta);
}

// Per-replication records: CSV with the fixed column set, or a JSON array.
inline void export_records(std::span<const RunRecord> records, const ExperimentConfig& config, ExportFormat format,
                           const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    if (format == ExportFormat::csv) {
        out << records_csv(records);
    } else {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(to_json(r));
        out << arr.dump(2) << '\n';
    }
    detail::check_written(out, path);
    write_metadata(config, path);
}

// Summary: JSON object with the ExperimentSummary field names, or a one-row CSV.
inline void export_summary(const ExperimentSummary& summary, const ExperimentConfig& config, ExportFormat format,
                           const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    if (format == ExportFormat::json) {
        out << to_json(summary).dump(2) << '\n';
    } else {
        out << "replications,errors,censored,error_rate,tau_mean,tau_median,tau_p90,mean_step_time_s,tracking_error,slope\n";
        out << summary.replications << ',' << summary.errors << ',' << summary.censored << ','
            << detail::format_double(summary.error_rate) << ',' << detail::format_double(summary.tau_mean) << ','
            << detail::format_double(summary.tau_median) << ',' << detail::format_double(summary.tau_p90) << ','
            << detail::format_double(summary.mean_step_time_s) << ',' << detail::format_double(summary.tracking_error)
            << ',' << (summary.slope ? detail::format_double(*summary.slope) : "") << '\n';
    }
    detail::check_written(out, path);
    write_metadata(config, path);
}

}  // namespace bai
