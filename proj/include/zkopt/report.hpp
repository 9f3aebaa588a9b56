#pragma once

#include <iomanip>
#include <sstream>

#include "zkopt/analyzer.hpp"
#include "zkopt/harness.hpp"

namespace zkopt {

// CSV schemas are versioned in-band: every row's first column carries the
// schema tag, so consumers can reject files they do not understand.
constexpr const char* kMetricsSchema = "metrics.v1";
constexpr const char* kImpactSchema = "impact.v1";

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_double(double v, int precision = 9) {
    std::ostringstream ss;
    ss << std::setprecision(precision) << v;
    return ss.str();
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string{};
}

} // namespace detail

inline std::string metrics_csv_header() {
    return "schema,program,profile,artifact,model,ok,error,"
           "compute_cycles,paging_cycles,total_cycles,page_ins,page_outs,retired,"
           "emu_wall_s,proving_est_s,native_wall_s,exit_status,output_sha256\n";
}

inline std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = metrics_csv_header();
    for (const auto& r : rows) {
        out += kMetricsSchema;
        out += ',' + detail::csv_escape(r.program);
        out += ',' + detail::csv_escape(r.profile);
        out += ',' + r.artifact;
        out += ',' + detail::csv_escape(r.model);
        out += r.ok ? ",1" : ",0";
        out += ',' + detail::csv_escape(r.error);
        out += ',' + std::to_string(r.cycles.compute);
        out += ',' + std::to_string(r.cycles.paging);
        out += ',' + std::to_string(r.cycles.total);
        out += ',' + std::to_string(r.cycles.page_ins);
        out += ',' + std::to_string(r.cycles.page_outs);
        out += ',' + std::to_string(r.retired);
        out += ',' + detail::fmt_double(r.emu_wall_s);
        out += ',' + detail::fmt_opt(r.proving_est_s);
        out += ',' + detail::fmt_opt(r.native_wall_s);
        out += ',' + detail::csv_escape(r.exit_status);
        out += ',' + r.output_sha256;
        out += '\n';
    }
    return out;
}

inline std::string impacts_csv_header() {
    return "schema,program,profile,model,metric,baseline,value,impact_percent,category\n";
}

inline std::string impacts_to_csv(const std::vector<ImpactRow>& rows) {
    std::string out = impacts_csv_header();
    for (const auto& r : rows) {
        out += kImpactSchema;
        out += ',' + detail::csv_escape(r.program);
        out += ',' + detail::csv_escape(r.profile);
        out += ',' + detail::csv_escape(r.model);
        out += ',' + r.metric;
        out += ',' + detail::fmt_double(r.baseline_value);
        out += ',' + detail::fmt_double(r.profile_value);
        out += ',' + detail::fmt_double(r.percent);
        out += ',' + std::string(impact_category_name(r.category));
        out += '\n';
    }
    return out;
}

// --- row persistence (JSON lines) ----------------------------------------------

inline nlohmann::json metrics_row_to_json(const MetricsRow& r) {
    nlohmann::json j;
    j["program"] = r.program;
    j["profile"] = r.profile;
    j["artifact"] = r.artifact;
    j["model"] = r.model;
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["compute"] = r.cycles.compute;
    j["paging"] = r.cycles.paging;
    j["total"] = r.cycles.total;
    j["page_ins"] = r.cycles.page_ins;
    j["page_outs"] = r.cycles.page_outs;
    j["retired"] = r.retired;
    j["emu_wall_s"] = r.emu_wall_s;
    if (r.proving_est_s)
        j["proving_est_s"] = *r.proving_est_s;
    if (r.native_wall_s)
        j["native_wall_s"] = *r.native_wall_s;
    j["exit_status"] = r.exit_status;
    j["output_sha256"] = r.output_sha256;
    return j;
}

inline MetricsRow metrics_row_from_json(const nlohmann::json& j) {
    MetricsRow r;
    r.program = j.at("program").get<std::string>();
    r.profile = j.at("profile").get<std::string>();
    r.artifact = j.value("artifact", std::string{});
    r.model = j.at("model").get<std::string>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.value("error", std::string{});
    r.cycles.compute = j.value("compute", u64{0});
    r.cycles.paging = j.value("paging", u64{0});
    r.cycles.total = j.value("total", u64{0});
    r.cycles.page_ins = j.value("page_ins", u64{0});
    r.cycles.page_outs = j.value("page_outs", u64{0});
    r.retired = j.value("retired", u64{0});
    r.emu_wall_s = j.value("emu_wall_s", 0.0);
    if (j.contains("proving_est_s"))
        r.proving_est_s = j.at("proving_est_s").get<double>();
    if (j.contains("native_wall_s"))
        r.native_wall_s = j.at("native_wall_s").get<double>();
    r.exit_status = j.value("exit_status", std::string{});
    r.output_sha256 = j.value("output_sha256", std::string{});
    return r;
}

inline std::string metrics_rows_to_jsonl(const std::vector<MetricsRow>& rows) {
    std::string out;
    for (const auto& r : rows)
        out += metrics_row_to_json(r).dump() + "\n";
    return out;
}

inline std::vector<MetricsRow> metrics_rows_from_jsonl(const std::string& text) {
    std::vector<MetricsRow> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rows.push_back(metrics_row_from_json(nlohmann::json::parse(line)));
    }
    return rows;
}

// --- summary document ------------------------------------------------------------

/// Per-pass mean impact with standard deviation, category counts, gain/loss
/// tallies, a correlation block, and (when tune results are supplied) the
/// tuned-sequence speedups over the standard levels.
inline std::string
render_summary(const std::vector<MetricsRow>& rows, Metric metric = Metric::Cycles,
               CategoryThresholds thresholds = {},
               const std::map<std::string, TuneResult>* tuned = nullptr,
               const std::map<std::string, std::vector<Finding>>* findings = nullptr) {
    std::ostringstream out;
    out << "# workbench summary\n";
    out << "metric: " << metric_name(metric) << "\n";
    out << "impact percent = (baseline - value) / baseline * 100; positive = improvement.\n";
    out << "aggregation: arithmetic mean of per-program impact percents.\n";

    // group rows by model, find baselines per (model, program)
    std::map<std::string, std::vector<const MetricsRow*>> by_model;
    for (const auto& r : rows)
        by_model[r.model].push_back(&r);

    for (auto& [model, model_rows] : by_model) {
        out << "\n## model: " << model << "\n";
        if (model == "uniform")
            out << "note: idealized near-uniform accounting, not a measured"
                   " instruction table.\n";
        std::map<std::string, const MetricsRow*> baselines;
        for (const auto* r : model_rows)
            if (r->profile == "baseline" && r->ok)
                baselines[r->program] = r;

        std::vector<ImpactRow> impacts;
        u64 failed_rows = 0;
        for (const auto* r : model_rows) {
            if (r->profile == "baseline")
                continue;
            if (!r->ok) {
                failed_rows++;
                continue;
            }
            auto bit = baselines.find(r->program);
            if (bit == baselines.end())
                continue;
            impacts.push_back(impact(*bit->second, *r, metric, thresholds));
        }
        out << "programs with baseline: " << baselines.size()
            << ", impact rows: " << impacts.size()
            << ", failed rows: " << failed_rows << "\n";

        // per-profile mean +- stddev
        std::map<std::string, std::vector<double>> per_profile;
        for (const auto& i : impacts)
            per_profile[i.profile].push_back(i.percent);
        out << "\nprofile, mean_impact_pct, stddev_pct, programs\n";
        for (auto& [profile, vals] : per_profile) {
            out << profile << ", " << detail::fmt_double(stats::mean(vals), 4) << ", "
                << detail::fmt_double(stats::stddev(vals), 4) << ", " << vals.size() << "\n";
        }

        // category counts
        auto outcomes = count_outcomes(impacts, thresholds);
        out << "\nprofile, severe_gain, moderate_gain, neutral, moderate_loss, severe_loss,"
               " gains, losses\n";
        for (auto& [key, c] : outcomes) {
            out << key.second << ", "
                << c.by_category[static_cast<size_t>(ImpactCategory::SevereGain)] << ", "
                << c.by_category[static_cast<size_t>(ImpactCategory::ModerateGain)] << ", "
                << c.by_category[static_cast<size_t>(ImpactCategory::Neutral)] << ", "
                << c.by_category[static_cast<size_t>(ImpactCategory::ModerateLoss)] << ", "
                << c.by_category[static_cast<size_t>(ImpactCategory::SevereLoss)] << ", "
                << c.gains << ", " << c.losses << "\n";
        }

        // total gain/loss tallies for this model
        u64 gains = 0, losses = 0;
        for (auto& [key, c] : outcomes) {
            gains += c.gains;
            losses += c.losses;
        }
        out << "\ntotal: gains(>" << thresholds.moderate << "%) = " << gains
            << ", losses(<-" << thresholds.moderate << "%) = " << losses << "\n";

        // correlation block over rows with both cycles and estimates
        std::vector<double> cyc, est, wall;
        for (const auto* r : model_rows)
            if (r->ok && r->proving_est_s) {
                cyc.push_back(static_cast<double>(r->cycles.total));
                est.push_back(*r->proving_est_s);
                wall.push_back(r->emu_wall_s);
            }
        if (cyc.size() >= 3) {
            try {
                auto c = correlate(cyc, est);
                out << "\ncorrelation cycles vs estimated proving: pearson="
                    << detail::fmt_double(c.pearson, 6)
                    << ", spearman=" << detail::fmt_double(c.spearman, 6) << "\n";
            } catch (const DegenerateSeries&) {
                out << "\ncorrelation cycles vs estimated proving: degenerate\n";
            }
        }
    }

    if (tuned && !tuned->empty()) {
        out << "\n## tuned sequences vs standard levels\n";
        out << "program, best_fitness, baseline_fitness, O3_fitness, speedup_vs_O3\n";
        for (auto& [program, result] : *tuned) {
            out << program << ", ";
            if (result.best.finite())
                out << *result.best.fitness;
            else
                out << "n/a";
            out << ", " << result.baseline_fitness << ", ";
            auto it = result.level_fitness.find("O3");
            if (it != result.level_fitness.end() && it->second && result.best.finite()) {
                out << **&it->second << ", "
                    << detail::fmt_double(static_cast<double>(*it->second) /
                                              static_cast<double>(*result.best.fitness),
                                          4)
                    << "x\n";
            } else {
                out << "n/a, n/a\n";
            }
        }
    }

    if (findings && !findings->empty()) {
        out << "\n## static findings\n";
        for (auto& [program, fs] : *findings) {
            out << "### " << program << "\n";
            out << render_findings(fs);
        }
    }
    return out.str();
}

} // namespace zkopt
