// zkopt: workbench CLI tying the emulator, cost models, toolchain driver,
// autotuner, analyzer, and reporting together.
//
// Exit codes: 0 success, 1 divergence findings (oracle), 2 configuration or
// tool errors. Machine-readable output goes to stdout, diagnostics to stderr.

#include <CLI11.hpp>

#include <iostream>

#include <zkopt/analyzer.hpp>
#include <zkopt/autotune.hpp>
#include <zkopt/harness.hpp>
#include <zkopt/report.hpp>

using namespace zkopt;

namespace {

fs::path self_dir(const char* argv0) {
    std::error_code ec;
    auto self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec)
        return self.parent_path();
    fs::path p(argv0);
    return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

struct CommonOpts {
    std::string toolchain_config;
    std::string model = "r0-like";
    std::string manifest;
    std::string work_dir = ".zkopt-work";
    std::string out_dir = "zkopt-out";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

fs::path resolve_toolchain_path(const CommonOpts& opts, const fs::path& exe_dir) {
    fs::path path;
    if (!opts.toolchain_config.empty()) {
        path = opts.toolchain_config;
    } else if (const char* env = std::getenv("ZKOPT_TOOLCHAIN")) {
        path = env;
    } else {
        for (const fs::path& candidate :
             {fs::path("configs/toolchain.json"), exe_dir / ".." / "configs" / "toolchain.json"})
            if (fs::exists(candidate)) {
                path = candidate;
                break;
            }
    }
    if (path.empty() || !fs::exists(path))
        throw ConfigError("toolchain config not found; pass --toolchain or set ZKOPT_TOOLCHAIN");
    return path;
}

ToolchainConfig resolve_toolchain(const CommonOpts& opts, const fs::path& exe_dir) {
    const fs::path path = resolve_toolchain_path(opts, exe_dir);
    auto cfg = load_toolchain_config(path);
    // prefer a zkopt-mid sitting next to this binary when the config does
    // not pin an absolute path
    if (cfg.zkopt_mid.find('/') == std::string::npos) {
        const fs::path local = exe_dir / cfg.zkopt_mid;
        if (fs::exists(local))
            cfg.zkopt_mid = local.string();
    }
    return cfg;
}

OptProfile parse_profile(const std::string& text) {
    if (text == "baseline")
        return OptProfile::baseline();
    if (text.size() >= 2 && text[0] == 'O')
        return OptProfile::standard(text.substr(1));
    const std::string prefix = "seq:";
    if (text.rfind(prefix, 0) == 0) {
        std::vector<std::string> passes;
        std::string rest = text.substr(prefix.size());
        size_t pos = 0;
        while (pos != std::string::npos && !rest.empty()) {
            const size_t next = rest.find('+', pos);
            passes.push_back(rest.substr(pos, next == std::string::npos ? next : next - pos));
            pos = next == std::string::npos ? next : next + 1;
        }
        return OptProfile::sequence(passes);
    }
    throw ConfigError("cannot parse profile '" + text +
                      "' (expected baseline, O<level>, or seq:a+b+c)");
}

CorpusProgram program_from(const CommonOpts& opts, const std::string& program_id,
                           const std::string& source, u64 limit) {
    if (!source.empty()) {
        CorpusProgram p;
        p.id = fs::path(source).stem().string();
        p.source = source;
        p.limit = limit;
        return p;
    }
    if (opts.manifest.empty())
        throw ConfigError("either --source or --manifest with --program is required");
    auto manifest = load_manifest(opts.manifest);
    const CorpusProgram* p = manifest.find(program_id);
    if (!p)
        throw ConfigError("program '" + program_id + "' not in manifest " + opts.manifest);
    return *p;
}

nlohmann::json breakdown_json(const MetricsRow& row) {
    nlohmann::json j;
    j["program"] = row.program;
    j["profile"] = row.profile;
    j["model"] = row.model;
    j["ok"] = row.ok;
    if (!row.ok)
        j["error"] = row.error;
    j["exit_status"] = row.exit_status;
    j["retired"] = row.retired;
    j["compute_cycles"] = row.cycles.compute;
    j["paging_cycles"] = row.cycles.paging;
    j["total_cycles"] = row.cycles.total;
    j["page_ins"] = row.cycles.page_ins;
    j["page_outs"] = row.cycles.page_outs;
    if (row.proving_est_s)
        j["proving_est_s"] = *row.proving_est_s;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zkVM-style cost workbench for compiler optimization studies"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--toolchain", opts.toolchain_config, "toolchain config JSON");
    auto* opt_model =
        app.add_option("--model", opts.model, "cost model: built-in name or config path");
    auto* opt_manifest = app.add_option("--manifest", opts.manifest, "corpus manifest JSON");
    app.add_option("--work", opts.work_dir, "artifact/work directory");
    app.add_option("--out", opts.out_dir, "report output directory");
    app.add_option("--jobs", opts.jobs, "parallel build/run jobs");

    // run
    auto* cmd_run = app.add_subcommand("run", "run one ELF under a cost model");
    std::string run_elf;
    u64 run_limit = 50'000'000;
    cmd_run->add_option("elf", run_elf, "static rv32im executable")->required();
    cmd_run->add_option("--limit", run_limit, "max retired instructions");

    // bench
    auto* cmd_bench = app.add_subcommand("bench", "corpus x profiles -> CSV + summary");
    std::vector<std::string> bench_profiles;
    std::vector<std::string> bench_programs;
    bool bench_expand = false;
    std::string bench_estimate;
    cmd_bench->add_option("--profile", bench_profiles,
                          "profile (baseline, O<level>, seq:a+b); repeatable");
    cmd_bench->add_flag("--expand", bench_expand,
                        "use the full expanded profile set (baseline + catalog + levels)");
    cmd_bench->add_option("--program", bench_programs, "restrict to these manifest ids");
    cmd_bench->add_option("--estimate", bench_estimate,
                          "proving estimator 'intercept,slope' in seconds[,per-cycle]");
    bool bench_native = false;
    bool bench_scan = false;
    cmd_bench->add_flag("--native", bench_native,
                        "also measure native wall time for baseline/level profiles");
    cmd_bench->add_flag("--scan", bench_scan,
                        "append static findings for each baseline artifact");

    // tune
    auto* cmd_tune = app.add_subcommand("tune", "genetic pass-sequence search on one program");
    std::string tune_program, tune_source;
    TuneConfig tune_cfg;
    u64 tune_limit = 50'000'000;
    cmd_tune->add_option("--program", tune_program, "manifest id");
    cmd_tune->add_option("--source", tune_source, "C source path (alternative to --program)");
    cmd_tune->add_option("--seed", tune_cfg.seed, "RNG seed");
    cmd_tune->add_option("--iterations", tune_cfg.iterations, "candidate evaluations");
    cmd_tune->add_option("--depth", tune_cfg.max_depth, "max sequence depth");
    cmd_tune->add_option("--population", tune_cfg.population, "population size");
    cmd_tune->add_option("--mutation", tune_cfg.mutation_rate, "mutation rate");
    cmd_tune->add_option("--limit", tune_limit, "per-candidate instruction limit");
    bool tune_levels = false;
    cmd_tune->add_flag("--compare-levels", tune_levels, "also evaluate O0..Oz");

    // mine
    auto* cmd_mine = app.add_subcommand("mine", "subsequence frequency tables from tune results");
    std::vector<std::string> mine_files;
    size_t mine_k = 5, mine_n = 2;
    cmd_mine->add_option("results", mine_files, "tune result JSON files")->required();
    cmd_mine->add_option("-k", mine_k, "top/bottom pool size per result");
    cmd_mine->add_option("-n", mine_n, "max gram length (1 or 2)");

    // analyze
    auto* cmd_analyze = app.add_subcommand("analyze", "static anti-pattern scan of an ELF");
    std::string analyze_elf;
    bool analyze_json = false;
    AnalyzerOptions analyze_opts;
    cmd_analyze->add_option("elf", analyze_elf, "executable to scan")->required();
    cmd_analyze->add_flag("--json", analyze_json, "emit JSON lines instead of text");
    cmd_analyze->add_option("--footprint-pages", analyze_opts.footprint_page_threshold,
                            "R3 threshold (writable pages)");
    cmd_analyze->add_option("--bookkeeping-ratio", analyze_opts.bookkeeping_ratio_threshold,
                            "R4 threshold");

    // oracle
    auto* cmd_oracle = app.add_subcommand("oracle", "differential check of two profiles");
    std::string oracle_program, oracle_source, oracle_a = "baseline", oracle_b = "O2";
    u64 oracle_limit = 50'000'000;
    cmd_oracle->add_option("--program", oracle_program, "manifest id");
    cmd_oracle->add_option("--source", oracle_source, "C source path");
    cmd_oracle->add_option("--profile-a", oracle_a, "first profile");
    cmd_oracle->add_option("--profile-b", oracle_b, "second profile");
    cmd_oracle->add_option("--limit", oracle_limit, "instruction limit");

    // report
    auto* cmd_report = app.add_subcommand("report", "render reports from stored rows");
    std::string report_rows;
    cmd_report->add_option("rows", report_rows, "rows.jsonl produced by bench")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const fs::path exe_dir = self_dir(argv[0]);
    try {
        // config supplies defaults; explicit flags win
        try {
            const fs::path cfg_path = resolve_toolchain_path(opts, exe_dir);
            auto j = nlohmann::json::parse(read_text_file(cfg_path));
            if (!opt_model->count() && j.contains("default_model"))
                opts.model = j.at("default_model").get<std::string>();
            if (!opt_manifest->count() && j.contains("default_manifest")) {
                fs::path m = j.at("default_manifest").get<std::string>();
                opts.manifest = (m.is_absolute() ? m : cfg_path.parent_path() / m).string();
            }
        } catch (const ConfigError&) {
            // no toolchain config found; subcommands that need one will say so
        }

        const CostModel model = load_cost_model(opts.model);

        if (cmd_run->parsed()) {
            CorpusProgram prog;
            prog.id = fs::path(run_elf).stem().string();
            prog.prebuilt_elf = run_elf;
            prog.limit = run_limit;
            Toolchain tc(resolve_toolchain(opts, exe_dir), opts.work_dir);
            auto row = run_benchmark(tc, prog, OptProfile::baseline(), model);
            std::cout << breakdown_json(row).dump(2) << "\n";
            return row.ok ? 0 : 2;
        }

        if (cmd_bench->parsed()) {
            if (opts.manifest.empty())
                throw ConfigError("bench requires --manifest");
            Toolchain tc(resolve_toolchain(opts, exe_dir), opts.work_dir);
            Manifest manifest = load_manifest(opts.manifest);
            if (!bench_programs.empty()) {
                Manifest filtered;
                for (const auto& id : bench_programs) {
                    const CorpusProgram* p = manifest.find(id);
                    if (!p)
                        throw ConfigError("program '" + id + "' not in manifest");
                    filtered.programs.push_back(*p);
                }
                manifest = std::move(filtered);
            }
            std::vector<OptProfile> profiles;
            if (bench_expand)
                profiles = expand_profiles(tc.catalog());
            for (const auto& text : bench_profiles)
                profiles.push_back(parse_profile(text));
            if (profiles.empty())
                profiles = {OptProfile::baseline(), OptProfile::standard("2"),
                            OptProfile::standard("3")};

            std::optional<ProvingEstimator> estimator;
            if (!bench_estimate.empty()) {
                const auto comma = bench_estimate.find(',');
                if (comma == std::string::npos)
                    throw ConfigError("--estimate wants 'intercept,slope'");
                estimator = ProvingEstimator{std::stod(bench_estimate.substr(0, comma)),
                                             std::stod(bench_estimate.substr(comma + 1)), 1.0};
            }

            auto rows = run_bench_matrix(tc, manifest, profiles, model,
                                         estimator ? &*estimator : nullptr, opts.jobs);

            if (bench_native) {
                const fs::path cfg_path = resolve_toolchain_path(opts, exe_dir);
                auto host = host_config_from_json(
                    nlohmann::json::parse(read_text_file(cfg_path)), cfg_path.parent_path());
                for (auto& row : rows) {
                    std::string level;
                    if (row.profile == "baseline")
                        level = "0";
                    else if (row.profile.size() == 2 && row.profile[0] == 'O')
                        level = row.profile.substr(1);
                    else
                        continue;
                    const CorpusProgram* prog = manifest.find(row.program);
                    if (!prog || !row.ok)
                        continue;
                    try {
                        row.native_wall_s = native_time(host, *prog, level,
                                                        fs::path(opts.work_dir) / "native");
                    } catch (const HostBuildFailed& e) {
                        std::cerr << "native: " << e.what() << "\n";
                    }
                }
            }

            std::map<std::string, std::vector<Finding>> findings;
            if (bench_scan) {
                for (const auto& row : rows) {
                    if (row.profile != "baseline" || !row.ok || row.artifact.empty())
                        continue;
                    const fs::path elf =
                        fs::path(opts.work_dir) / "artifacts" / (row.artifact + ".elf");
                    if (fs::exists(elf))
                        findings[row.program] = scan(load_elf_file(elf), model);
                }
            }

            const std::string summary =
                render_summary(rows, Metric::Cycles, {}, nullptr,
                               findings.empty() ? nullptr : &findings);
            fs::create_directories(opts.out_dir);
            write_file(fs::path(opts.out_dir) / "metrics.csv", metrics_to_csv(rows));
            write_file(fs::path(opts.out_dir) / "rows.jsonl", metrics_rows_to_jsonl(rows));
            write_file(fs::path(opts.out_dir) / "summary.txt", summary);
            std::cout << summary;
            u64 failures = 0;
            for (const auto& r : rows)
                if (!r.ok)
                    failures++;
            std::cerr << rows.size() << " rows (" << failures << " failed) -> "
                      << opts.out_dir << "\n";
            return 0;
        }

        if (cmd_tune->parsed()) {
            Toolchain tc(resolve_toolchain(opts, exe_dir), opts.work_dir);
            CorpusProgram prog = program_from(opts, tune_program, tune_source, tune_limit);
            tune_cfg.model = model;
            tune_cfg.instr_limit = prog.limit ? prog.limit : tune_limit;
            tune_cfg.jobs = opts.jobs;
            tune_cfg.compare_levels = tune_levels;
            BuildRequest req{prog.source, OptProfile::baseline(), prog.defines};
            auto result = tune(tc, req, tune_cfg);

            fs::create_directories(opts.out_dir);
            const std::string stem = "tune-" + prog.id + "-seed" +
                                     std::to_string(tune_cfg.seed);
            write_file(fs::path(opts.out_dir) / (stem + ".json"),
                       tune_result_to_json(result).dump(2) + "\n");
            write_file(fs::path(opts.out_dir) / (stem + ".evals.jsonl"),
                       evaluations_to_jsonl(result));
            std::cout << tune_result_to_json(result)["best"].dump(2) << "\n";
            std::cerr << "baseline fitness " << result.baseline_fitness << ", best "
                      << (result.best.finite() ? std::to_string(*result.best.fitness)
                                               : std::string("n/a"))
                      << " -> " << opts.out_dir << "/" << stem << ".json\n";
            return 0;
        }

        if (cmd_mine->parsed()) {
            std::vector<TuneResult> results;
            for (const auto& f : mine_files)
                results.push_back(tune_result_from_json(nlohmann::json::parse(read_text_file(f))));
            auto report = mine_subsequences(results, mine_k, mine_n);
            auto dump_table = [](const GramTable& t) {
                nlohmann::json arr = nlohmann::json::array();
                for (auto& [gram, count] : t) {
                    nlohmann::json e;
                    e["gram"] = gram;
                    e["count"] = count;
                    arr.push_back(e);
                }
                return arr;
            };
            nlohmann::json out;
            out["k"] = report.k;
            out["n"] = report.n;
            out["best"] = dump_table(report.best);
            out["worst"] = dump_table(report.worst);
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (cmd_analyze->parsed()) {
            auto image = load_elf_file(analyze_elf);
            auto findings = scan(image, model, analyze_opts);
            if (analyze_json)
                std::cout << findings_to_jsonl(findings);
            else
                std::cout << render_findings(findings);
            return 0;
        }

        if (cmd_oracle->parsed()) {
            Toolchain tc(resolve_toolchain(opts, exe_dir), opts.work_dir);
            CorpusProgram prog = program_from(opts, oracle_program, oracle_source, oracle_limit);
            auto verdict = diff_oracle(tc, prog, parse_profile(oracle_a),
                                       parse_profile(oracle_b), model);
            nlohmann::json j;
            j["verdict"] = verdict_name(verdict.kind);
            j["detail"] = verdict_detail_name(verdict.detail);
            if (!verdict.note.empty())
                j["note"] = verdict.note;
            std::cout << j.dump(2) << "\n";
            if (verdict.kind == OracleVerdict::Kind::Divergent)
                return 1;
            if (verdict.detail == OracleVerdict::Detail::BuildError)
                return 2;
            return 0;
        }

        if (cmd_report->parsed()) {
            auto rows = metrics_rows_from_jsonl(read_text_file(report_rows));
            std::cout << render_summary(rows);
            fs::create_directories(opts.out_dir);
            write_file(fs::path(opts.out_dir) / "metrics.csv", metrics_to_csv(rows));
            write_file(fs::path(opts.out_dir) / "summary.txt", render_summary(rows));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
