#pragma once

#include <algorithm>
#include <atomic>
#include <thread>

#include "zkopt/autotune.hpp"
#include "zkopt/cost.hpp"
#include "zkopt/elf.hpp"
#include "zkopt/stats.hpp"
#include "zkopt/toolchain.hpp"

namespace zkopt {

// --- corpus manifest ----------------------------------------------------------

struct CorpusProgram {
    std::string id;
    fs::path source;                              // empty when prebuilt
    fs::path prebuilt_elf;                        // empty when compiled from source
    std::map<std::string, std::string> defines;
    u64 limit = 10'000'000;

    bool prebuilt() const { return !prebuilt_elf.empty(); }
};

struct Manifest {
    std::vector<CorpusProgram> programs;

    const CorpusProgram* find(const std::string& id) const {
        for (const auto& p : programs)
            if (p.id == id)
                return &p;
        return nullptr;
    }
};

inline Manifest load_manifest(const fs::path& path) {
    Manifest m;
    auto j = nlohmann::json::parse(read_text_file(path));
    const fs::path base = path.parent_path();
    try {
        for (const auto& e : j.at("programs")) {
            CorpusProgram p;
            p.id = e.at("id").get<std::string>();
            if (e.contains("source"))
                p.source = base / e.at("source").get<std::string>();
            if (e.contains("elf"))
                p.prebuilt_elf = base / e.at("elf").get<std::string>();
            if (p.source.empty() && p.prebuilt_elf.empty())
                throw ConfigError("manifest program '" + p.id + "' has no source or elf");
            if (e.contains("defines"))
                for (auto& [k, v] : e.at("defines").items())
                    p.defines[k] = v.get<std::string>();
            p.limit = e.value("limit", u64{10'000'000});
            m.programs.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad corpus manifest: ") + e.what());
    }
    return m;
}

// --- metrics rows ---------------------------------------------------------------

struct MetricsRow {
    std::string program;
    std::string profile;
    std::string artifact;        // elf content hash, empty on build failure
    std::string model;
    bool ok = false;
    std::string error;           // failure detail when !ok
    CycleBreakdown cycles;
    u64 retired = 0;
    double emu_wall_s = 0.0;
    std::optional<double> proving_est_s;
    std::optional<double> native_wall_s;
    std::string exit_status;     // "exit(0)", trap name, or "limit"
    std::string output_sha256;
};

enum class Metric : u8 { Cycles, ProvingSeconds, EmuWallSeconds, NativeWallSeconds };

constexpr const char* metric_name(Metric m) {
    switch (m) {
    case Metric::Cycles:            return "cycles";
    case Metric::ProvingSeconds:    return "proving_s";
    case Metric::EmuWallSeconds:    return "emu_wall_s";
    case Metric::NativeWallSeconds: return "native_wall_s";
    }
    return "?";
}

inline std::optional<double> metric_value(const MetricsRow& row, Metric m) {
    if (!row.ok)
        return std::nullopt;
    switch (m) {
    case Metric::Cycles:            return static_cast<double>(row.cycles.total);
    case Metric::ProvingSeconds:    return row.proving_est_s;
    case Metric::EmuWallSeconds:    return row.emu_wall_s;
    case Metric::NativeWallSeconds: return row.native_wall_s;
    }
    return std::nullopt;
}

/// Build (or load), execute, and account one (program, profile) pair.
/// Failures come back as rows with ok=false, never as exceptions.
inline MetricsRow run_benchmark(Toolchain& toolchain, const CorpusProgram& program,
                                const OptProfile& profile, const CostModel& model,
                                const ProvingEstimator* estimator = nullptr) {
    MetricsRow row;
    row.program = program.id;
    row.profile = profile.id();
    row.model = model.name;

    fs::path elf_path;
    try {
        if (program.prebuilt()) {
            if (!fs::exists(program.prebuilt_elf))
                throw ConfigError("prebuilt ELF missing: " + program.prebuilt_elf.string());
            elf_path = program.prebuilt_elf;
            row.artifact = Sha256::hex(read_file(elf_path));
        } else {
            auto artifact = toolchain.compile({program.source, profile, program.defines});
            elf_path = artifact.elf_path;
            row.artifact = artifact.elf_hash;
        }

        auto image = load_elf_file(elf_path);
        MachineState st;
        for (auto& [id, cycles] : model.accelerators)
            st.accelerator_ids.insert(id);
        load_image(st, image);

        const auto t0 = std::chrono::steady_clock::now();
        auto trace = run(st, program.limit);
        const auto t1 = std::chrono::steady_clock::now();

        row.emu_wall_s = std::chrono::duration<double>(t1 - t0).count();
        row.retired = trace.retired;
        row.cycles = account(trace, model);
        row.exit_status = trace.halt.describe();
        row.output_sha256 = Sha256::hex(trace.output);
        if (estimator)
            row.proving_est_s = estimate_proving(row.cycles, *estimator);
        row.ok = trace.ok();
        if (!trace.ok())
            row.error = trace.halt.describe();
    } catch (const Error& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

/// Corpus x profiles under a parallel job pool. Output order is always
/// (program, profile) input order, independent of completion order.
inline std::vector<MetricsRow>
run_bench_matrix(Toolchain& toolchain, const Manifest& manifest,
                 const std::vector<OptProfile>& profiles, const CostModel& model,
                 const ProvingEstimator* estimator = nullptr, unsigned jobs = 1) {
    struct Job {
        const CorpusProgram* program;
        const OptProfile* profile;
    };
    std::vector<Job> jobs_list;
    for (const auto& prog : manifest.programs)
        for (const auto& prof : profiles)
            jobs_list.push_back({&prog, &prof});

    std::vector<MetricsRow> rows(jobs_list.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs_list.size())
                return;
            rows[i] = run_benchmark(toolchain, *jobs_list[i].program,
                                    *jobs_list[i].profile, model, estimator);
        }
    };
    const unsigned n = std::max(1u, std::min(jobs, static_cast<unsigned>(jobs_list.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; t++)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    return rows;
}

// --- impact analysis ------------------------------------------------------------

class ImpactError : public Error {
public:
    enum class Kind { MismatchedRows, ZeroBaseline };
    ImpactError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

enum class ImpactCategory : u8 { SevereLoss, ModerateLoss, Neutral, ModerateGain, SevereGain };

constexpr const char* impact_category_name(ImpactCategory c) {
    switch (c) {
    case ImpactCategory::SevereLoss:   return "severe-loss";
    case ImpactCategory::ModerateLoss: return "moderate-loss";
    case ImpactCategory::Neutral:      return "neutral";
    case ImpactCategory::ModerateGain: return "moderate-gain";
    case ImpactCategory::SevereGain:   return "severe-gain";
    }
    return "?";
}

struct CategoryThresholds {
    double moderate = 2.0;   // strict: |x| must exceed this to leave Neutral
    double severe = 5.0;     // inclusive: |x| >= severe is severe
};

/// Partition of the impact-percent line:
///   (-inf,-5] severe loss, (-5,-2) moderate loss, [-2,2] neutral,
///   (2,5) moderate gain, [5,inf) severe gain.
inline ImpactCategory categorize(double percent, CategoryThresholds t = {}) {
    if (percent <= -t.severe)
        return ImpactCategory::SevereLoss;
    if (percent < -t.moderate)
        return ImpactCategory::ModerateLoss;
    if (percent <= t.moderate)
        return ImpactCategory::Neutral;
    if (percent < t.severe)
        return ImpactCategory::ModerateGain;
    return ImpactCategory::SevereGain;
}

/// Positive percent = improvement for cost-like metrics:
/// (baseline - value) / baseline * 100.
struct ImpactRow {
    std::string program;
    std::string profile;
    std::string model;
    std::string metric;
    double baseline_value = 0.0;
    double profile_value = 0.0;
    double percent = 0.0;
    ImpactCategory category = ImpactCategory::Neutral;
};

inline ImpactRow impact(const MetricsRow& baseline, const MetricsRow& profiled,
                        Metric metric, CategoryThresholds thresholds = {}) {
    if (baseline.program != profiled.program || baseline.model != profiled.model)
        throw ImpactError(ImpactError::Kind::MismatchedRows,
                          "impact: rows disagree on program or cost model");
    auto bv = metric_value(baseline, metric);
    auto pv = metric_value(profiled, metric);
    if (!bv || !pv)
        throw ImpactError(ImpactError::Kind::MismatchedRows,
                          "impact: metric missing on one side (failed row?)");
    if (*bv <= 0.0)
        throw ImpactError(ImpactError::Kind::ZeroBaseline,
                          "impact: baseline value must be positive");
    ImpactRow row;
    row.program = profiled.program;
    row.profile = profiled.profile;
    row.model = profiled.model;
    row.metric = metric_name(metric);
    row.baseline_value = *bv;
    row.profile_value = *pv;
    row.percent = (*bv - *pv) / *bv * 100.0;
    row.category = categorize(row.percent, thresholds);
    return row;
}

/// Table-style tallies: gains (> moderate) and losses (< -moderate) plus the
/// four non-neutral category buckets, grouped by (model, profile).
struct OutcomeCounts {
    u64 gains = 0;
    u64 losses = 0;
    std::array<u64, 5> by_category{};   // indexed by ImpactCategory
};

inline std::map<std::pair<std::string, std::string>, OutcomeCounts>
count_outcomes(const std::vector<ImpactRow>& rows, CategoryThresholds thresholds = {}) {
    std::map<std::pair<std::string, std::string>, OutcomeCounts> out;
    for (const auto& r : rows) {
        auto& c = out[{r.model, r.profile}];
        if (r.percent > thresholds.moderate)
            c.gains++;
        if (r.percent < -thresholds.moderate)
            c.losses++;
        c.by_category[static_cast<size_t>(r.category)]++;
    }
    return out;
}

// --- correlation -----------------------------------------------------------------

class DegenerateSeries : public Error {
public:
    explicit DegenerateSeries(const std::string& what) : Error(what) {}
};

struct Correlation {
    double pearson = 0.0;
    double spearman = 0.0;
};

inline Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw DegenerateSeries("correlate: series lengths differ");
    if (xs.size() < 3)
        throw DegenerateSeries("correlate: need at least 3 points");
    if (stats::variance(xs) == 0.0 || stats::variance(ys) == 0.0)
        throw DegenerateSeries("correlate: a series has zero variance");
    return {stats::pearson(xs, ys), stats::spearman(xs, ys)};
}

// --- native wall-clock comparison --------------------------------------------------

class HostBuildFailed : public Error {
public:
    explicit HostBuildFailed(const std::string& what) : Error(what) {}
};

struct HostConfig {
    std::vector<std::string> cc;   // template with {level} {input}... {output}
    std::vector<std::string> runtime_sources;
    unsigned repetitions = 10;
    fs::path base_dir;
};

inline HostConfig host_config_from_json(const nlohmann::json& j, const fs::path& base) {
    HostConfig c;
    try {
        c.cc = j.at("host_cc").get<std::vector<std::string>>();
        c.runtime_sources = j.at("host_runtime_sources").get<std::vector<std::string>>();
        c.repetitions = j.value("host_repetitions", 10u);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad host config: ") + e.what());
    }
    c.base_dir = base;
    return c;
}

/// Median-of-R wall time of a natively compiled corpus program.
inline double native_time(const HostConfig& host, const CorpusProgram& program,
                          const std::string& level, const fs::path& work_dir) {
    if (program.source.empty())
        throw HostBuildFailed("native_time: program has no source");
    fs::create_directories(work_dir);
    const fs::path exe = work_dir / (program.id + ".native");

    std::vector<std::string> argv;
    for (std::string el : host.cc) {
        if (el == "{inputs}") {
            argv.push_back(program.source.string());
            for (const auto& rs : host.runtime_sources) {
                fs::path p = rs;
                if (!p.is_absolute())
                    p = host.base_dir / p;
                argv.push_back(p.string());
            }
            continue;
        }
        size_t pos;
        while ((pos = el.find("{level}")) != std::string::npos)
            el.replace(pos, 7, level);
        while ((pos = el.find("{output}")) != std::string::npos)
            el.replace(pos, 8, exe.string());
        argv.push_back(el);
    }
    for (const auto& [k, v] : program.defines)
        argv.push_back("-D" + k + "=" + v);

    auto res = run_command(argv);
    if (!res.ok())
        throw HostBuildFailed("host compile failed: " + join_argv(argv) + "\n" + res.err);

    std::vector<double> times;
    for (unsigned i = 0; i < std::max(1u, host.repetitions); i++) {
        auto r = run_command({exe.string()});
        if (r.signaled)
            throw HostBuildFailed("native run crashed: " + program.id);
        times.push_back(r.wall_seconds);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

// --- differential oracle -------------------------------------------------------------

struct OracleVerdict {
    enum class Kind : u8 { Equivalent, Divergent, Inconclusive };
    enum class Detail : u8 { None, ExitMismatch, OutputMismatch, LimitMismatch, BothFailed, BuildError };
    Kind kind = Kind::Inconclusive;
    Detail detail = Detail::None;
    std::string note;

    bool equivalent() const { return kind == Kind::Equivalent; }
};

constexpr const char* verdict_name(OracleVerdict::Kind k) {
    switch (k) {
    case OracleVerdict::Kind::Equivalent:   return "equivalent";
    case OracleVerdict::Kind::Divergent:    return "divergent";
    case OracleVerdict::Kind::Inconclusive: return "inconclusive";
    }
    return "?";
}

constexpr const char* verdict_detail_name(OracleVerdict::Detail d) {
    switch (d) {
    case OracleVerdict::Detail::None:           return "none";
    case OracleVerdict::Detail::ExitMismatch:   return "exit-mismatch";
    case OracleVerdict::Detail::OutputMismatch: return "output-mismatch";
    case OracleVerdict::Detail::LimitMismatch:  return "limit-mismatch";
    case OracleVerdict::Detail::BothFailed:     return "both-failed";
    case OracleVerdict::Detail::BuildError:     return "build-error";
    }
    return "?";
}

/// Two equivalent builds must produce identical exit codes and output bytes.
/// A limit hit on exactly one side is a divergence; identical failures are
/// inconclusive.
inline OracleVerdict compare_traces(const RunTrace& a, const RunTrace& b) {
    OracleVerdict v;
    const bool a_limit = a.halt.kind == HaltKind::LimitExceeded;
    const bool b_limit = b.halt.kind == HaltKind::LimitExceeded;
    if (a_limit != b_limit) {
        v.kind = OracleVerdict::Kind::Divergent;
        v.detail = OracleVerdict::Detail::LimitMismatch;
        return v;
    }
    if (a_limit && b_limit) {
        v.kind = OracleVerdict::Kind::Inconclusive;
        v.detail = OracleVerdict::Detail::BothFailed;
        v.note = "both hit the instruction limit";
        return v;
    }
    const bool a_trap = a.halt.kind == HaltKind::Trapped;
    const bool b_trap = b.halt.kind == HaltKind::Trapped;
    if (a_trap && b_trap) {
        v.kind = OracleVerdict::Kind::Inconclusive;
        v.detail = OracleVerdict::Detail::BothFailed;
        v.note = "both trapped: " + a.halt.describe() + " / " + b.halt.describe();
        return v;
    }
    if (a_trap != b_trap) {
        v.kind = OracleVerdict::Kind::Divergent;
        v.detail = OracleVerdict::Detail::ExitMismatch;
        v.note = a.halt.describe() + " vs " + b.halt.describe();
        return v;
    }
    if (a.halt.exit_code != b.halt.exit_code) {
        v.kind = OracleVerdict::Kind::Divergent;
        v.detail = OracleVerdict::Detail::ExitMismatch;
        v.note = "exit " + std::to_string(a.halt.exit_code) + " vs " +
                 std::to_string(b.halt.exit_code);
        return v;
    }
    if (a.output != b.output) {
        v.kind = OracleVerdict::Kind::Divergent;
        v.detail = OracleVerdict::Detail::OutputMismatch;
        return v;
    }
    v.kind = OracleVerdict::Kind::Equivalent;
    v.detail = OracleVerdict::Detail::None;
    return v;
}

inline RunTrace run_elf_for_oracle(const fs::path& elf, const CostModel& model, u64 limit) {
    auto image = load_elf_file(elf);
    MachineState st;
    for (auto& [id, cycles] : model.accelerators)
        st.accelerator_ids.insert(id);
    load_image(st, image);
    return run(st, limit);
}

inline OracleVerdict diff_oracle(Toolchain& toolchain, const CorpusProgram& program,
                                 const OptProfile& profile_a, const OptProfile& profile_b,
                                 const CostModel& model) {
    fs::path elf_a, elf_b;
    try {
        if (program.prebuilt()) {
            elf_a = elf_b = program.prebuilt_elf;
        } else {
            elf_a = toolchain.compile({program.source, profile_a, program.defines}).elf_path;
            elf_b = toolchain.compile({program.source, profile_b, program.defines}).elf_path;
        }
    } catch (const ToolError& e) {
        OracleVerdict v;
        v.kind = OracleVerdict::Kind::Inconclusive;
        v.detail = OracleVerdict::Detail::BuildError;
        v.note = e.what();
        return v;
    }
    auto ta = run_elf_for_oracle(elf_a, model, program.limit);
    auto tb = run_elf_for_oracle(elf_b, model, program.limit);
    return compare_traces(ta, tb);
}

} // namespace zkopt
