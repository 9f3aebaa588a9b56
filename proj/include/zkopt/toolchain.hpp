#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include <json.hpp>

#include "zkopt/process.hpp"
#include "zkopt/sha256.hpp"

namespace zkopt {

class ToolError : public Error {
public:
    enum class Kind { ToolNotFound, CompileFailed, UnknownPass };
    ToolError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct PassInfo {
    std::string name;       // catalog name, e.g. "licm"
    std::string pipeline;   // middle-end pipeline text, e.g. "function(loop-mssa(licm))"
    std::string note;
};

struct PassCatalog {
    std::vector<PassInfo> passes;

    const PassInfo* find(const std::string& name) const {
        for (const auto& p : passes)
            if (p.name == name)
                return &p;
        return nullptr;
    }
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& p : passes)
            out.push_back(p.name);
        return out;
    }
    void validate() const {
        std::set<std::string> seen;
        for (const auto& p : passes)
            if (!seen.insert(p.name).second)
                throw ConfigError("duplicate pass name in catalog: " + p.name);
    }
};

/// Passes with measurable effects on guest cycle counts; pipeline strings
/// use explicit nesting so any mix of module/cgscc/function/loop passes
/// composes in the listed order.
inline PassCatalog default_pass_catalog() {
    PassCatalog c;
    auto add = [&](const char* name, const char* pipeline, const char* note = "") {
        c.passes.push_back({name, pipeline, note});
    };
    add("inline", "cgscc(inline)", "call-site inlining");
    add("always-inline", "always-inline");
    add("licm", "function(loop-mssa(licm))", "loop-invariant code motion");
    add("instcombine", "function(instcombine)");
    add("sroa", "function(sroa)", "scalar replacement of aggregates");
    add("simplifycfg", "function(simplifycfg)");
    add("loop-unroll", "function(loop-unroll)");
    add("loop-deletion", "function(loop(loop-deletion))");
    add("loop-extract", "loop-extract");
    add("jump-threading", "function(jump-threading)");
    add("reg2mem", "function(reg2mem)");
    add("ipsccp", "ipsccp");
    add("attributor", "attributor");
    add("speculative-execution", "function(speculative-execution)");
    add("loop-data-prefetch", "function(loop-data-prefetch)");
    add("hot-cold-splitting", "hotcoldsplit");
    add("mem2reg", "function(mem2reg)");
    add("gvn", "function(gvn)");
    add("dce", "function(dce)");
    add("sccp", "function(sccp)");
    add("indvars", "function(loop(indvars))");
    add("loop-rotate", "function(loop(loop-rotate))");
    add("tailcallelim", "function(tailcallelim)");
    add("early-cse", "function(early-cse)");
    add("correlated-propagation", "function(correlated-propagation)");
    return c;
}

inline const std::vector<std::string>& standard_levels() {
    static const std::vector<std::string> levels = {"0", "1", "2", "3", "s", "z"};
    return levels;
}

struct OptProfile {
    enum class Kind { Baseline, StandardLevel, PassSequence };
    Kind kind = Kind::Baseline;
    std::string level;                        // "0".."3", "s", "z"
    std::vector<std::string> passes;          // catalog names, in order
    std::map<std::string, i64> thresholds;    // optimizer knob -> value
    bool lto = false;

    static OptProfile baseline() { return {}; }
    static OptProfile standard(std::string lvl) {
        OptProfile p;
        p.kind = Kind::StandardLevel;
        p.level = std::move(lvl);
        return p;
    }
    static OptProfile sequence(std::vector<std::string> names) {
        OptProfile p;
        p.kind = Kind::PassSequence;
        p.passes = std::move(names);
        return p;
    }

    /// Stable identity used in reports and cache keys.
    std::string id() const {
        std::string s;
        switch (kind) {
        case Kind::Baseline: s = "baseline"; break;
        case Kind::StandardLevel: s = "O" + level; break;
        case Kind::PassSequence: {
            s = "seq:";
            for (size_t i = 0; i < passes.size(); i++) {
                if (i)
                    s += '+';
                s += passes[i];
            }
            if (passes.empty())
                s += "(empty)";
            break;
        }
        }
        for (const auto& [k, v] : thresholds)
            s += "," + k + "=" + std::to_string(v);
        if (lto)
            s += ",lto";
        return s;
    }

    void validate(const PassCatalog& catalog, size_t max_depth) const {
        if (kind == Kind::Baseline && (!passes.empty() || !thresholds.empty()))
            throw ConfigError("baseline profile carries no passes or thresholds");
        if (kind == Kind::StandardLevel) {
            const auto& ls = standard_levels();
            if (std::find(ls.begin(), ls.end(), level) == ls.end())
                throw ConfigError("unknown optimization level: " + level);
        }
        if (kind == Kind::PassSequence) {
            if (passes.size() > max_depth)
                throw ConfigError("pass sequence exceeds max depth " +
                                  std::to_string(max_depth));
            for (const auto& p : passes)
                if (!catalog.find(p))
                    throw ConfigError("pass not in catalog: " + p);
        }
    }
};

/// Baseline, one profile per catalog pass, and the standard levels.
/// A 64-pass catalog therefore expands to 71 profiles.
inline std::vector<OptProfile> expand_profiles(const PassCatalog& catalog) {
    if (catalog.passes.empty())
        throw ConfigError("expand_profiles: empty pass catalog");
    std::vector<OptProfile> out;
    out.push_back(OptProfile::baseline());
    for (const auto& p : catalog.passes)
        out.push_back(OptProfile::sequence({p.name}));
    for (const auto& lvl : standard_levels())
        out.push_back(OptProfile::standard(lvl));
    return out;
}

// --- toolchain configuration -------------------------------------------------

/// Argv templates for each pipeline stage. Element placeholders:
///   {input} {output} {passes} {level} {zkopt_mid}  -- substituted in place
///   {thresholds} {defines} {runtime_objs} {lto}    -- expand to 0..n argv items
struct ToolchainConfig {
    std::vector<std::string> frontend_ir;    // C -> unoptimized IR
    std::vector<std::string> middle;         // IR -> IR with explicit pipeline
    std::vector<std::string> backend;        // IR -> object, no middle-end reruns
    std::vector<std::string> frontend_obj;   // C -> object at -O{level}
    std::vector<std::string> link;
    std::vector<std::string> runtime_cc;     // runtime source -> object
    std::vector<std::string> runtime_sources;
    std::vector<std::string> threshold_args_clang; // e.g. ["-mllvm", "-{name}={value}"]
    std::vector<std::string> threshold_args_mid;   // e.g. ["--mllvm", "-{name}={value}"]
    std::vector<std::string> lto_args;             // appended where {lto} appears
    std::string zkopt_mid = "zkopt-mid";
    fs::path base_dir;                       // relative paths resolve against this

    std::string identity() const {
        nlohmann::json j = to_json();
        return Sha256::hex(j.dump());
    }
    nlohmann::json to_json() const;
};

inline nlohmann::json ToolchainConfig::to_json() const {
    nlohmann::json j;
    j["frontend_ir"] = frontend_ir;
    j["middle"] = middle;
    j["backend"] = backend;
    j["frontend_obj"] = frontend_obj;
    j["link"] = link;
    j["runtime_cc"] = runtime_cc;
    j["runtime_sources"] = runtime_sources;
    j["threshold_args_clang"] = threshold_args_clang;
    j["threshold_args_mid"] = threshold_args_mid;
    j["lto_args"] = lto_args;
    j["zkopt_mid"] = zkopt_mid;
    return j;
}

inline ToolchainConfig toolchain_config_from_json(const nlohmann::json& j,
                                                  const fs::path& base_dir) {
    ToolchainConfig c;
    try {
        c.frontend_ir = j.at("frontend_ir").get<std::vector<std::string>>();
        c.middle = j.at("middle").get<std::vector<std::string>>();
        c.backend = j.at("backend").get<std::vector<std::string>>();
        c.frontend_obj = j.at("frontend_obj").get<std::vector<std::string>>();
        c.link = j.at("link").get<std::vector<std::string>>();
        c.runtime_cc = j.at("runtime_cc").get<std::vector<std::string>>();
        c.runtime_sources = j.at("runtime_sources").get<std::vector<std::string>>();
        c.threshold_args_clang = j.value("threshold_args_clang",
                                         std::vector<std::string>{"-mllvm", "-{name}={value}"});
        c.threshold_args_mid = j.value("threshold_args_mid",
                                       std::vector<std::string>{"--mllvm", "-{name}={value}"});
        c.lto_args = j.value("lto_args", std::vector<std::string>{"-flto"});
        c.zkopt_mid = j.value("zkopt_mid", std::string("zkopt-mid"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad toolchain config: ") + e.what());
    }
    c.base_dir = base_dir;
    return c;
}

inline ToolchainConfig load_toolchain_config(const fs::path& path) {
    auto j = nlohmann::json::parse(read_text_file(path));
    return toolchain_config_from_json(j, path.parent_path());
}

// --- build driver ------------------------------------------------------------

struct StageLog {
    std::string stage;
    std::vector<std::string> argv;
    int exit_code = 0;
    std::string stderr_text;
};

struct BuildArtifact {
    fs::path elf_path;
    std::string elf_hash;       // content hash of the ELF bytes
    std::string profile_id;
    std::string source_id;      // content hash of source + defines
    std::vector<StageLog> stages;
    bool from_cache = false;
};

struct BuildRequest {
    fs::path source;                       // one C translation unit
    OptProfile profile;
    std::map<std::string, std::string> defines;   // -D name=value program inputs
};

/// Compiles (program, profile) pairs into static rv32im executables and
/// content-addresses the results. Safe for concurrent compile() calls;
/// the store accepts concurrent inserts.
class Toolchain {
public:
    Toolchain(ToolchainConfig config, fs::path work_dir,
              PassCatalog catalog = default_pass_catalog(), size_t max_depth = 20)
        : config_(std::move(config)), work_dir_(std::move(work_dir)),
          catalog_(std::move(catalog)), max_depth_(max_depth) {
        catalog_.validate();
        fs::create_directories(work_dir_ / "artifacts");
        fs::create_directories(work_dir_ / "byreq");
        fs::create_directories(work_dir_ / "tmp");
    }

    const PassCatalog& catalog() const { return catalog_; }
    const ToolchainConfig& config() const { return config_; }
    size_t max_depth() const { return max_depth_; }

    /// The staged command lines a request would run, without running them.
    std::vector<std::pair<std::string, std::vector<std::string>>>
    plan(const BuildRequest& req) const {
        req.profile.validate(catalog_, max_depth_);
        std::vector<std::pair<std::string, std::vector<std::string>>> out;
        const Paths p = stage_paths("PLAN");
        for (auto& [stage, argv] : stage_commands(req, p))
            out.emplace_back(stage, argv);
        return out;
    }

    BuildArtifact compile(const BuildRequest& req) {
        req.profile.validate(catalog_, max_depth_);
        const std::string req_key = request_key(req);

        if (auto cached = lookup(req_key)) {
            BuildArtifact a;
            a.elf_path = work_dir_ / "artifacts" / (*cached + ".elf");
            a.elf_hash = *cached;
            a.profile_id = req.profile.id();
            a.source_id = source_key(req);
            a.from_cache = true;
            if (fs::exists(a.elf_path))
                return a;
            // stale index entry; fall through and rebuild
        }

        const Paths paths = stage_paths(req_key.substr(0, 16));
        fs::create_directories(paths.dir);

        BuildArtifact artifact;
        artifact.profile_id = req.profile.id();
        artifact.source_id = source_key(req);

        for (auto& [stage, argv] : stage_commands(req, paths)) {
            CommandResult res = run_command(argv);
            StageLog log{stage, argv, res.exit_code, res.err};
            artifact.stages.push_back(log);
            if (!res.ok()) {
                persist_log(artifact, "FAILED");
                fail(stage, argv, res);
            }
        }

        auto elf_bytes = read_file(paths.elf);
        artifact.elf_hash = Sha256::hex(elf_bytes);
        artifact.elf_path = work_dir_ / "artifacts" / (artifact.elf_hash + ".elf");
        if (!fs::exists(artifact.elf_path))
            fs::rename(paths.elf, artifact.elf_path);
        persist_log(artifact, "ok");
        remember(req_key, artifact.elf_hash);
        fs::remove_all(paths.dir);
        return artifact;
    }

    /// Pipeline text for a validated pass list.
    std::string pipeline_text(const std::vector<std::string>& passes) const {
        std::string text;
        for (size_t i = 0; i < passes.size(); i++) {
            const PassInfo* info = catalog_.find(passes[i]);
            if (i)
                text += ',';
            text += info ? info->pipeline : passes[i];
        }
        return text;
    }

private:
    struct Paths {
        fs::path dir;
        fs::path ir;        // frontend output
        fs::path opt_ir;    // middle-end output
        fs::path obj;
        fs::path elf;
    };

    Paths stage_paths(const std::string& tag) const {
        // unique per call: identical requests may build concurrently
        static std::atomic<u64> counter{0};
        Paths p;
        p.dir = work_dir_ / "tmp" /
                (tag + "." + std::to_string(::getpid()) + "." +
                 std::to_string(counter.fetch_add(1)));
        p.ir = p.dir / "mod.bc";
        p.opt_ir = p.dir / "mod.opt.bc";
        p.obj = p.dir / "mod.o";
        p.elf = p.dir / "prog.elf";
        return p;
    }

    std::string source_key(const BuildRequest& req) const {
        Sha256 h;
        auto src = read_file(resolve(req.source));
        h.update(src.data(), src.size());
        for (const auto& [k, v] : req.defines) {
            h.update(k.data(), k.size());
            h.update("=", 1);
            h.update(v.data(), v.size());
        }
        const auto d = h.digest();
        return Sha256::hex(d.data(), d.size());
    }

    std::string request_key(const BuildRequest& req) const {
        const std::string s = source_key(req) + "|" + req.profile.id() + "|" +
                              config_.identity();
        return Sha256::hex(s);
    }

    std::optional<std::string> lookup(const std::string& req_key) const {
        const fs::path p = work_dir_ / "byreq" / req_key;
        if (!fs::exists(p))
            return std::nullopt;
        return read_text_file(p);
    }

    void remember(const std::string& req_key, const std::string& elf_hash) const {
        const fs::path final_path = work_dir_ / "byreq" / req_key;
        static std::atomic<u64> counter{0};
        const fs::path tmp = final_path.string() + ".tmp" + std::to_string(::getpid()) +
                             "." + std::to_string(counter.fetch_add(1));
        write_file(tmp, elf_hash);
        fs::rename(tmp, final_path);
    }

    fs::path resolve(const fs::path& p) const {
        if (p.is_absolute())
            return p;
        if (fs::exists(config_.base_dir / p))
            return config_.base_dir / p;
        return p;
    }

    [[noreturn]] void fail(const std::string& stage,
                           const std::vector<std::string>& argv,
                           const CommandResult& res) const {
        const std::string what = stage + " failed (exit " +
                                 std::to_string(res.exit_code) + "): " +
                                 join_argv(argv) + "\n" + res.err;
        if (res.exit_code == 127)
            throw ToolError(ToolError::Kind::ToolNotFound, what);
        if (res.exit_code == 3 && stage == "middle")
            throw ToolError(ToolError::Kind::UnknownPass, what);
        throw ToolError(ToolError::Kind::CompileFailed, what);
    }

    void persist_log(const BuildArtifact& artifact, const std::string& status) const {
        std::string text = "status: " + status + "\nprofile: " + artifact.profile_id + "\n";
        for (const auto& s : artifact.stages) {
            text += "\n[" + s.stage + "] exit " + std::to_string(s.exit_code) + "\n$ " +
                    join_argv(s.argv) + "\n";
            if (!s.stderr_text.empty())
                text += s.stderr_text + "\n";
        }
        const std::string name =
            artifact.elf_hash.empty() ? "failed." + std::to_string(::getpid()) + ".log"
                                      : artifact.elf_hash + ".log";
        write_file(work_dir_ / "artifacts" / name, text);
    }

    // Runtime objects are compiled once per toolchain configuration and
    // shared by every profile, so profiles differ only in the unit under test.
    std::vector<std::string> runtime_objects() {
        std::scoped_lock lk(runtime_mutex_);
        if (!runtime_objs_.empty())
            return runtime_objs_;
        std::vector<std::string> objs;
        for (size_t i = 0; i < config_.runtime_sources.size(); i++) {
            const fs::path src = resolve(config_.runtime_sources[i]);
            if (!fs::exists(src))
                throw ConfigError("runtime source missing: " + src.string());
            const fs::path obj = work_dir_ / "artifacts" /
                                 ("rt" + std::to_string(i) + "." +
                                  config_.identity().substr(0, 12) + ".o");
            if (!fs::exists(obj)) {
                auto argv = substitute(config_.runtime_cc, src.string(), obj.string(),
                                       {}, {}, {}, {}, {});
                CommandResult res = run_command(argv);
                if (!res.ok())
                    fail("runtime", argv, res);
            }
            objs.push_back(obj.string());
        }
        runtime_objs_ = objs;
        return objs;
    }

    std::vector<std::pair<std::string, std::vector<std::string>>>
    stage_commands(const BuildRequest& req, const Paths& paths) const {
        // const_cast confined here: runtime compilation mutates only the cache.
        auto* self = const_cast<Toolchain*>(this);
        const auto runtime = self->runtime_objects();
        const fs::path src = resolve(req.source);
        if (!fs::exists(src))
            throw ConfigError("source file missing: " + src.string());

        std::vector<std::string> defines;
        for (const auto& [k, v] : req.defines)
            defines.push_back("-D" + k + "=" + v);

        std::vector<std::pair<std::string, std::vector<std::string>>> cmds;
        const auto& prof = req.profile;

        if (prof.kind == OptProfile::Kind::StandardLevel) {
            cmds.emplace_back("frontend",
                              substitute(config_.frontend_obj, src.string(),
                                         paths.obj.string(), prof.level, {}, defines,
                                         clang_thresholds(prof), lto(prof)));
        } else {
            cmds.emplace_back("frontend",
                              substitute(config_.frontend_ir, src.string(),
                                         paths.ir.string(), {}, {}, defines, {}, {}));
            fs::path backend_input = paths.ir;
            if (prof.kind == OptProfile::Kind::PassSequence && !prof.passes.empty()) {
                cmds.emplace_back("middle",
                                  substitute(config_.middle, paths.ir.string(),
                                             paths.opt_ir.string(), {},
                                             pipeline_text(prof.passes), {},
                                             mid_thresholds(prof), {}));
                backend_input = paths.opt_ir;
            }
            cmds.emplace_back("backend",
                              substitute(config_.backend, backend_input.string(),
                                         paths.obj.string(), {}, {}, {}, {}, {}));
        }

        cmds.emplace_back("link", substitute(config_.link, paths.obj.string(),
                                             paths.elf.string(), {}, {}, {}, {},
                                             lto(prof), runtime));
        return cmds;
    }

    std::vector<std::string> clang_thresholds(const OptProfile& p) const {
        return threshold_args(config_.threshold_args_clang, p);
    }
    std::vector<std::string> mid_thresholds(const OptProfile& p) const {
        return threshold_args(config_.threshold_args_mid, p);
    }

    static std::vector<std::string> threshold_args(const std::vector<std::string>& tpl,
                                                   const OptProfile& p) {
        std::vector<std::string> out;
        for (const auto& [name, value] : p.thresholds) {
            for (std::string el : tpl) {
                replace_all(el, "{name}", name);
                replace_all(el, "{value}", std::to_string(value));
                out.push_back(el);
            }
        }
        return out;
    }

    std::vector<std::string> lto(const OptProfile& p) const {
        return p.lto ? config_.lto_args : std::vector<std::string>{};
    }

    static void replace_all(std::string& s, const std::string& from,
                            const std::string& to) {
        size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    }

    std::vector<std::string> substitute(const std::vector<std::string>& tpl,
                                        const std::string& input,
                                        const std::string& output,
                                        const std::string& level,
                                        const std::string& passes,
                                        const std::vector<std::string>& defines,
                                        const std::vector<std::string>& thresholds,
                                        const std::vector<std::string>& lto_args,
                                        const std::vector<std::string>& runtime = {}) const {
        std::vector<std::string> argv;
        for (const std::string& el : tpl) {
            if (el == "{thresholds}") {
                argv.insert(argv.end(), thresholds.begin(), thresholds.end());
            } else if (el == "{defines}") {
                argv.insert(argv.end(), defines.begin(), defines.end());
            } else if (el == "{runtime_objs}") {
                argv.insert(argv.end(), runtime.begin(), runtime.end());
            } else if (el == "{lto}") {
                argv.insert(argv.end(), lto_args.begin(), lto_args.end());
            } else {
                std::string s = el;
                replace_all(s, "{input}", input);
                replace_all(s, "{output}", output);
                replace_all(s, "{level}", level);
                replace_all(s, "{passes}", passes);
                replace_all(s, "{zkopt_mid}", config_.zkopt_mid);
                argv.push_back(std::move(s));
            }
        }
        return argv;
    }

    ToolchainConfig config_;
    fs::path work_dir_;
    PassCatalog catalog_;
    size_t max_depth_;
    std::mutex runtime_mutex_;
    std::vector<std::string> runtime_objs_;
};

// --- catalog config ----------------------------------------------------------

inline PassCatalog pass_catalog_from_json(const nlohmann::json& j) {
    PassCatalog c;
    try {
        for (const auto& entry : j.at("passes")) {
            PassInfo p;
            p.name = entry.at("name").get<std::string>();
            p.pipeline = entry.value("pipeline", p.name);
            p.note = entry.value("note", std::string{});
            c.passes.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad pass catalog: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json pass_catalog_to_json(const PassCatalog& c) {
    nlohmann::json passes = nlohmann::json::array();
    for (const auto& p : c.passes) {
        nlohmann::json e;
        e["name"] = p.name;
        e["pipeline"] = p.pipeline;
        if (!p.note.empty())
            e["note"] = p.note;
        passes.push_back(e);
    }
    return nlohmann::json{{"passes", passes}};
}

} // namespace zkopt
