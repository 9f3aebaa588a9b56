#pragma once

#include <atomic>
#include <random>
#include <thread>

#include "zkopt/cost.hpp"
#include "zkopt/elf.hpp"
#include "zkopt/toolchain.hpp"

namespace zkopt {

class TuneError : public Error {
public:
    enum class Kind { ConfigInvalid, BaselineBuildFailed };
    TuneError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

enum class EvalStatus : u8 { Ok, BuildFailed, RunError, LimitExceeded, OutputDiverged };

constexpr const char* eval_status_name(EvalStatus s) {
    switch (s) {
    case EvalStatus::Ok:             return "ok";
    case EvalStatus::BuildFailed:    return "build-failed";
    case EvalStatus::RunError:       return "run-error";
    case EvalStatus::LimitExceeded:  return "limit-exceeded";
    case EvalStatus::OutputDiverged: return "output-diverged";
    }
    return "?";
}

inline std::optional<EvalStatus> eval_status_from_name(const std::string& s) {
    for (int i = 0; i <= 4; i++)
        if (s == eval_status_name(static_cast<EvalStatus>(i)))
            return static_cast<EvalStatus>(i);
    return std::nullopt;
}

/// One evaluated pass sequence. Failures carry no fitness value at all;
/// they sort after every finite candidate.
struct Candidate {
    std::vector<std::string> passes;
    EvalStatus status = EvalStatus::BuildFailed;
    std::optional<u64> fitness;    // engaged iff status == Ok
    std::string artifact_hash;

    bool finite() const { return fitness.has_value(); }
};

/// Ordering used everywhere: finite before infinite, lower fitness first,
/// shorter sequence first, then lexicographic.
inline bool better_than(const Candidate& a, const Candidate& b) {
    if (a.finite() != b.finite())
        return a.finite();
    if (a.finite() && *a.fitness != *b.fitness)
        return *a.fitness < *b.fitness;
    if (a.passes.size() != b.passes.size())
        return a.passes.size() < b.passes.size();
    return a.passes < b.passes;
}

struct TuneConfig {
    PassCatalog catalog = default_pass_catalog();
    size_t max_depth = 20;
    u32 iterations = 160;          // total candidate evaluations, duplicates included
    u32 population = 20;
    double mutation_rate = 0.3;
    u32 tournament = 2;
    u32 elitism = 1;
    u64 seed = 1;
    u64 instr_limit = 50'000'000;
    CostModel model = r0like_model();
    enum class Target { Cycles, ProvingSeconds } target = Target::Cycles;
    ProvingEstimator estimator{};  // used when target == ProvingSeconds
    bool compare_levels = false;   // also evaluate the six standard levels
    unsigned jobs = 1;

    void validate() const {
        if (catalog.passes.empty())
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: empty pass catalog");
        if (max_depth < 1)
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: max depth must be >= 1");
        if (population < 2)
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: population must be >= 2");
        if (mutation_rate < 0.0 || mutation_rate > 1.0)
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: mutation rate outside [0,1]");
        if (iterations == 0)
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: iterations must be >= 1");
        if (tournament < 1)
            throw TuneError(TuneError::Kind::ConfigInvalid, "tune: tournament size must be >= 1");
        if (elitism >= population)
            throw TuneError(TuneError::Kind::ConfigInvalid,
                            "tune: elitism must be smaller than the population");
        model.validate();
    }
};

struct TuneResult {
    Candidate best;
    std::vector<std::optional<u64>> history;   // best-so-far fitness after each generation
    std::vector<Candidate> log;                // every evaluation, in order
    u64 baseline_fitness = 0;
    std::map<std::string, std::optional<u64>> level_fitness;
    u64 cache_hits = 0;
};

/// Evaluates pass sequences for one program: compile, run under the model,
/// check architectural results against the baseline run, convert to fitness.
class Evaluator {
public:
    Evaluator(Toolchain& toolchain, BuildRequest program, const TuneConfig& config)
        : toolchain_(toolchain), program_(std::move(program)), config_(config) {
        BuildArtifact base;
        try {
            BuildRequest req = program_;
            req.profile = OptProfile::baseline();
            base = toolchain_.compile(req);
        } catch (const ToolError& e) {
            throw TuneError(TuneError::Kind::BaselineBuildFailed,
                            std::string("baseline build failed: ") + e.what());
        }
        auto trace = run_artifact(base);
        if (!trace.ok())
            throw TuneError(TuneError::Kind::BaselineBuildFailed,
                            "baseline run failed: " + trace.halt.describe());
        baseline_exit_ = trace.halt.exit_code;
        baseline_output_ = trace.output;
        baseline_fitness_ = fitness_of(trace);
    }

    u64 baseline_fitness() const { return baseline_fitness_; }

    /// Fold every failure into an infinite-fitness candidate; only
    /// configuration errors escape.
    Candidate evaluate(const std::vector<std::string>& passes) {
        Candidate cand;
        cand.passes = passes;

        BuildRequest req = program_;
        req.profile = OptProfile::sequence(passes);
        req.profile.validate(toolchain_.catalog(), config_.max_depth);

        BuildArtifact artifact;
        try {
            artifact = toolchain_.compile(req);
        } catch (const ToolError&) {
            cand.status = EvalStatus::BuildFailed;
            return cand;
        }
        cand.artifact_hash = artifact.elf_hash;

        {
            std::scoped_lock lk(cache_mutex_);
            auto it = cache_.find(artifact.elf_hash);
            if (it != cache_.end()) {
                cand.status = it->second.status;
                cand.fitness = it->second.fitness;
                cache_hits_ += 1;
                return cand;
            }
        }

        auto trace = run_artifact(artifact);
        if (trace.halt.kind == HaltKind::LimitExceeded) {
            cand.status = EvalStatus::LimitExceeded;
        } else if (trace.halt.kind == HaltKind::Trapped) {
            cand.status = EvalStatus::RunError;
        } else if (trace.halt.exit_code != baseline_exit_ ||
                   trace.output != baseline_output_) {
            cand.status = EvalStatus::OutputDiverged;
            std::scoped_lock lk(cache_mutex_);
            divergences_.push_back(cand);
        } else {
            cand.status = EvalStatus::Ok;
            cand.fitness = fitness_of(trace);
        }

        std::scoped_lock lk(cache_mutex_);
        cache_[artifact.elf_hash] = {cand.status, cand.fitness};
        return cand;
    }

    std::optional<u64> evaluate_level(const std::string& level) {
        BuildRequest req = program_;
        req.profile = OptProfile::standard(level);
        try {
            auto artifact = toolchain_.compile(req);
            auto trace = run_artifact(artifact);
            if (!trace.ok() || trace.halt.exit_code != baseline_exit_ ||
                trace.output != baseline_output_)
                return std::nullopt;
            return fitness_of(trace);
        } catch (const ToolError&) {
            return std::nullopt;
        }
    }

    u64 cache_hits() const { return cache_hits_; }
    const std::vector<Candidate>& divergences() const { return divergences_; }

private:
    struct CacheEntry {
        EvalStatus status;
        std::optional<u64> fitness;
    };

    RunTrace run_artifact(const BuildArtifact& artifact) const {
        auto image = load_elf_file(artifact.elf_path);
        MachineState st;
        for (u32 id : accelerator_ids_from(config_.model))
            st.accelerator_ids.insert(id);
        load_image(st, image);
        return run(st, config_.instr_limit);
    }

    static std::vector<u32> accelerator_ids_from(const CostModel& m) {
        std::vector<u32> ids;
        for (auto& [id, cycles] : m.accelerators)
            ids.push_back(id);
        return ids;
    }

    u64 fitness_of(const RunTrace& trace) const {
        auto breakdown = account(trace, config_.model);
        if (config_.target == TuneConfig::Target::ProvingSeconds) {
            const double sec = estimate_proving(breakdown, config_.estimator);
            return static_cast<u64>(sec * 1e6 + 0.5);   // microseconds
        }
        return breakdown.total;
    }

    Toolchain& toolchain_;
    BuildRequest program_;
    const TuneConfig& config_;
    u32 baseline_exit_ = 0;
    std::vector<u8> baseline_output_;
    u64 baseline_fitness_ = 0;

    std::mutex cache_mutex_;
    std::map<std::string, CacheEntry> cache_;
    std::vector<Candidate> divergences_;
    u64 cache_hits_ = 0;
};

namespace detail {

/// Evaluate a generation, optionally with a worker pool. Results land at
/// their candidate's index, so parallelism cannot reorder anything.
inline std::vector<Candidate>
evaluate_generation(Evaluator& eval, const std::vector<std::vector<std::string>>& gen,
                    unsigned jobs) {
    std::vector<Candidate> out(gen.size());
    if (jobs <= 1 || gen.size() <= 1) {
        for (size_t i = 0; i < gen.size(); i++)
            out[i] = eval.evaluate(gen[i]);
        return out;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= gen.size())
                return;
            out[i] = eval.evaluate(gen[i]);
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(gen.size()));
    pool.reserve(n);
    for (unsigned t = 0; t < n; t++)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    return out;
}

} // namespace detail

/// Seeded genetic search over pass sequences, fitness = emulated cost.
/// All randomness stays on the coordinator, so results are reproducible
/// regardless of evaluation parallelism.
inline TuneResult tune(Toolchain& toolchain, const BuildRequest& program,
                       const TuneConfig& config) {
    config.validate();
    for (const auto& p : config.catalog.passes)
        if (!toolchain.catalog().find(p.name))
            throw TuneError(TuneError::Kind::ConfigInvalid,
                            "tune: search catalog pass '" + p.name +
                                "' is not in the toolchain catalog");
    Evaluator evaluator(toolchain, program, config);

    std::mt19937_64 rng(config.seed);
    const auto names = config.catalog.names();
    auto random_pass = [&] { return names[rng() % names.size()]; };
    auto random_sequence = [&] {
        const size_t len = rng() % (config.max_depth + 1);
        std::vector<std::string> s;
        s.reserve(len);
        for (size_t i = 0; i < len; i++)
            s.push_back(random_pass());
        return s;
    };

    TuneResult result;
    result.baseline_fitness = evaluator.baseline_fitness();
    u64 budget = config.iterations;
    std::vector<Candidate> population;

    auto best_of_log = [&]() -> const Candidate* {
        const Candidate* best = nullptr;
        for (const auto& c : result.log)
            if (c.finite() && (!best || better_than(c, *best)))
                best = &c;
        return best;
    };
    auto note_generation = [&] {
        const Candidate* best = best_of_log();
        result.history.push_back(best ? best->fitness : std::nullopt);
    };

    // initial population
    {
        std::vector<std::vector<std::string>> gen;
        const size_t n = std::min<u64>(config.population, budget);
        for (size_t i = 0; i < n; i++)
            gen.push_back(random_sequence());
        population = detail::evaluate_generation(evaluator, gen, config.jobs);
        for (const auto& c : population)
            result.log.push_back(c);
        budget -= gen.size();
        note_generation();
    }

    auto tournament = [&]() -> const Candidate& {
        const Candidate* best = &population[rng() % population.size()];
        for (u32 i = 1; i < config.tournament; i++) {
            const Candidate& other = population[rng() % population.size()];
            if (better_than(other, *best))
                best = &other;
        }
        return *best;
    };

    while (budget > 0) {
        // breed next generation: elites survive, the rest are offspring
        std::vector<const Candidate*> order;
        for (const auto& c : population)
            order.push_back(&c);
        std::sort(order.begin(), order.end(),
                  [](const Candidate* a, const Candidate* b) { return better_than(*a, *b); });

        std::vector<Candidate> next;
        for (u32 e = 0; e < config.elitism && e < order.size(); e++)
            next.push_back(*order[e]);   // cached fitness; no budget spent

        std::vector<std::vector<std::string>> offspring;
        while (next.size() + offspring.size() < config.population &&
               offspring.size() < budget) {
            const auto& p1 = tournament().passes;
            const auto& p2 = tournament().passes;
            // single-point crossover
            const size_t cut1 = p1.empty() ? 0 : rng() % (p1.size() + 1);
            const size_t cut2 = p2.empty() ? 0 : rng() % (p2.size() + 1);
            std::vector<std::string> child(p1.begin(), p1.begin() + cut1);
            child.insert(child.end(), p2.begin() + cut2, p2.end());
            if (child.size() > config.max_depth)
                child.resize(config.max_depth);
            // mutation: replace, insert, or delete one pass
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.mutation_rate) {
                const u32 kind = rng() % 3;
                if (kind == 0 && !child.empty()) {
                    child[rng() % child.size()] = random_pass();
                } else if (kind == 1 && child.size() < config.max_depth) {
                    const size_t at = rng() % (child.size() + 1);
                    child.insert(child.begin() + at, random_pass());
                } else if (kind == 2 && !child.empty()) {
                    child.erase(child.begin() + rng() % child.size());
                }
            }
            offspring.push_back(std::move(child));
        }

        auto evaluated = detail::evaluate_generation(evaluator, offspring, config.jobs);
        for (const auto& c : evaluated) {
            result.log.push_back(c);
            next.push_back(c);
        }
        budget -= evaluated.size();
        population = std::move(next);
        note_generation();
    }

    const Candidate* best = best_of_log();
    if (best) {
        result.best = *best;
        // recorded fitness must reproduce on a fresh evaluation
        Candidate again = evaluator.evaluate(best->passes);
        if (again.fitness != best->fitness)
            throw Error("tune: best candidate fitness failed to reproduce");
    } else {
        result.best.status = EvalStatus::BuildFailed;
    }

    if (config.compare_levels)
        for (const auto& lvl : standard_levels())
            result.level_fitness["O" + lvl] = evaluator.evaluate_level(lvl);

    result.cache_hits = evaluator.cache_hits();
    return result;
}

// --- subsequence mining ------------------------------------------------------

class InsufficientCandidates : public Error {
public:
    explicit InsufficientCandidates(const std::string& what) : Error(what) {}
};

using GramTable = std::map<std::vector<std::string>, u64>;

struct SubsequenceReport {
    GramTable best;    // grams of length 1..n over the top-k pools
    GramTable worst;   // same over the bottom-k pools
    size_t k = 0;
    size_t n = 0;
};

/// Collect top-k and bottom-k finite candidates per result and count
/// n-grams (n <= 2: unigrams and adjacent ordered bigrams).
inline SubsequenceReport mine_subsequences(const std::vector<TuneResult>& results,
                                           size_t k, size_t n = 2) {
    if (n < 1 || n > 2)
        throw ConfigError("mine_subsequences: gram length must be 1 or 2");
    if (k < 1)
        throw ConfigError("mine_subsequences: k must be >= 1");

    SubsequenceReport report;
    report.k = k;
    report.n = n;

    auto count_grams = [&](GramTable& table, const std::vector<std::string>& passes) {
        for (const auto& p : passes)
            table[{p}] += 1;
        if (n >= 2)
            for (size_t i = 0; i + 1 < passes.size(); i++)
                table[{passes[i], passes[i + 1]}] += 1;
    };

    for (const auto& r : results) {
        std::vector<const Candidate*> finite;
        for (const auto& c : r.log)
            if (c.finite())
                finite.push_back(&c);
        if (finite.size() < k)
            throw InsufficientCandidates("mine_subsequences: a result has only " +
                              std::to_string(finite.size()) +
                              " finite candidates, need k=" + std::to_string(k));
        std::sort(finite.begin(), finite.end(),
                  [](const Candidate* a, const Candidate* b) { return better_than(*a, *b); });
        for (size_t i = 0; i < k; i++)
            count_grams(report.best, finite[i]->passes);
        for (size_t i = 0; i < k; i++)
            count_grams(report.worst, finite[finite.size() - 1 - i]->passes);
    }
    return report;
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json candidate_to_json(const Candidate& c) {
    nlohmann::json j;
    j["passes"] = c.passes;
    j["status"] = eval_status_name(c.status);
    if (c.fitness)
        j["fitness"] = *c.fitness;
    else
        j["fitness"] = nullptr;
    j["artifact"] = c.artifact_hash;
    return j;
}

inline Candidate candidate_from_json(const nlohmann::json& j) {
    Candidate c;
    c.passes = j.at("passes").get<std::vector<std::string>>();
    auto status = eval_status_from_name(j.at("status").get<std::string>());
    if (!status)
        throw ConfigError("bad evaluation status in tune log");
    c.status = *status;
    if (!j.at("fitness").is_null())
        c.fitness = j.at("fitness").get<u64>();
    c.artifact_hash = j.value("artifact", std::string{});
    return c;
}

inline nlohmann::json tune_result_to_json(const TuneResult& r) {
    nlohmann::json j;
    j["best"] = candidate_to_json(r.best);
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : r.history)
        hist.push_back(h ? nlohmann::json(*h) : nlohmann::json(nullptr));
    j["history"] = hist;
    j["baseline_fitness"] = r.baseline_fitness;
    nlohmann::json levels = nlohmann::json::object();
    for (auto& [name, fit] : r.level_fitness)
        levels[name] = fit ? nlohmann::json(*fit) : nlohmann::json(nullptr);
    j["levels"] = levels;
    nlohmann::json log = nlohmann::json::array();
    for (const auto& c : r.log)
        log.push_back(candidate_to_json(c));
    j["evaluations"] = log;
    return j;
}

inline TuneResult tune_result_from_json(const nlohmann::json& j) {
    TuneResult r;
    r.best = candidate_from_json(j.at("best"));
    for (const auto& h : j.at("history"))
        r.history.push_back(h.is_null() ? std::nullopt : std::make_optional(h.get<u64>()));
    r.baseline_fitness = j.at("baseline_fitness").get<u64>();
    if (j.contains("levels"))
        for (auto& [name, fit] : j.at("levels").items())
            r.level_fitness[name] =
                fit.is_null() ? std::nullopt : std::make_optional(fit.get<u64>());
    for (const auto& c : j.at("evaluations"))
        r.log.push_back(candidate_from_json(c));
    return r;
}

/// One evaluation per line; the format consumed by mine_subsequences-driven
/// tooling and the report emitter.
inline std::string evaluations_to_jsonl(const TuneResult& r) {
    std::string out;
    for (const auto& c : r.log)
        out += candidate_to_json(c).dump() + "\n";
    return out;
}

} // namespace zkopt
