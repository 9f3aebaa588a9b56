#pragma once

#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "zkopt/machine.hpp"
#include "zkopt/stats.hpp"

namespace zkopt {

/// Cycle accounting parameters for one zkVM-style cost regime.
/// Immutable once built; one model may be shared across runs.
struct CostModel {
    std::string name;
    std::array<u64, kNumOpClasses> class_cost{};
    u32 page_size = 1024;
    u64 page_in_cost = 0;
    u64 page_out_cost = 0;
    std::map<u32, u64> accelerators;   // env-call id -> fixed cycles

    u64 cost_of(OpClass c) const { return class_cost[static_cast<size_t>(c)]; }

    void validate() const {
        if (page_size == 0 || (page_size & (page_size - 1)) != 0)
            throw ConfigError("cost model '" + name + "': page size must be a power of two");
        if (page_size % kTouchGranule != 0)
            throw ConfigError("cost model '" + name + "': page size must be a multiple of " +
                              std::to_string(kTouchGranule) + " bytes");
    }
};

/// Every instruction costs one cycle; paging is free. Approximates
/// near-uniform accounting and makes total cycles equal retired instructions.
inline CostModel uniform_model() {
    CostModel m;
    m.name = "uniform";
    m.class_cost.fill(1);
    m.page_size = 1024;
    m.page_in_cost = 0;
    m.page_out_cost = 0;
    return m;
}

/// Non-uniform table with 1 KB pages and 1130-cycle page-ins/outs.
/// Shifts, bitwise ops, and mul/div cost two cycles; the rest cost one.
inline CostModel r0like_model() {
    CostModel m;
    m.name = "r0-like";
    m.class_cost.fill(1);
    m.class_cost[static_cast<size_t>(OpClass::Shift)] = 2;
    m.class_cost[static_cast<size_t>(OpClass::Bitwise)] = 2;
    m.class_cost[static_cast<size_t>(OpClass::MulDiv)] = 2;
    m.page_size = 1024;
    m.page_in_cost = 1130;
    m.page_out_cost = 1130;
    return m;
}

/// Pure per-instruction cycle cost under a model.
inline u64 instruction_cost(const Instruction& ins, const CostModel& model) {
    return model.cost_of(ins.cls());
}

/// Resident/dirty page sets for one run under one model's page size.
struct PageTracker {
    std::set<u32> touched;
    std::set<u32> dirty;
};

struct MemAccess {
    u32 address;
    bool write;
};

/// Charge the paging cost due *now* for one access: page-in on first touch,
/// nothing on re-touch. Writes mark the page dirty; page-out is deferred
/// to finalize().
inline u64 charge_access(PageTracker& tracker, const MemAccess& access,
                         const CostModel& model) {
    const u32 page = access.address / model.page_size;
    u64 charged = 0;
    if (tracker.touched.insert(page).second)
        charged += model.page_in_cost;
    if (access.write)
        tracker.dirty.insert(page);
    return charged;
}

/// Page-out cycles owed at halt: one per dirty page.
inline u64 finalize(const PageTracker& tracker, const CostModel& model) {
    return static_cast<u64>(tracker.dirty.size()) * model.page_out_cost;
}

/// Integer cycle accounting for one run. total = compute + paging always,
/// and the per-class histogram sums to compute.
struct CycleBreakdown {
    u64 compute = 0;
    u64 paging = 0;
    u64 total = 0;
    std::array<u64, kNumOpClasses> class_cycles{};
    u64 page_ins = 0;
    u64 page_outs = 0;
};

/// Replay a trace's event summary under a cost model.
/// Architectural results are untouched; only cycles depend on the model.
inline CycleBreakdown account(const RunTrace& trace, const CostModel& model) {
    model.validate();
    CycleBreakdown b;

    for (size_t c = 0; c < kNumOpClasses; c++) {
        u64 cycles = trace.class_retired[c] * model.class_cost[c];
        b.class_cycles[c] = cycles;
        b.compute += cycles;
    }
    // Registered accelerator calls replace the default env-call charge with
    // their fixed cost.
    const u64 envcall_default = model.cost_of(OpClass::EnvCall);
    for (const auto& [id, count] : trace.ecall_counts) {
        auto it = model.accelerators.find(id);
        if (it == model.accelerators.end())
            continue;
        const u64 delta = count * it->second - count * envcall_default;
        b.class_cycles[static_cast<size_t>(OpClass::EnvCall)] += delta;
        b.compute += delta;
    }

    PageTracker tracker;
    for (const TouchEvent& ev : trace.touch_events)
        b.paging += charge_access(tracker, {ev.granule * kTouchGranule, ev.write}, model);
    b.paging += finalize(tracker, model);
    b.page_ins = tracker.touched.size();
    b.page_outs = tracker.dirty.size();

    b.total = b.compute + b.paging;
    return b;
}

/// Linear cycles-to-seconds estimate: seconds = intercept + slope * cycles.
struct ProvingEstimator {
    double intercept = 0.0;        // seconds
    double slope = 0.0;            // seconds per cycle, >= 0
    double pearson = 1.0;          // of the fit that produced this estimator
};

inline double estimate_proving(const CycleBreakdown& breakdown,
                               const ProvingEstimator& est) {
    return est.intercept + est.slope * static_cast<double>(breakdown.total);
}

class EstimatorError : public Error {
public:
    enum class Kind { DegenerateSamples, WeakCorrelation };
    EstimatorError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Least-squares fit of proving seconds against cycle counts. Refuses weak
/// proxies: |Pearson| below `pearson_floor` or a negative fitted slope.
inline ProvingEstimator fit_estimator(const std::vector<std::pair<u64, double>>& samples,
                                      double pearson_floor = 0.9) {
    if (samples.size() < 2)
        throw EstimatorError(EstimatorError::Kind::DegenerateSamples,
                             "estimator fit needs at least 2 samples");
    std::vector<double> xs, ys;
    xs.reserve(samples.size());
    ys.reserve(samples.size());
    for (auto& [cycles, seconds] : samples) {
        xs.push_back(static_cast<double>(cycles));
        ys.push_back(seconds);
    }
    const auto fit = stats::least_squares(xs, ys);
    if (!fit)
        throw EstimatorError(EstimatorError::Kind::DegenerateSamples,
                             "estimator fit needs variance in cycle counts");
    const double r = stats::pearson(xs, ys);
    if (fit->slope < 0.0)
        throw EstimatorError(EstimatorError::Kind::WeakCorrelation,
                             "cycles anti-correlate with seconds (negative slope)");
    if (std::abs(r) < pearson_floor)
        throw EstimatorError(EstimatorError::Kind::WeakCorrelation,
                             "cycle/seconds Pearson " + std::to_string(r) +
                                 " below floor " + std::to_string(pearson_floor));
    return ProvingEstimator{fit->intercept, fit->slope, r};
}

// --- model config files ----------------------------------------------------
//
// {
//   "name": "...",
//   "class_cycles": {"arith": 1, "shift": 2, ...},
//   "page_size": 1024,
//   "page_in_cycles": 1130,
//   "page_out_cycles": 1130,
//   "accelerators": {"4096": 500}
// }

inline nlohmann::json cost_model_to_json(const CostModel& m) {
    nlohmann::json j;
    j["name"] = m.name;
    nlohmann::json classes;
    for (size_t c = 0; c < kNumOpClasses; c++)
        classes[op_class_name(static_cast<OpClass>(c))] = m.class_cost[c];
    j["class_cycles"] = classes;
    j["page_size"] = m.page_size;
    j["page_in_cycles"] = m.page_in_cost;
    j["page_out_cycles"] = m.page_out_cost;
    nlohmann::json acc = nlohmann::json::object();
    for (auto& [id, cycles] : m.accelerators)
        acc[std::to_string(id)] = cycles;
    j["accelerators"] = acc;
    return j;
}

inline CostModel cost_model_from_json(const nlohmann::json& j) {
    CostModel m;
    try {
        m.name = j.at("name").get<std::string>();
        const auto& classes = j.at("class_cycles");
        for (size_t c = 0; c < kNumOpClasses; c++) {
            const char* key = op_class_name(static_cast<OpClass>(c));
            if (!classes.contains(key))
                throw ConfigError(std::string("cost model missing class '") + key + "'");
            m.class_cost[c] = classes.at(key).get<u64>();
        }
        m.page_size = j.at("page_size").get<u32>();
        m.page_in_cost = j.at("page_in_cycles").get<u64>();
        m.page_out_cost = j.at("page_out_cycles").get<u64>();
        if (j.contains("accelerators"))
            for (auto& [key, val] : j.at("accelerators").items())
                m.accelerators[static_cast<u32>(std::stoul(key, nullptr, 0))] = val.get<u64>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad cost model config: ") + e.what());
    }
    m.validate();
    return m;
}

/// Resolve a model by built-in name or by config file path.
inline CostModel load_cost_model(const std::string& name_or_path) {
    if (name_or_path == "uniform")
        return uniform_model();
    if (name_or_path == "r0-like")
        return r0like_model();
    if (!fs::exists(name_or_path))
        throw ConfigError("unknown cost model '" + name_or_path +
                          "' (not a built-in, not a file)");
    auto j = nlohmann::json::parse(read_text_file(name_or_path));
    return cost_model_from_json(j);
}

} // namespace zkopt
