#pragma once

#include "zkopt/cost.hpp"
#include "zkopt/elf.hpp"

namespace zkopt {

class UndecodableImage : public Error {
public:
    explicit UndecodableImage(const std::string& what) : Error(what) {}
};

/// Advisory finding from the static scanner. `delta_cycles` is signed:
/// positive means the flagged form costs more than its documented
/// alternative under the supplied model.
struct Finding {
    std::string rule;           // R1..R4
    std::string insight;        // I1..I4
    u32 address = 0;
    u32 end_address = 0;
    i64 delta_cycles = 0;
    std::string description;
};

struct AnalyzerOptions {
    u64 footprint_page_threshold = 16;   // R3: writable pages before flagging
    double bookkeeping_ratio_threshold = 0.5;   // R4
};

namespace detail {

inline u64 cost_sum(const CostModel& model, std::initializer_list<OpClass> classes) {
    u64 total = 0;
    for (OpClass c : classes)
        total += model.cost_of(c);
    return total;
}

} // namespace detail

/// Decode every executable word, skipping undecodable regions.
inline std::vector<std::pair<u32, Instruction>> decode_image(const LoadedImage& image) {
    std::vector<std::pair<u32, Instruction>> out;
    for (const Segment& seg : image.segments) {
        if (!seg.executable)
            continue;
        for (u32 off = 0; off + 4 <= seg.bytes.size(); off += 4) {
            u32 w = static_cast<u32>(seg.bytes[off]) |
                    (static_cast<u32>(seg.bytes[off + 1]) << 8) |
                    (static_cast<u32>(seg.bytes[off + 2]) << 16) |
                    (static_cast<u32>(seg.bytes[off + 3]) << 24);
            if (auto ins = try_decode(w))
                out.emplace_back(seg.vaddr + off, *ins);
        }
    }
    return out;
}

/// Static anti-pattern scan. Rules:
///   R1: power-of-two signed-division strength reduction
///       (srai x,31; srli 32-k; add; srai k) vs li+div            [I3]
///   R2: branchless absolute value (srai 31; xor; sub) vs branch  [I4]
///   R3: writable-segment page footprint above threshold          [I1]
///   R4: backward-branch loops dominated by bookkeeping           [I3]
inline std::vector<Finding> scan(const LoadedImage& image, const CostModel& model,
                                 AnalyzerOptions opts = {}) {
    auto code = decode_image(image);
    if (code.empty())
        throw UndecodableImage("no decodable instructions in executable segments");

    std::vector<Finding> findings;
    using M = Mnemonic;

    // consecutive-address window helper
    auto at = [&](size_t i, size_t j) -> const Instruction* {
        if (i + j >= code.size())
            return nullptr;
        if (code[i + j].first != code[i].first + 4 * j)
            return nullptr;
        return &code[i + j].second;
    };

    for (size_t i = 0; i < code.size(); i++) {
        // R1: srai t,x,31 ; srli t,t,32-k ; add y,x,t ; srai y,y,k
        {
            const Instruction* w0 = at(i, 0);
            const Instruction* w1 = at(i, 1);
            const Instruction* w2 = at(i, 2);
            const Instruction* w3 = at(i, 3);
            if (w0 && w1 && w2 && w3 && w0->op == M::Srai && w0->imm == 31 &&
                w1->op == M::Srli && w2->op == M::Add && w3->op == M::Srai) {
                const u8 x = w0->rs1, t0r = w0->rd;
                const bool chain = w1->rs1 == t0r &&
                                   ((w2->rs1 == x && w2->rs2 == w1->rd) ||
                                    (w2->rs1 == w1->rd && w2->rs2 == x)) &&
                                   w3->rs1 == w2->rd && w1->imm + w3->imm == 32 &&
                                   w3->imm >= 1 && w3->imm <= 30;
                if (chain) {
                    const i64 window =
                        static_cast<i64>(detail::cost_sum(model, {OpClass::Shift, OpClass::Shift,
                                                                  OpClass::Arith, OpClass::Shift}));
                    const i64 alt = static_cast<i64>(
                        detail::cost_sum(model, {OpClass::Arith, OpClass::MulDiv}));
                    Finding f;
                    f.rule = "R1";
                    f.insight = "I3";
                    f.address = code[i].first;
                    f.end_address = code[i].first + 16;
                    f.delta_cycles = window - alt;
                    f.description = "strength-reduced signed division by " +
                                    std::to_string(1 << w3->imm) +
                                    " (shift/add form vs li+div)";
                    findings.push_back(std::move(f));
                }
            }
        }
        // R2: srai t,x,31 ; xor y,x,t ; sub z,y,t
        {
            const Instruction* w0 = at(i, 0);
            const Instruction* w1 = at(i, 1);
            const Instruction* w2 = at(i, 2);
            if (w0 && w1 && w2 && w0->op == M::Srai && w0->imm == 31 &&
                w1->op == M::Xor && w2->op == M::Sub) {
                const u8 x = w0->rs1, t = w0->rd;
                const bool chain = ((w1->rs1 == x && w1->rs2 == t) ||
                                    (w1->rs1 == t && w1->rs2 == x)) &&
                                   w2->rs1 == w1->rd && w2->rs2 == t;
                if (chain) {
                    const i64 window = static_cast<i64>(detail::cost_sum(
                        model, {OpClass::Shift, OpClass::Bitwise, OpClass::Arith}));
                    const i64 alt = static_cast<i64>(
                        detail::cost_sum(model, {OpClass::Branch, OpClass::Arith}));
                    Finding f;
                    f.rule = "R2";
                    f.insight = "I4";
                    f.address = code[i].first;
                    f.end_address = code[i].first + 12;
                    f.delta_cycles = window - alt;
                    f.description = "branchless absolute-value/select idiom "
                                    "(srai/xor/sub vs branch+neg)";
                    findings.push_back(std::move(f));
                }
            }
        }
    }

    // R3: static paging footprint of writable segments
    {
        u64 pages = 0;
        u32 lo = 0, hi = 0;
        bool any = false;
        for (const Segment& seg : image.segments) {
            if (!seg.writable || seg.mem_size == 0)
                continue;
            const u32 first = seg.vaddr / model.page_size;
            const u32 last = (seg.vaddr + seg.mem_size - 1) / model.page_size;
            pages += last - first + 1;
            if (!any || seg.vaddr < lo)
                lo = seg.vaddr;
            hi = std::max(hi, seg.vaddr + seg.mem_size);
            any = true;
        }
        if (any && pages > opts.footprint_page_threshold) {
            Finding f;
            f.rule = "R3";
            f.insight = "I1";
            f.address = lo;
            f.end_address = hi;
            f.delta_cycles = static_cast<i64>(pages * (model.page_in_cost + model.page_out_cost));
            f.description = "writable segments span " + std::to_string(pages) +
                            " pages (threshold " +
                            std::to_string(opts.footprint_page_threshold) +
                            "); worst-case paging cost if fully touched";
            findings.push_back(std::move(f));
        }
    }

    // R4: backward-branch loops whose body is mostly bookkeeping
    for (size_t i = 0; i < code.size(); i++) {
        const Instruction& ins = code[i].second;
        if (ins.cls() != OpClass::Branch || ins.imm >= 0)
            continue;
        const u32 branch_addr = code[i].first;
        const u32 target = branch_addr + static_cast<u32>(ins.imm);
        // body = [target, branch]; cap the window so junk data can't blow it up
        const size_t max_body = 64;
        std::vector<const Instruction*> body;
        for (size_t j = 0; j <= i && body.size() <= max_body; j++) {
            const size_t idx = i - j;
            if (code[idx].first < target)
                break;
            body.push_back(&code[idx].second);
        }
        if (body.size() < 2 || body.size() > max_body)
            continue;
        u64 bookkeeping = 0;
        u64 bookkeeping_cycles = 0;
        for (const Instruction* b : body) {
            const bool is_branch = b->cls() == OpClass::Branch;
            const bool is_counter = b->op == M::Addi && b->rd == b->rs1 &&
                                    (b->rd == ins.rs1 || b->rd == ins.rs2);
            const bool is_compare = (b->op == M::Slt || b->op == M::Sltu ||
                                     b->op == M::Slti || b->op == M::Sltiu) &&
                                    (b->rd == ins.rs1 || b->rd == ins.rs2);
            if (is_branch || is_counter || is_compare) {
                bookkeeping++;
                bookkeeping_cycles += model.cost_of(b->cls());
            }
        }
        const double ratio = static_cast<double>(bookkeeping) /
                             static_cast<double>(body.size());
        if (ratio > opts.bookkeeping_ratio_threshold) {
            Finding f;
            f.rule = "R4";
            f.insight = "I3";
            f.address = target;
            f.end_address = branch_addr + 4;
            f.delta_cycles = static_cast<i64>(bookkeeping_cycles);
            f.description = "loop body is " + std::to_string(bookkeeping) + "/" +
                            std::to_string(body.size()) +
                            " bookkeeping instructions; unrolling candidate "
                            "(delta is per-iteration bookkeeping cost)";
            findings.push_back(std::move(f));
        }
    }

    std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        return std::tie(a.address, a.rule) < std::tie(b.address, b.rule);
    });
    return findings;
}

inline nlohmann::json finding_to_json(const Finding& f) {
    nlohmann::json j;
    j["rule"] = f.rule;
    j["insight"] = f.insight;
    j["address"] = f.address;
    j["end_address"] = f.end_address;
    j["delta_cycles"] = f.delta_cycles;
    j["description"] = f.description;
    return j;
}

inline std::string findings_to_jsonl(const std::vector<Finding>& findings) {
    std::string out;
    for (const auto& f : findings)
        out += finding_to_json(f).dump() + "\n";
    return out;
}

inline std::string render_findings(const std::vector<Finding>& findings) {
    std::string out;
    for (const auto& f : findings) {
        out += f.rule + " [" + f.insight + "] " + hex_u32(f.address) + ".." +
               hex_u32(f.end_address) + " delta=" +
               std::to_string(f.delta_cycles) + " cycles: " + f.description + "\n";
    }
    if (findings.empty())
        out = "no findings\n";
    return out;
}

} // namespace zkopt
