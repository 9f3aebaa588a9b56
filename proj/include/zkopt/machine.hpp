#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "zkopt/isa.hpp"

namespace zkopt {

// Memory-touch events are logged at a fixed granule so that any cost model
// whose page size is a multiple of the granule can replay paging exactly.
constexpr u32 kTouchGranule = 256;

// Sparse backing store chunk size. Uninitialized memory reads as zero.
constexpr u32 kMemChunk = 1024;

struct TouchEvent {
    u32 granule;    // address / kTouchGranule
    bool write;
    bool operator==(const TouchEvent&) const = default;
};

/// Ordered first-touch log: at most one read and one write event per granule,
/// in the order execution first produced them.
class TouchLog {
public:
    void on_access(u32 addr, u32 width, bool write) {
        u32 first = addr / kTouchGranule;
        u32 last = (addr + (width ? width - 1 : 0)) / kTouchGranule;
        for (u32 g = first; g <= last; g++)
            record(g, write);
    }

    const std::vector<TouchEvent>& events() const { return events_; }
    void clear() { events_.clear(); seen_.clear(); }

private:
    void record(u32 g, bool write) {
        auto it = seen_.find(g);
        u8 have = it == seen_.end() ? 0 : it->second;
        u8 bit = write ? 2 : 1;
        if (have & bit)
            return;
        // A read after a write to the same granule adds no information.
        if (!write && (have & 2))
            return;
        seen_[g] = have | bit | (write ? 1 : 0);
        events_.push_back({g, write});
    }

    std::unordered_map<u32, u8> seen_;
    std::vector<TouchEvent> events_;
};

class SparseMemory {
public:
    u8 load8(u32 addr) const {
        auto it = chunks_.find(addr / kMemChunk);
        if (it == chunks_.end())
            return 0;
        return it->second[addr % kMemChunk];
    }

    void store8(u32 addr, u8 v) { chunk(addr)[addr % kMemChunk] = v; }

    u32 load(u32 addr, u32 width) const {
        u32 v = 0;
        for (u32 i = 0; i < width; i++)
            v |= static_cast<u32>(load8(addr + i)) << (8 * i);
        return v;
    }

    void store(u32 addr, u32 width, u32 v) {
        for (u32 i = 0; i < width; i++)
            store8(addr + i, static_cast<u8>(v >> (8 * i)));
    }

    void write_block(u32 addr, const u8* data, size_t n) {
        for (size_t i = 0; i < n; i++)
            store8(addr + static_cast<u32>(i), data[i]);
    }

    std::vector<u8> read_block(u32 addr, size_t n) const {
        std::vector<u8> out(n);
        for (size_t i = 0; i < n; i++)
            out[i] = load8(addr + static_cast<u32>(i));
        return out;
    }

private:
    std::array<u8, kMemChunk>& chunk(u32 addr) {
        auto it = chunks_.find(addr / kMemChunk);
        if (it == chunks_.end())
            it = chunks_.emplace(addr / kMemChunk, std::array<u8, kMemChunk>{}).first;
        return it->second;
    }

    std::unordered_map<u32, std::array<u8, kMemChunk>> chunks_;
};

enum class TrapKind : u8 {
    IllegalInstruction,
    MisalignedAccess,
    OutOfImageFetch,
    UnknownEcall,
    MemFault,
    Breakpoint,
};

constexpr const char* trap_name(TrapKind k) {
    switch (k) {
    case TrapKind::IllegalInstruction: return "illegal-instruction";
    case TrapKind::MisalignedAccess:   return "misaligned-access";
    case TrapKind::OutOfImageFetch:    return "out-of-image-fetch";
    case TrapKind::UnknownEcall:       return "unknown-ecall";
    case TrapKind::MemFault:           return "memory-fault";
    case TrapKind::Breakpoint:         return "breakpoint";
    }
    return "?";
}

struct StepEvent {
    enum class Kind : u8 {
        MemoryRead,
        MemoryWrite,
        EnvCall,
        Halt,
        BranchTaken,
        BranchNotTaken,
    };
    Kind kind;
    u32 address = 0;   // memory kinds
    u32 width = 0;     // memory kinds
    u32 call_id = 0;   // env-call
};

// Guest ABI: ecall with a7=93 exits (code in a0); a7=64 writes
// memory[a1..a1+a2) to the output buffer and returns a2 in a0.
constexpr u32 kEcallExit = 93;
constexpr u32 kEcallWrite = 64;

// A single write call larger than this faults: a buffer of that size cannot
// be real guest output, and copying it would stall the harness.
constexpr u32 kMaxWriteLen = 1u << 24;

struct MachineState {
    std::array<u32, 32> x{};
    u32 pc = 0;
    SparseMemory mem;
    u64 retired = 0;
    bool halted = false;
    u32 exit_code = 0;
    std::vector<u8> output;
    TouchLog touches;

    // [start, end) ranges of executable code; fetches outside them trap.
    std::vector<std::pair<u32, u32>> exec_ranges;

    // Env-call ids beyond the base ABI that are accepted; such calls set
    // a0 = 0 and have a model-defined fixed cost.
    std::unordered_set<u32> accelerator_ids;

    u32 reg(u8 i) const { return x[i & 31]; }
    void set_reg(u8 i, u32 v) {
        if ((i & 31) != 0)
            x[i & 31] = v;
    }

    bool pc_fetchable(u32 addr) const {
        for (auto& [lo, hi] : exec_ranges)
            if (addr >= lo && addr + 4 <= hi)
                return true;
        return false;
    }
};

struct StepResult {
    std::vector<StepEvent> events;
    std::optional<TrapKind> trap;
    u32 trap_pc = 0;
    std::optional<Instruction> executed;   // set iff the step retired
};

/// Env-call dispatch for the instruction at pc (must be ECALL).
/// Returns the event describing the call, or an UnknownEcall trap.
inline StepResult handle_ecall(MachineState& st) {
    StepResult r;
    const u32 id = st.reg(17);   // a7
    if (id == kEcallExit) {
        st.halted = true;
        st.exit_code = st.reg(10);
        r.events.push_back({StepEvent::Kind::EnvCall, 0, 0, id});
        r.events.push_back({StepEvent::Kind::Halt});
        return r;
    }
    if (id == kEcallWrite) {
        const u32 ptr = st.reg(11);
        const u32 len = st.reg(12);
        if (len > kMaxWriteLen) {
            r.trap = TrapKind::MemFault;
            r.trap_pc = st.pc;
            return r;
        }
        for (u32 i = 0; i < len; i++)
            st.output.push_back(st.mem.load8(ptr + i));
        if (len > 0)
            st.touches.on_access(ptr, len, false);
        st.set_reg(10, len);
        r.events.push_back({StepEvent::Kind::EnvCall, ptr, len, id});
        return r;
    }
    if (st.accelerator_ids.count(id)) {
        st.set_reg(10, 0);
        r.events.push_back({StepEvent::Kind::EnvCall, 0, 0, id});
        return r;
    }
    r.trap = TrapKind::UnknownEcall;
    r.trap_pc = st.pc;
    return r;
}

/// Execute one instruction. On success the architectural state has advanced
/// and retired has incremented; on trap the state is unchanged except that
/// nothing retires.
inline StepResult step(MachineState& st) {
    using M = Mnemonic;
    StepResult r;

    if (!st.pc_fetchable(st.pc)) {
        r.trap = TrapKind::OutOfImageFetch;
        r.trap_pc = st.pc;
        return r;
    }
    const u32 word = st.mem.load(st.pc, 4);
    const auto decoded = try_decode(word);
    if (!decoded) {
        r.trap = TrapKind::IllegalInstruction;
        r.trap_pc = st.pc;
        return r;
    }
    const Instruction& ins = *decoded;
    const u32 next_pc = st.pc + 4;
    u32 new_pc = next_pc;

    auto trap = [&](TrapKind k) {
        r.trap = k;
        r.trap_pc = st.pc;
        r.events.clear();
        return r;
    };

    switch (ins.op) {
    case M::Lui:   st.set_reg(ins.rd, static_cast<u32>(ins.imm)); break;
    case M::Auipc: st.set_reg(ins.rd, st.pc + static_cast<u32>(ins.imm)); break;
    case M::Jal:
        st.set_reg(ins.rd, next_pc);
        new_pc = st.pc + static_cast<u32>(ins.imm);
        break;
    case M::Jalr: {
        u32 target = (st.reg(ins.rs1) + static_cast<u32>(ins.imm)) & ~1u;
        st.set_reg(ins.rd, next_pc);
        new_pc = target;
        break;
    }
    case M::Beq: case M::Bne: case M::Blt: case M::Bge: case M::Bltu: case M::Bgeu: {
        const u32 a = st.reg(ins.rs1), b = st.reg(ins.rs2);
        bool take = false;
        switch (ins.op) {
        case M::Beq:  take = a == b; break;
        case M::Bne:  take = a != b; break;
        case M::Blt:  take = static_cast<i32>(a) < static_cast<i32>(b); break;
        case M::Bge:  take = static_cast<i32>(a) >= static_cast<i32>(b); break;
        case M::Bltu: take = a < b; break;
        case M::Bgeu: take = a >= b; break;
        default: break;
        }
        if (take)
            new_pc = st.pc + static_cast<u32>(ins.imm);
        r.events.push_back({take ? StepEvent::Kind::BranchTaken
                                 : StepEvent::Kind::BranchNotTaken});
        break;
    }
    case M::Lb: case M::Lh: case M::Lw: case M::Lbu: case M::Lhu: {
        const u32 addr = st.reg(ins.rs1) + static_cast<u32>(ins.imm);
        const u32 width = (ins.op == M::Lw) ? 4 : (ins.op == M::Lh || ins.op == M::Lhu) ? 2 : 1;
        if (addr % width != 0)
            return trap(TrapKind::MisalignedAccess);
        u32 v = st.mem.load(addr, width);
        if (ins.op == M::Lb)
            v = static_cast<u32>(detail::sign_extend(v, 8));
        else if (ins.op == M::Lh)
            v = static_cast<u32>(detail::sign_extend(v, 16));
        st.set_reg(ins.rd, v);
        st.touches.on_access(addr, width, false);
        r.events.push_back({StepEvent::Kind::MemoryRead, addr, width});
        break;
    }
    case M::Sb: case M::Sh: case M::Sw: {
        const u32 addr = st.reg(ins.rs1) + static_cast<u32>(ins.imm);
        const u32 width = (ins.op == M::Sw) ? 4 : (ins.op == M::Sh) ? 2 : 1;
        if (addr % width != 0)
            return trap(TrapKind::MisalignedAccess);
        st.mem.store(addr, width, st.reg(ins.rs2));
        st.touches.on_access(addr, width, true);
        r.events.push_back({StepEvent::Kind::MemoryWrite, addr, width});
        break;
    }
    case M::Addi:  st.set_reg(ins.rd, st.reg(ins.rs1) + static_cast<u32>(ins.imm)); break;
    case M::Slti:  st.set_reg(ins.rd, static_cast<i32>(st.reg(ins.rs1)) < ins.imm ? 1 : 0); break;
    case M::Sltiu: st.set_reg(ins.rd, st.reg(ins.rs1) < static_cast<u32>(ins.imm) ? 1 : 0); break;
    case M::Xori:  st.set_reg(ins.rd, st.reg(ins.rs1) ^ static_cast<u32>(ins.imm)); break;
    case M::Ori:   st.set_reg(ins.rd, st.reg(ins.rs1) | static_cast<u32>(ins.imm)); break;
    case M::Andi:  st.set_reg(ins.rd, st.reg(ins.rs1) & static_cast<u32>(ins.imm)); break;
    case M::Slli:  st.set_reg(ins.rd, st.reg(ins.rs1) << (ins.imm & 31)); break;
    case M::Srli:  st.set_reg(ins.rd, st.reg(ins.rs1) >> (ins.imm & 31)); break;
    case M::Srai:  st.set_reg(ins.rd, static_cast<u32>(static_cast<i32>(st.reg(ins.rs1)) >> (ins.imm & 31))); break;
    case M::Add:   st.set_reg(ins.rd, st.reg(ins.rs1) + st.reg(ins.rs2)); break;
    case M::Sub:   st.set_reg(ins.rd, st.reg(ins.rs1) - st.reg(ins.rs2)); break;
    case M::Sll:   st.set_reg(ins.rd, st.reg(ins.rs1) << (st.reg(ins.rs2) & 31)); break;
    case M::Slt:   st.set_reg(ins.rd, static_cast<i32>(st.reg(ins.rs1)) < static_cast<i32>(st.reg(ins.rs2)) ? 1 : 0); break;
    case M::Sltu:  st.set_reg(ins.rd, st.reg(ins.rs1) < st.reg(ins.rs2) ? 1 : 0); break;
    case M::Xor:   st.set_reg(ins.rd, st.reg(ins.rs1) ^ st.reg(ins.rs2)); break;
    case M::Srl:   st.set_reg(ins.rd, st.reg(ins.rs1) >> (st.reg(ins.rs2) & 31)); break;
    case M::Sra:   st.set_reg(ins.rd, static_cast<u32>(static_cast<i32>(st.reg(ins.rs1)) >> (st.reg(ins.rs2) & 31))); break;
    case M::Or:    st.set_reg(ins.rd, st.reg(ins.rs1) | st.reg(ins.rs2)); break;
    case M::And:   st.set_reg(ins.rd, st.reg(ins.rs1) & st.reg(ins.rs2)); break;
    case M::Mul:   st.set_reg(ins.rd, st.reg(ins.rs1) * st.reg(ins.rs2)); break;
    case M::Mulh: {
        i64 p = static_cast<i64>(static_cast<i32>(st.reg(ins.rs1))) *
                static_cast<i64>(static_cast<i32>(st.reg(ins.rs2)));
        st.set_reg(ins.rd, static_cast<u32>(static_cast<u64>(p) >> 32));
        break;
    }
    case M::Mulhsu: {
        i64 p = static_cast<i64>(static_cast<i32>(st.reg(ins.rs1))) *
                static_cast<i64>(static_cast<u64>(st.reg(ins.rs2)));
        st.set_reg(ins.rd, static_cast<u32>(static_cast<u64>(p) >> 32));
        break;
    }
    case M::Mulhu: {
        u64 p = static_cast<u64>(st.reg(ins.rs1)) * static_cast<u64>(st.reg(ins.rs2));
        st.set_reg(ins.rd, static_cast<u32>(p >> 32));
        break;
    }
    case M::Div: {
        const i32 a = static_cast<i32>(st.reg(ins.rs1));
        const i32 b = static_cast<i32>(st.reg(ins.rs2));
        u32 q;
        if (b == 0)
            q = 0xffffffffu;
        else if (a == INT32_MIN && b == -1)
            q = static_cast<u32>(INT32_MIN);
        else
            q = static_cast<u32>(a / b);
        st.set_reg(ins.rd, q);
        break;
    }
    case M::Divu:
        st.set_reg(ins.rd, st.reg(ins.rs2) == 0 ? 0xffffffffu
                                                : st.reg(ins.rs1) / st.reg(ins.rs2));
        break;
    case M::Rem: {
        const i32 a = static_cast<i32>(st.reg(ins.rs1));
        const i32 b = static_cast<i32>(st.reg(ins.rs2));
        u32 q;
        if (b == 0)
            q = static_cast<u32>(a);
        else if (a == INT32_MIN && b == -1)
            q = 0;
        else
            q = static_cast<u32>(a % b);
        st.set_reg(ins.rd, q);
        break;
    }
    case M::Remu:
        st.set_reg(ins.rd, st.reg(ins.rs2) == 0 ? st.reg(ins.rs1)
                                                : st.reg(ins.rs1) % st.reg(ins.rs2));
        break;
    case M::Fence:
        break;
    case M::Ebreak:
        return trap(TrapKind::Breakpoint);
    case M::Ecall: {
        StepResult er = handle_ecall(st);
        if (er.trap)
            return trap(*er.trap);
        r.events = std::move(er.events);
        break;
    }
    }

    if (new_pc % 4 != 0)
        return trap(TrapKind::MisalignedAccess);
    st.pc = new_pc;
    st.retired += 1;
    r.executed = ins;
    return r;
}

enum class HaltKind : u8 { Exited, Trapped, LimitExceeded };

struct HaltReason {
    HaltKind kind = HaltKind::Exited;
    TrapKind trap = TrapKind::IllegalInstruction;   // valid when Trapped
    u32 trap_pc = 0;
    u32 exit_code = 0;                              // valid when Exited

    bool clean_exit() const { return kind == HaltKind::Exited; }
    std::string describe() const {
        switch (kind) {
        case HaltKind::Exited:        return "exit(" + std::to_string(exit_code) + ")";
        case HaltKind::Trapped:       return std::string(trap_name(trap)) + " at " + hex_u32(trap_pc);
        case HaltKind::LimitExceeded: return "instruction-limit-exceeded";
        }
        return "?";
    }
};

/// Model-independent record of one complete execution: how it ended, what
/// retired, and the ordered first-touch memory summary cost models replay.
struct RunTrace {
    HaltReason halt;
    u64 retired = 0;
    std::array<u64, kNumOpClasses> class_retired{};
    std::map<u32, u64> ecall_counts;
    u64 loads = 0;
    u64 stores = 0;
    u64 branches_taken = 0;
    u64 branches_not_taken = 0;
    u64 env_calls = 0;
    std::vector<TouchEvent> touch_events;
    std::vector<u8> output;

    bool ok() const { return halt.clean_exit(); }
};

namespace detail {
inline void finish_trace(RunTrace& trace, const MachineState& st) {
    trace.retired = st.retired;
    trace.touch_events = st.touches.events();
    trace.output = st.output;
}
} // namespace detail

/// Step until halt, trap, or `limit` retired instructions.
/// Instruction fetches record code-page touches like data accesses do.
inline RunTrace run(MachineState& st, u64 limit) {
    if (limit == 0)
        throw Error("run: instruction limit must be positive");

    RunTrace trace;
    while (!st.halted && st.retired < limit) {
        st.touches.on_access(st.pc, 4, false);
        StepResult sr = step(st);
        if (sr.trap) {
            trace.halt = {HaltKind::Trapped, *sr.trap, sr.trap_pc, 0};
            detail::finish_trace(trace, st);
            return trace;
        }
        trace.class_retired[static_cast<size_t>(sr.executed->cls())] += 1;
        for (const StepEvent& ev : sr.events) {
            switch (ev.kind) {
            case StepEvent::Kind::MemoryRead: trace.loads += 1; break;
            case StepEvent::Kind::MemoryWrite: trace.stores += 1; break;
            case StepEvent::Kind::BranchTaken: trace.branches_taken += 1; break;
            case StepEvent::Kind::BranchNotTaken: trace.branches_not_taken += 1; break;
            case StepEvent::Kind::EnvCall:
                trace.env_calls += 1;
                trace.ecall_counts[ev.call_id] += 1;
                break;
            case StepEvent::Kind::Halt: break;
            }
        }
    }
    if (st.halted)
        trace.halt = {HaltKind::Exited, TrapKind::IllegalInstruction, 0, st.exit_code};
    else
        trace.halt = {HaltKind::LimitExceeded, TrapKind::IllegalInstruction, 0, 0};
    detail::finish_trace(trace, st);
    return trace;
}

} // namespace zkopt
