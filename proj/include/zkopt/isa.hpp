#pragma once

#include <array>
#include <optional>
#include <string>

#include "zkopt/common.hpp"

namespace zkopt {

// RV32IM, little-endian, uncompressed encodings only.

enum class Mnemonic : u8 {
    Lui, Auipc,
    Jal, Jalr,
    Beq, Bne, Blt, Bge, Bltu, Bgeu,
    Lb, Lh, Lw, Lbu, Lhu,
    Sb, Sh, Sw,
    Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
    Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
    Mul, Mulh, Mulhsu, Mulhu, Div, Divu, Rem, Remu,
    Fence, Ecall, Ebreak,
};

/// Cost-model instruction classes. Every mnemonic maps to exactly one.
enum class OpClass : u8 {
    Arith,
    Shift,
    Bitwise,
    MulDiv,
    Load,
    Store,
    Branch,
    Jump,
    EnvCall,
};

constexpr size_t kNumOpClasses = 9;

constexpr const char* op_class_name(OpClass c) {
    switch (c) {
    case OpClass::Arith:   return "arith";
    case OpClass::Shift:   return "shift";
    case OpClass::Bitwise: return "bitwise";
    case OpClass::MulDiv:  return "muldiv";
    case OpClass::Load:    return "load";
    case OpClass::Store:   return "store";
    case OpClass::Branch:  return "branch";
    case OpClass::Jump:    return "jump";
    case OpClass::EnvCall: return "envcall";
    }
    return "?";
}

inline std::optional<OpClass> op_class_from_name(const std::string& s) {
    for (size_t i = 0; i < kNumOpClasses; i++) {
        auto c = static_cast<OpClass>(i);
        if (s == op_class_name(c))
            return c;
    }
    return std::nullopt;
}

struct Instruction {
    Mnemonic op;
    u8 rd = 0;
    u8 rs1 = 0;
    u8 rs2 = 0;
    i32 imm = 0;   // sign-extended per encoding format; shamt for shift-immediates
    u32 raw = 0;

    OpClass cls() const;
    bool operator==(const Instruction& other) const {
        return op == other.op && rd == other.rd && rs1 == other.rs1 &&
               rs2 == other.rs2 && imm == other.imm;
    }
};

inline OpClass Instruction::cls() const {
    switch (op) {
    case Mnemonic::Lui: case Mnemonic::Auipc:
    case Mnemonic::Addi: case Mnemonic::Slti: case Mnemonic::Sltiu:
    case Mnemonic::Add: case Mnemonic::Sub: case Mnemonic::Slt: case Mnemonic::Sltu:
    case Mnemonic::Fence:
        return OpClass::Arith;
    case Mnemonic::Slli: case Mnemonic::Srli: case Mnemonic::Srai:
    case Mnemonic::Sll: case Mnemonic::Srl: case Mnemonic::Sra:
        return OpClass::Shift;
    case Mnemonic::Xori: case Mnemonic::Ori: case Mnemonic::Andi:
    case Mnemonic::Xor: case Mnemonic::Or: case Mnemonic::And:
        return OpClass::Bitwise;
    case Mnemonic::Mul: case Mnemonic::Mulh: case Mnemonic::Mulhsu: case Mnemonic::Mulhu:
    case Mnemonic::Div: case Mnemonic::Divu: case Mnemonic::Rem: case Mnemonic::Remu:
        return OpClass::MulDiv;
    case Mnemonic::Lb: case Mnemonic::Lh: case Mnemonic::Lw:
    case Mnemonic::Lbu: case Mnemonic::Lhu:
        return OpClass::Load;
    case Mnemonic::Sb: case Mnemonic::Sh: case Mnemonic::Sw:
        return OpClass::Store;
    case Mnemonic::Beq: case Mnemonic::Bne: case Mnemonic::Blt:
    case Mnemonic::Bge: case Mnemonic::Bltu: case Mnemonic::Bgeu:
        return OpClass::Branch;
    case Mnemonic::Jal: case Mnemonic::Jalr:
        return OpClass::Jump;
    case Mnemonic::Ecall: case Mnemonic::Ebreak:
        return OpClass::EnvCall;
    }
    return OpClass::Arith;
}

constexpr const char* mnemonic_name(Mnemonic m) {
    switch (m) {
    case Mnemonic::Lui: return "lui";     case Mnemonic::Auipc: return "auipc";
    case Mnemonic::Jal: return "jal";     case Mnemonic::Jalr: return "jalr";
    case Mnemonic::Beq: return "beq";     case Mnemonic::Bne: return "bne";
    case Mnemonic::Blt: return "blt";     case Mnemonic::Bge: return "bge";
    case Mnemonic::Bltu: return "bltu";   case Mnemonic::Bgeu: return "bgeu";
    case Mnemonic::Lb: return "lb";       case Mnemonic::Lh: return "lh";
    case Mnemonic::Lw: return "lw";       case Mnemonic::Lbu: return "lbu";
    case Mnemonic::Lhu: return "lhu";     case Mnemonic::Sb: return "sb";
    case Mnemonic::Sh: return "sh";       case Mnemonic::Sw: return "sw";
    case Mnemonic::Addi: return "addi";   case Mnemonic::Slti: return "slti";
    case Mnemonic::Sltiu: return "sltiu"; case Mnemonic::Xori: return "xori";
    case Mnemonic::Ori: return "ori";     case Mnemonic::Andi: return "andi";
    case Mnemonic::Slli: return "slli";   case Mnemonic::Srli: return "srli";
    case Mnemonic::Srai: return "srai";   case Mnemonic::Add: return "add";
    case Mnemonic::Sub: return "sub";     case Mnemonic::Sll: return "sll";
    case Mnemonic::Slt: return "slt";     case Mnemonic::Sltu: return "sltu";
    case Mnemonic::Xor: return "xor";     case Mnemonic::Srl: return "srl";
    case Mnemonic::Sra: return "sra";     case Mnemonic::Or: return "or";
    case Mnemonic::And: return "and";     case Mnemonic::Mul: return "mul";
    case Mnemonic::Mulh: return "mulh";   case Mnemonic::Mulhsu: return "mulhsu";
    case Mnemonic::Mulhu: return "mulhu"; case Mnemonic::Div: return "div";
    case Mnemonic::Divu: return "divu";   case Mnemonic::Rem: return "rem";
    case Mnemonic::Remu: return "remu";   case Mnemonic::Fence: return "fence";
    case Mnemonic::Ecall: return "ecall"; case Mnemonic::Ebreak: return "ebreak";
    }
    return "?";
}

namespace detail {

constexpr i32 sign_extend(u32 v, int bits) {
    u32 m = 1u << (bits - 1);
    return static_cast<i32>((v ^ m) - m);
}

constexpr i32 imm_i(u32 w) { return sign_extend(w >> 20, 12); }
constexpr i32 imm_s(u32 w) {
    return sign_extend(((w >> 7) & 0x1f) | ((w >> 20) & 0xfe0), 12);
}
constexpr i32 imm_b(u32 w) {
    u32 v = ((w >> 7) & 0x1e) | ((w >> 20) & 0x7e0) | ((w << 4) & 0x800) |
            ((w >> 19) & 0x1000);
    return sign_extend(v, 13);
}
constexpr i32 imm_u(u32 w) { return static_cast<i32>(w & 0xfffff000u); }
constexpr i32 imm_j(u32 w) {
    u32 v = ((w >> 20) & 0x7fe) | ((w >> 9) & 0x800) | (w & 0xff000) |
            ((w >> 11) & 0x100000);
    return sign_extend(v, 21);
}

} // namespace detail

/// Decode one 32-bit word. Returns nullopt for anything outside RV32IM
/// (including all floating-point and compressed encodings). Operand fields
/// the format does not define are left zero.
inline std::optional<Instruction> try_decode(u32 w) {
    using M = Mnemonic;
    Instruction ins;
    ins.raw = w;
    const u8 rd = (w >> 7) & 0x1f;
    const u8 rs1 = (w >> 15) & 0x1f;
    const u8 rs2 = (w >> 20) & 0x1f;
    const u32 opc = w & 0x7f;
    const u32 f3 = (w >> 12) & 7;
    const u32 f7 = w >> 25;

    auto r_form = [&](M m) { ins.op = m; ins.rd = rd; ins.rs1 = rs1; ins.rs2 = rs2; return ins; };
    auto i_form = [&](M m) { ins.op = m; ins.rd = rd; ins.rs1 = rs1; ins.imm = detail::imm_i(w); return ins; };

    switch (opc) {
    case 0x37: ins.op = M::Lui;   ins.rd = rd; ins.imm = detail::imm_u(w); return ins;
    case 0x17: ins.op = M::Auipc; ins.rd = rd; ins.imm = detail::imm_u(w); return ins;
    case 0x6f: ins.op = M::Jal;   ins.rd = rd; ins.imm = detail::imm_j(w); return ins;
    case 0x67:
        if (f3 != 0) return std::nullopt;
        return i_form(M::Jalr);
    case 0x63: {
        static constexpr M ops[8] = {M::Beq, M::Bne, M::Beq, M::Beq,
                                     M::Blt, M::Bge, M::Bltu, M::Bgeu};
        if (f3 == 2 || f3 == 3) return std::nullopt;
        ins.op = ops[f3]; ins.rs1 = rs1; ins.rs2 = rs2; ins.imm = detail::imm_b(w);
        return ins;
    }
    case 0x03: {
        static constexpr M ops[8] = {M::Lb, M::Lh, M::Lw, M::Lb,
                                     M::Lbu, M::Lhu, M::Lb, M::Lb};
        if (f3 == 3 || f3 > 5) return std::nullopt;
        return i_form(ops[f3]);
    }
    case 0x23: {
        static constexpr M ops[4] = {M::Sb, M::Sh, M::Sw, M::Sb};
        if (f3 > 2) return std::nullopt;
        ins.op = ops[f3]; ins.rs1 = rs1; ins.rs2 = rs2; ins.imm = detail::imm_s(w);
        return ins;
    }
    case 0x13:
        switch (f3) {
        case 0: return i_form(M::Addi);
        case 2: return i_form(M::Slti);
        case 3: return i_form(M::Sltiu);
        case 4: return i_form(M::Xori);
        case 6: return i_form(M::Ori);
        case 7: return i_form(M::Andi);
        case 1:
            if (f7 != 0) return std::nullopt;
            ins.op = M::Slli; ins.rd = rd; ins.rs1 = rs1; ins.imm = rs2; return ins;
        case 5:
            if (f7 == 0x00) { ins.op = M::Srli; ins.rd = rd; ins.rs1 = rs1; ins.imm = rs2; return ins; }
            if (f7 == 0x20) { ins.op = M::Srai; ins.rd = rd; ins.rs1 = rs1; ins.imm = rs2; return ins; }
            return std::nullopt;
        }
        return std::nullopt;
    case 0x33:
        if (f7 == 0x01) {
            static constexpr M ops[8] = {M::Mul, M::Mulh, M::Mulhsu, M::Mulhu,
                                         M::Div, M::Divu, M::Rem, M::Remu};
            return r_form(ops[f3]);
        }
        if (f7 == 0x00) {
            static constexpr M ops[8] = {M::Add, M::Sll, M::Slt, M::Sltu,
                                         M::Xor, M::Srl, M::Or, M::And};
            return r_form(ops[f3]);
        }
        if (f7 == 0x20) {
            if (f3 == 0) return r_form(M::Sub);
            if (f3 == 5) return r_form(M::Sra);
        }
        return std::nullopt;
    case 0x0f:
        if (f3 != 0) return std::nullopt;   // FENCE.I not supported
        ins.op = M::Fence;
        return ins;
    case 0x73:
        if (w == 0x00000073) { ins.op = M::Ecall; return ins; }
        if (w == 0x00100073) { ins.op = M::Ebreak; return ins; }
        return std::nullopt;                // CSR space unsupported
    default:
        return std::nullopt;
    }
}

class IllegalInstruction : public Error {
public:
    explicit IllegalInstruction(u32 word)
        : Error("illegal instruction " + hex_u32(word)), word_(word) {}
    u32 word() const { return word_; }

private:
    u32 word_;
};

inline Instruction decode(u32 word) {
    auto ins = try_decode(word);
    if (!ins)
        throw IllegalInstruction(word);
    return *ins;
}

inline const char* reg_name(u8 r) {
    static constexpr const char* names[32] = {
        "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
        "s0",   "s1", "a0", "a1", "a2", "a3", "a4", "a5",
        "a6",   "a7", "s2", "s3", "s4", "s5", "s6", "s7",
        "s8",   "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
    return names[r & 31];
}

/// One-line disassembly, ABI register names.
inline std::string disassemble(const Instruction& ins) {
    using M = Mnemonic;
    std::string s = mnemonic_name(ins.op);
    auto r = [](u8 n) { return std::string(reg_name(n)); };
    switch (ins.op) {
    case M::Lui: case M::Auipc:
        return s + " " + r(ins.rd) + ", " + hex_u32(static_cast<u32>(ins.imm) >> 12);
    case M::Jal:
        return s + " " + r(ins.rd) + ", " + std::to_string(ins.imm);
    case M::Jalr:
        return s + " " + r(ins.rd) + ", " + std::to_string(ins.imm) + "(" + r(ins.rs1) + ")";
    case M::Beq: case M::Bne: case M::Blt: case M::Bge: case M::Bltu: case M::Bgeu:
        return s + " " + r(ins.rs1) + ", " + r(ins.rs2) + ", " + std::to_string(ins.imm);
    case M::Lb: case M::Lh: case M::Lw: case M::Lbu: case M::Lhu:
        return s + " " + r(ins.rd) + ", " + std::to_string(ins.imm) + "(" + r(ins.rs1) + ")";
    case M::Sb: case M::Sh: case M::Sw:
        return s + " " + r(ins.rs2) + ", " + std::to_string(ins.imm) + "(" + r(ins.rs1) + ")";
    case M::Addi: case M::Slti: case M::Sltiu: case M::Xori: case M::Ori:
    case M::Andi: case M::Slli: case M::Srli: case M::Srai:
        return s + " " + r(ins.rd) + ", " + r(ins.rs1) + ", " + std::to_string(ins.imm);
    case M::Fence: case M::Ecall: case M::Ebreak:
        return s;
    default:
        return s + " " + r(ins.rd) + ", " + r(ins.rs1) + ", " + r(ins.rs2);
    }
}

} // namespace zkopt
