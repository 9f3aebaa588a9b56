#include <doctest.h>

#include <random>

#include <zkopt/isa.hpp>

#include "../support/assembler.hpp"

using namespace zkopt;
namespace A = zkasm;

// Encodings in this file were cross-checked against an assembler listing
// (clang -target riscv32) before being frozen.

TEST_CASE("decode canonical nop") {
    auto ins = decode(0x00000013);
    CHECK(ins.op == Mnemonic::Addi);
    CHECK(ins.rd == 0);
    CHECK(ins.rs1 == 0);
    CHECK(ins.imm == 0);
}

TEST_CASE("decode addi a1, zero, 5") {
    auto ins = decode(0x00500593);
    CHECK(ins.op == Mnemonic::Addi);
    CHECK(ins.rd == 11);
    CHECK(ins.rs1 == 0);
    CHECK(ins.imm == 5);
}

TEST_CASE("all-ones word is illegal") {
    CHECK(!try_decode(0xFFFFFFFFu));
    CHECK_THROWS_AS(decode(0xFFFFFFFFu), IllegalInstruction);
}

TEST_CASE("floating point opcodes are illegal") {
    // flw ft0, 0(a0) ; fadd.s ft0, ft0, ft1
    CHECK(!try_decode(0x00052007));
    CHECK(!try_decode(0x00100053));
    // fld / fsd opcode space
    CHECK(!try_decode(0x00053007));
    CHECK(!try_decode(0x00053027));
}

TEST_CASE("reference encodings decode to the expected instructions") {
    struct Case {
        u32 word;
        Instruction want;
    };
    const Case cases[] = {
        {0x41f55593, {Mnemonic::Srai, 11, 10, 31, 31, 0}},   // srai a1, a0, 31
        {0x01d5d593, {Mnemonic::Srli, 11, 11, 29, 29, 0}},   // srli a1, a1, 29
        {0x00b50533, {Mnemonic::Add, 10, 10, 11, 0, 0}},     // add a0, a0, a1
        {0x40355513, {Mnemonic::Srai, 10, 10, 3, 3, 0}},     // srai a0, a0, 3
        {0x02554533, {Mnemonic::Div, 10, 10, 5, 0, 0}},      // div a0, a0, t0
        {0x00800293, {Mnemonic::Addi, 5, 0, 0, 8, 0}},       // li t0, 8
        {0x00008067, {Mnemonic::Jalr, 0, 1, 0, 0, 0}},       // ret
        {0x00000073, {Mnemonic::Ecall, 0, 0, 0, 0, 0}},
        {0x00412503, {Mnemonic::Lw, 10, 2, 4, 4, 0}},        // lw a0, 4(sp)
        {0x00b12423, {Mnemonic::Sw, 0, 2, 11, 8, 0}},        // sw a1, 8(sp)
        {0x12345537, {Mnemonic::Lui, 10, 0, 0, 0x12345000, 0}},
        {0x00001517, {Mnemonic::Auipc, 10, 0, 0, 0x1000, 0}},
        {0x02e68633, {Mnemonic::Mul, 12, 13, 14, 0, 0}},     // mul a2, a3, a4
        {0x00b54533, {Mnemonic::Xor, 10, 10, 11, 0, 0}},     // xor a0, a0, a1
        {0x40b50533, {Mnemonic::Sub, 10, 10, 11, 0, 0}},     // sub a0, a0, a1
        {0x00054063, {Mnemonic::Blt, 0, 10, 0, 0, 0}},       // bltz a0, .
        {0x40a00533, {Mnemonic::Sub, 10, 0, 10, 0, 0}},      // neg a0, a0
    };
    for (const auto& c : cases) {
        CAPTURE(c.word);
        auto got = try_decode(c.word);
        REQUIRE(got.has_value());
        CHECK(got->op == c.want.op);
        CHECK(got->rd == c.want.rd);
        CHECK(got->rs1 == c.want.rs1);
        CHECK(got->imm == c.want.imm);
    }
}

TEST_CASE("branch and jump immediates sign-extend") {
    auto b = decode(A::beq(A::a0, A::a1, -8));
    CHECK(b.op == Mnemonic::Beq);
    CHECK(b.imm == -8);
    auto j = decode(A::jal(A::ra, -2048));
    CHECK(j.op == Mnemonic::Jal);
    CHECK(j.imm == -2048);
    auto jpos = decode(A::jal(A::zero, 0x400));
    CHECK(jpos.imm == 0x400);
    auto s = decode(A::sw(A::a0, -4, A::sp));
    CHECK(s.imm == -4);
}

TEST_CASE("encode/decode round trip over randomized instructions") {
    std::mt19937 rng(0xc0ffee);
    auto reg = [&] { return rng() % 32; };
    auto imm12 = [&] { return static_cast<int32_t>(rng() % 4096) - 2048; };

    for (int iter = 0; iter < 2000; iter++) {
        u32 word = 0;
        Mnemonic want{};
        switch (rng() % 8) {
        case 0: word = A::addi(reg(), reg(), imm12()); want = Mnemonic::Addi; break;
        case 1: word = A::xor_(reg(), reg(), reg()); want = Mnemonic::Xor; break;
        case 2: word = A::mulhu(reg(), reg(), reg()); want = Mnemonic::Mulhu; break;
        case 3: word = A::lw(reg(), imm12(), reg()); want = Mnemonic::Lw; break;
        case 4: word = A::sb(reg(), imm12(), reg()); want = Mnemonic::Sb; break;
        case 5: word = A::bge(reg(), reg(), (imm12() / 2) * 2); want = Mnemonic::Bge; break;
        case 6: word = A::srai(reg(), reg(), rng() % 32); want = Mnemonic::Srai; break;
        case 7: word = A::rem(reg(), reg(), reg()); want = Mnemonic::Rem; break;
        }
        auto ins = try_decode(word);
        REQUIRE(ins.has_value());
        CHECK(ins->op == want);
        CHECK(ins->raw == word);
        // decoding is stable: re-describing the same word gives the same operands
        auto again = try_decode(word);
        CHECK(*ins == *again);
    }
}

TEST_CASE("register indices stay below 32") {
    std::mt19937 rng(7);
    for (int i = 0; i < 500; i++) {
        auto ins = try_decode(rng());
        if (!ins)
            continue;
        CHECK(ins->rd < 32);
        CHECK(ins->rs1 < 32);
        CHECK(ins->rs2 < 32);
    }
}

TEST_CASE("disassembly names the usual suspects") {
    CHECK(disassemble(decode(0x02554533)) == "div a0, a0, t0");
    CHECK(disassemble(decode(0x00008067)) == "jalr zero, 0(ra)");
    CHECK(disassemble(decode(0x00500593)) == "addi a1, zero, 5");
}
