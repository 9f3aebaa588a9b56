#include <doctest.h>

#include <random>

#include <zkopt/machine.hpp>

#include "../support/fixtures.hpp"

using namespace zkopt;
namespace A = zkasm;
using zktest::boot;
using zktest::kCodeBase;

TEST_CASE("div by zero yields all-ones, no trap") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 7));
    p.emit(A::div(A::a0, A::a0, A::zero));
    auto st = boot(p);
    CHECK(!step(st).trap);
    CHECK(!step(st).trap);
    CHECK(st.reg(10) == 0xFFFFFFFFu);
    CHECK(st.retired == 2);
}

TEST_CASE("signed division overflow case") {
    zkasm::Program p;
    p.emit(A::lui(A::a0, 0x80000));       // a0 = INT32_MIN
    p.emit(A::li(A::a1, -1));
    p.emit(A::div(A::a2, A::a0, A::a1));
    p.emit(A::rem(A::a3, A::a0, A::a1));
    auto st = boot(p);
    for (int i = 0; i < 4; i++)
        REQUIRE(!step(st).trap);
    CHECK(st.reg(12) == 0x80000000u);
    CHECK(st.reg(13) == 0);
}

TEST_CASE("rem by zero returns dividend") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 7));
    p.emit(A::rem(A::a1, A::a0, A::zero));
    p.emit(A::remu(A::a2, A::a0, A::zero));
    auto st = boot(p);
    for (int i = 0; i < 3; i++)
        REQUIRE(!step(st).trap);
    CHECK(st.reg(11) == 7);
    CHECK(st.reg(12) == 7);
}

TEST_CASE("exit(42) two-instruction flow") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 42));
    p.emit(A::li(A::a7, 93));
    p.emit(A::ecall());
    auto st = boot(p);
    auto trace = run(st, 10);
    CHECK(trace.halt.kind == HaltKind::Exited);
    CHECK(trace.halt.exit_code == 42);
    CHECK(trace.retired == 3);
    CHECK(st.x[0] == 0);
}

TEST_CASE("write ecall appends to the output buffer") {
    // store 'h','i' to a scratch address, then write(ptr, 2), then exit(0)
    const u32 buf = 0x20000;
    zkasm::Program p;
    p.emit(A::lui(A::t0, buf >> 12));
    p.emit(A::li(A::t1, 'h'));
    p.emit(A::sb(A::t1, 0, A::t0));
    p.emit(A::li(A::t1, 'i'));
    p.emit(A::sb(A::t1, 1, A::t0));
    p.emit(A::li(A::a7, 64));
    p.emit(A::mv(A::a1, A::t0));
    p.emit(A::li(A::a2, 2));
    p.emit(A::ecall());
    p.emit(A::li(A::a7, 93));
    p.emit(A::li(A::a0, 0));
    p.emit(A::ecall());
    auto st = boot(p);
    auto trace = run(st, 100);
    REQUIRE(trace.halt.kind == HaltKind::Exited);
    CHECK(trace.output == std::vector<u8>{'h', 'i'});
    CHECK(trace.env_calls == 2);
}

TEST_CASE("write ecall sets a0 to the length") {
    const u32 buf = 0x20000;
    zkasm::Program p;
    p.emit(A::lui(A::a1, buf >> 12));
    p.emit(A::li(A::a2, 3));
    p.emit(A::li(A::a7, 64));
    p.emit(A::ecall());
    auto st = boot(p);
    for (int i = 0; i < 4; i++)
        REQUIRE(!step(st).trap);
    CHECK(st.reg(10) == 3);
}

TEST_CASE("absurd write lengths fault instead of flooding the output buffer") {
    zkasm::Program p;
    p.emit(A::lui(A::a1, 0x20));
    p.emit(A::li(A::a2, -1));   // length 0xFFFFFFFF
    p.emit(A::li(A::a7, 64));
    p.emit(A::ecall());
    auto st = boot(p);
    auto trace = run(st, 10);
    CHECK(trace.halt.kind == HaltKind::Trapped);
    CHECK(trace.halt.trap == TrapKind::MemFault);
    CHECK(trace.output.empty());
}

TEST_CASE("unknown ecall id traps") {
    zkasm::Program p;
    p.emit(A::li(A::a7, 0x100));
    p.emit(A::ecall());
    auto st = boot(p);
    auto trace = run(st, 10);
    CHECK(trace.halt.kind == HaltKind::Trapped);
    CHECK(trace.halt.trap == TrapKind::UnknownEcall);
    CHECK(trace.retired == 1);   // the trapping ecall does not retire
}

TEST_CASE("registered accelerator id is accepted and clears a0") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 99));
    p.emit(A::li(A::a7, 0x100));
    p.emit(A::ecall());
    p.emit(A::li(A::a7, 93));
    p.emit(A::ecall());
    auto st = boot(p);
    st.accelerator_ids.insert(0x100);
    auto trace = run(st, 10);
    REQUIRE(trace.halt.kind == HaltKind::Exited);
    CHECK(trace.halt.exit_code == 0);   // accelerator wrote a0 = 0
    CHECK(trace.ecall_counts.at(0x100) == 1);
}

TEST_CASE("beq taken and not taken") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 5));
    p.emit(A::li(A::a1, 5));
    p.emit(A::beq(A::a0, A::a1, 8));
    auto st = boot(p);
    REQUIRE(!step(st).trap);
    REQUIRE(!step(st).trap);
    const u32 pc_before = st.pc;
    auto sr = step(st);
    REQUIRE(!sr.trap);
    REQUIRE(sr.events.size() == 1);
    CHECK(sr.events[0].kind == StepEvent::Kind::BranchTaken);
    CHECK(st.pc == pc_before + 8);
}

TEST_CASE("x0 is immutable") {
    zkasm::Program p;
    p.emit(A::li(A::zero, 123));
    p.emit(A::add(A::zero, A::a0, A::a1));
    auto st = boot(p);
    st.x[10] = 1;
    st.x[11] = 2;
    REQUIRE(!step(st).trap);
    CHECK(st.x[0] == 0);
    REQUIRE(!step(st).trap);
    CHECK(st.x[0] == 0);
}

TEST_CASE("infinite loop hits the instruction limit") {
    zkasm::Program p;
    p.emit(A::j_(0));   // j .
    auto st = boot(p);
    auto trace = run(st, 1000);
    CHECK(trace.halt.kind == HaltKind::LimitExceeded);
    CHECK(trace.retired == 1000);
}

TEST_CASE("limit zero is rejected") {
    auto st = boot(zktest::exit_program(0));
    CHECK_THROWS_AS(run(st, 0), Error);
}

TEST_CASE("misaligned load traps") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 0x202));
    p.emit(A::lw(A::a1, 1, A::a0));   // address 0x203
    auto st = boot(p);
    REQUIRE(!step(st).trap);
    auto sr = step(st);
    REQUIRE(sr.trap.has_value());
    CHECK(*sr.trap == TrapKind::MisalignedAccess);
}

TEST_CASE("fetch outside the image traps") {
    zkasm::Program p;
    p.emit(A::nop());
    auto st = boot(p);
    auto trace = run(st, 10);
    CHECK(trace.halt.kind == HaltKind::Trapped);
    CHECK(trace.halt.trap == TrapKind::OutOfImageFetch);
    CHECK(trace.retired == 1);
}

TEST_CASE("byte and halfword loads sign- and zero-extend correctly") {
    const u32 buf = 0x20000;
    zkasm::Program p;
    p.emit(A::lui(A::s0, buf >> 12));
    p.emit(A::li(A::t0, 0x80 - 256));        // 0xFFFFFF80
    p.emit(A::sb(A::t0, 0, A::s0));
    p.emit(A::lb(A::a0, 0, A::s0));          // sign-extended
    p.emit(A::lbu(A::a1, 0, A::s0));         // zero-extended
    p.emit(A::li(A::t1, -2));                // 0xFFFFFFFE
    p.emit(A::sh(A::t1, 2, A::s0));
    p.emit(A::lh(A::a2, 2, A::s0));
    p.emit(A::lhu(A::a3, 2, A::s0));
    auto st = boot(p);
    for (int i = 0; i < 9; i++)
        REQUIRE(!step(st).trap);
    CHECK(st.reg(10) == 0xFFFFFF80u);
    CHECK(st.reg(11) == 0x80u);
    CHECK(st.reg(12) == 0xFFFFFFFEu);
    CHECK(st.reg(13) == 0xFFFEu);
}

TEST_CASE("stores write only their width") {
    const u32 buf = 0x20000;
    zkasm::Program p;
    p.emit(A::lui(A::s0, buf >> 12));
    p.emit(A::li(A::t0, -1));
    p.emit(A::sw(A::t0, 0, A::s0));
    p.emit(A::li(A::t1, 0));
    p.emit(A::sb(A::t1, 1, A::s0));
    p.emit(A::lw(A::a0, 0, A::s0));
    auto st = boot(p);
    for (int i = 0; i < 6; i++)
        REQUIRE(!step(st).trap);
    CHECK(st.reg(10) == 0xFFFF00FFu);
}

TEST_CASE("uninitialized memory reads as zero") {
    zkasm::Program p;
    p.emit(A::lui(A::a0, 0x40));
    p.emit(A::lw(A::a1, 0, A::a0));
    auto st = boot(p);
    st.x[11] = 0xdeadbeef;
    REQUIRE(!step(st).trap);
    REQUIRE(!step(st).trap);
    CHECK(st.reg(11) == 0);
}

TEST_CASE("jalr clears bit zero and traps on remaining misalignment") {
    SUBCASE("bit zero cleared, lands aligned") {
        zkasm::Program q;
        q.emit(A::lui(A::a0, kCodeBase >> 12));
        q.emit(A::addi(A::a0, A::a0, 13));
        q.emit(A::jalr(A::zero, A::a0, 0));   // 0x...d & ~1 = 0x...c
        q.emit(A::nop());
        auto st = boot(q);
        for (int i = 0; i < 3; i++)
            REQUIRE(!step(st).trap);
        CHECK(st.pc == kCodeBase + 12);
    }
    SUBCASE("two-byte misalignment traps") {
        zkasm::Program q;
        q.emit(A::lui(A::a0, kCodeBase >> 12));
        q.emit(A::addi(A::a0, A::a0, 10));
        q.emit(A::jalr(A::zero, A::a0, 0));
        q.emit(A::nop());
        auto st = boot(q);
        REQUIRE(!step(st).trap);
        REQUIRE(!step(st).trap);
        auto sr = step(st);
        REQUIRE(sr.trap.has_value());
        CHECK(*sr.trap == TrapKind::MisalignedAccess);
    }
}

TEST_CASE("determinism: identical program, identical trace") {
    zkasm::Program p;
    p.emit(A::li(A::a0, 0));
    p.emit(A::li(A::a1, 10));
    p.emit(A::addi(A::a0, A::a0, 3));        // loop body
    p.emit(A::addi(A::a1, A::a1, -1));
    p.emit(A::bne(A::a1, A::zero, -8));
    p.emit(A::li(A::a7, 93));
    p.emit(A::ecall());

    auto run_once = [&] {
        auto st = boot(p);
        return run(st, 1000);
    };
    auto t1 = run_once();
    auto t2 = run_once();
    CHECK(t1.retired == t2.retired);
    CHECK(t1.halt.exit_code == t2.halt.exit_code);
    CHECK(t1.touch_events.size() == t2.touch_events.size());
    for (size_t i = 0; i < t1.touch_events.size(); i++)
        CHECK(t1.touch_events[i] == t2.touch_events[i]);
    CHECK(t1.class_retired == t2.class_retired);
    CHECK(t1.branches_taken == t2.branches_taken);
    CHECK(t1.branches_not_taken == t2.branches_not_taken);
    CHECK(t1.halt.exit_code == 30);
}

TEST_CASE("retired counts exactly the successful steps") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 20; trial++) {
        zkasm::Program p;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; i++)
            p.emit(A::addi(static_cast<u32>(rng() % 32), static_cast<u32>(rng() % 32),
                           static_cast<int32_t>(rng() % 100)));
        p.emit(A::li(A::a7, 93));
        p.emit(A::li(A::a0, 0));
        p.emit(A::ecall());
        auto st = boot(p);
        auto trace = run(st, 10000);
        REQUIRE(trace.halt.kind == HaltKind::Exited);
        CHECK(trace.retired == static_cast<u64>(n) + 3);
        CHECK(st.x[0] == 0);
    }
}
