#pragma once

#include <zkopt/machine.hpp>

#include "assembler.hpp"

namespace zktest {

constexpr zkopt::u32 kCodeBase = 0x10000;

/// Machine with raw code bytes placed at `base` and pc pointing at them.
inline zkopt::MachineState boot(const zkasm::Program& prog, zkopt::u32 base = kCodeBase) {
    zkopt::MachineState st;
    st.mem.write_block(base, prog.bytes.data(), prog.bytes.size());
    st.exec_ranges.emplace_back(base, base + prog.size());
    st.pc = base;
    return st;
}

/// exit(code) in two instructions (code must fit in 12-bit immediate).
inline zkasm::Program exit_program(int32_t code) {
    zkasm::Program p;
    p.emit(zkasm::li(zkasm::a0, code));
    p.emit(zkasm::li(zkasm::a7, 93));
    p.emit(zkasm::ecall());
    return p;
}

} // namespace zktest
