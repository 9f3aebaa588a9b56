#pragma once

// Self-contained RV32IM reference interpreter used as an independent oracle
// for the library's emulator. Deliberately shares no code with it: flat
// memory, its own ELF program-header walk, raw field decoding in one switch.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace refsim {

struct Result {
    bool exited = false;
    bool faulted = false;
    uint32_t exit_code = 0;
    uint64_t executed = 0;
    std::string output;
};

class Sim {
public:
    explicit Sim(size_t mem_bytes = 64u << 20) : mem_(mem_bytes, 0) {}

    // Returns false if the file is not a usable ELF32 RISC-V executable.
    bool load(const std::vector<uint8_t>& elf) {
        auto rd16 = [&](size_t o) { return (uint32_t)elf[o] | ((uint32_t)elf[o + 1] << 8); };
        auto rd32 = [&](size_t o) {
            return (uint32_t)elf[o] | ((uint32_t)elf[o + 1] << 8) |
                   ((uint32_t)elf[o + 2] << 16) | ((uint32_t)elf[o + 3] << 24);
        };
        if (elf.size() < 52 || elf[0] != 0x7f || elf[1] != 'E' || elf[2] != 'L' ||
            elf[3] != 'F' || elf[4] != 1)
            return false;
        pc_ = rd32(0x18);
        uint32_t phoff = rd32(0x1c);
        uint16_t phentsize = rd16(0x2a);
        uint16_t phnum = rd16(0x2c);
        for (uint16_t i = 0; i < phnum; i++) {
            size_t ph = phoff + (size_t)i * phentsize;
            if (rd32(ph) != 1)
                continue;
            uint32_t off = rd32(ph + 4), vaddr = rd32(ph + 8);
            uint32_t filesz = rd32(ph + 16);
            if ((size_t)vaddr + filesz > mem_.size())
                return false;
            std::memcpy(mem_.data() + vaddr, elf.data() + off, filesz);
        }
        return true;
    }

    Result run(uint64_t max_steps) {
        Result res;
        uint32_t x[32] = {0};
        while (res.executed < max_steps) {
            if ((size_t)pc_ + 4 > mem_.size() || (pc_ & 3)) {
                res.faulted = true;
                return res;
            }
            uint32_t w = fetch(pc_);
            uint32_t opc = w & 0x7f, rd = (w >> 7) & 31, f3 = (w >> 12) & 7;
            uint32_t rs1 = (w >> 15) & 31, rs2 = (w >> 20) & 31, f7 = w >> 25;
            uint32_t a = x[rs1], b = x[rs2];
            uint32_t np = pc_ + 4;
            uint32_t val = 0;
            bool wr = false;

            switch (opc) {
            case 0x37: val = w & 0xfffff000u; wr = true; break;
            case 0x17: val = pc_ + (w & 0xfffff000u); wr = true; break;
            case 0x6f: val = np; wr = true; np = pc_ + immj(w); break;
            case 0x67: val = np; wr = true; np = (a + immi(w)) & ~1u; break;
            case 0x63: {
                bool take = false;
                switch (f3) {
                case 0: take = a == b; break;
                case 1: take = a != b; break;
                case 4: take = (int32_t)a < (int32_t)b; break;
                case 5: take = (int32_t)a >= (int32_t)b; break;
                case 6: take = a < b; break;
                case 7: take = a >= b; break;
                default: res.faulted = true; return res;
                }
                if (take)
                    np = pc_ + immb(w);
                break;
            }
            case 0x03: {
                uint32_t addr = a + immi(w);
                switch (f3) {
                case 0: val = (uint32_t)(int32_t)(int8_t)ld(addr, 1); break;
                case 1: val = (uint32_t)(int32_t)(int16_t)ld(addr, 2); break;
                case 2: val = ld(addr, 4); break;
                case 4: val = ld(addr, 1); break;
                case 5: val = ld(addr, 2); break;
                default: res.faulted = true; return res;
                }
                wr = true;
                break;
            }
            case 0x23: {
                uint32_t addr = a + imms(w);
                switch (f3) {
                case 0: st(addr, 1, b); break;
                case 1: st(addr, 2, b); break;
                case 2: st(addr, 4, b); break;
                default: res.faulted = true; return res;
                }
                break;
            }
            case 0x13: {
                uint32_t imm = immi(w);
                switch (f3) {
                case 0: val = a + imm; break;
                case 2: val = (int32_t)a < (int32_t)imm; break;
                case 3: val = a < imm; break;
                case 4: val = a ^ imm; break;
                case 6: val = a | imm; break;
                case 7: val = a & imm; break;
                case 1: val = a << (imm & 31); break;
                case 5:
                    val = (w >> 30) & 1 ? (uint32_t)((int32_t)a >> (imm & 31))
                                        : a >> (imm & 31);
                    break;
                }
                wr = true;
                break;
            }
            case 0x33:
                wr = true;
                if (f7 == 1) {
                    switch (f3) {
                    case 0: val = a * b; break;
                    case 1: val = (uint32_t)(((int64_t)(int32_t)a * (int64_t)(int32_t)b) >> 32); break;
                    case 2: val = (uint32_t)(((int64_t)(int32_t)a * (uint64_t)b) >> 32); break;
                    case 3: val = (uint32_t)(((uint64_t)a * (uint64_t)b) >> 32); break;
                    case 4:
                        val = b == 0 ? 0xffffffffu
                              : (a == 0x80000000u && b == 0xffffffffu) ? a
                                                                       : (uint32_t)((int32_t)a / (int32_t)b);
                        break;
                    case 5: val = b == 0 ? 0xffffffffu : a / b; break;
                    case 6:
                        val = b == 0 ? a
                              : (a == 0x80000000u && b == 0xffffffffu) ? 0
                                                                       : (uint32_t)((int32_t)a % (int32_t)b);
                        break;
                    case 7: val = b == 0 ? a : a % b; break;
                    }
                } else if (f7 == 0) {
                    switch (f3) {
                    case 0: val = a + b; break;
                    case 1: val = a << (b & 31); break;
                    case 2: val = (int32_t)a < (int32_t)b; break;
                    case 3: val = a < b; break;
                    case 4: val = a ^ b; break;
                    case 5: val = a >> (b & 31); break;
                    case 6: val = a | b; break;
                    case 7: val = a & b; break;
                    }
                } else if (f7 == 0x20 && f3 == 0) {
                    val = a - b;
                } else if (f7 == 0x20 && f3 == 5) {
                    val = (uint32_t)((int32_t)a >> (b & 31));
                } else {
                    res.faulted = true;
                    return res;
                }
                break;
            case 0x0f:
                break;   // fence: nop
            case 0x73:
                if (w == 0x00000073) {
                    uint32_t call = x[17];
                    if (call == 93) {
                        res.exited = true;
                        res.exit_code = x[10];
                        res.executed++;
                        return res;
                    }
                    if (call == 64) {
                        uint32_t ptr = x[11], len = x[12];
                        for (uint32_t i = 0; i < len; i++)
                            res.output.push_back((char)ld(ptr + i, 1));
                        x[10] = len;
                        break;
                    }
                }
                res.faulted = true;
                return res;
            default:
                res.faulted = true;
                return res;
            }

            if (wr && rd != 0)
                x[rd] = val;
            x[0] = 0;
            pc_ = np;
            res.executed++;
        }
        return res;   // step budget exhausted
    }

private:
    static int32_t sext(uint32_t v, int bits) {
        return (int32_t)(v << (32 - bits)) >> (32 - bits);
    }
    static uint32_t immi(uint32_t w) { return (uint32_t)sext(w >> 20, 12); }
    static uint32_t imms(uint32_t w) {
        return (uint32_t)sext(((w >> 7) & 31) | ((w >> 20) & 0xfe0), 12);
    }
    static uint32_t immb(uint32_t w) {
        return (uint32_t)sext(((w >> 7) & 0x1e) | ((w >> 20) & 0x7e0) |
                                  ((w << 4) & 0x800) | ((w >> 19) & 0x1000),
                              13);
    }
    static uint32_t immj(uint32_t w) {
        return (uint32_t)sext(((w >> 20) & 0x7fe) | ((w >> 9) & 0x800) |
                                  (w & 0xff000) | ((w >> 11) & 0x100000),
                              21);
    }

    uint32_t fetch(uint32_t addr) const {
        return (uint32_t)mem_[addr] | ((uint32_t)mem_[addr + 1] << 8) |
               ((uint32_t)mem_[addr + 2] << 16) | ((uint32_t)mem_[addr + 3] << 24);
    }
    uint32_t ld(uint32_t addr, int width) const {
        uint32_t v = 0;
        for (int i = 0; i < width; i++)
            v |= (size_t)addr + i < mem_.size() ? (uint32_t)mem_[addr + i] << (8 * i) : 0;
        return v;
    }
    void st(uint32_t addr, int width, uint32_t v) {
        for (int i = 0; i < width; i++)
            if ((size_t)addr + i < mem_.size())
                mem_[addr + i] = (uint8_t)(v >> (8 * i));
    }

    std::vector<uint8_t> mem_;
    uint32_t pc_ = 0;
};

} // namespace refsim
