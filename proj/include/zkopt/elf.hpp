#pragma once

#include <algorithm>
#include <map>

#include "zkopt/machine.hpp"

namespace zkopt {

class ElfError : public Error {
public:
    enum class Kind {
        BadMagic,
        WrongClass,
        WrongEndian,
        WrongMachine,
        NotExecutable,
        NoLoadSegments,
        OverlappingSegments,
        Truncated,
        EntryNotExecutable,
    };
    ElfError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct Segment {
    u32 vaddr = 0;
    std::vector<u8> bytes;   // file contents
    u32 mem_size = 0;        // >= bytes.size(); tail is zero-filled
    bool writable = false;
    bool executable = false;
};

/// A loaded static executable: entry point, PT_LOAD contents, and any
/// function symbols found (used only to annotate reports).
struct LoadedImage {
    u32 entry = 0;
    std::vector<Segment> segments;
    std::map<std::string, u32> symbols;

    std::pair<u32, u32> address_range() const {
        u32 lo = 0xffffffffu, hi = 0;
        for (auto& s : segments) {
            lo = std::min(lo, s.vaddr);
            hi = std::max(hi, s.vaddr + s.mem_size);
        }
        return {lo, hi};
    }
};

namespace detail {

struct ElfReader {
    const std::vector<u8>& b;

    void need(size_t off, size_t n) const {
        if (off + n > b.size())
            throw ElfError(ElfError::Kind::Truncated,
                           "ELF truncated at offset " + std::to_string(off));
    }
    u16 r16(size_t off) const {
        need(off, 2);
        return static_cast<u16>(b[off] | (b[off + 1] << 8));
    }
    u32 r32(size_t off) const {
        need(off, 4);
        return static_cast<u32>(b[off]) | (static_cast<u32>(b[off + 1]) << 8) |
               (static_cast<u32>(b[off + 2]) << 16) | (static_cast<u32>(b[off + 3]) << 24);
    }
};

} // namespace detail

inline void load_symbols(const std::vector<u8>& bytes, LoadedImage& image);

/// Parse a 32-bit little-endian RISC-V ET_EXEC image.
inline LoadedImage load_elf(const std::vector<u8>& bytes) {
    constexpr u16 kTypeExec = 2;
    constexpr u16 kMachineRiscv = 243;
    constexpr u32 kPtLoad = 1;
    constexpr u32 kPfWrite = 2;
    constexpr u32 kPfExec = 1;

    detail::ElfReader r{bytes};
    r.need(0, 16);
    if (!(bytes[0] == 0x7f && bytes[1] == 'E' && bytes[2] == 'L' && bytes[3] == 'F'))
        throw ElfError(ElfError::Kind::BadMagic, "not an ELF file (bad magic)");
    if (bytes[4] != 1)
        throw ElfError(ElfError::Kind::WrongClass, "not a 32-bit ELF (EI_CLASS)");
    if (bytes[5] != 1)
        throw ElfError(ElfError::Kind::WrongEndian, "not little-endian (EI_DATA)");
    if (r.r16(0x10) != kTypeExec)
        throw ElfError(ElfError::Kind::NotExecutable, "not an ET_EXEC static executable");
    if (r.r16(0x12) != kMachineRiscv)
        throw ElfError(ElfError::Kind::WrongMachine, "not a RISC-V ELF (e_machine)");

    LoadedImage image;
    image.entry = r.r32(0x18);
    const u32 phoff = r.r32(0x1c);
    const u16 phentsize = r.r16(0x2a);
    const u16 phnum = r.r16(0x2c);

    for (u16 i = 0; i < phnum; i++) {
        const size_t ph = phoff + static_cast<size_t>(i) * phentsize;
        if (r.r32(ph + 0x00) != kPtLoad)
            continue;
        Segment seg;
        const u32 offset = r.r32(ph + 0x04);
        seg.vaddr = r.r32(ph + 0x08);
        const u32 filesz = r.r32(ph + 0x10);
        seg.mem_size = r.r32(ph + 0x14);
        const u32 flags = r.r32(ph + 0x18);
        seg.writable = (flags & kPfWrite) != 0;
        seg.executable = (flags & kPfExec) != 0;
        if (seg.mem_size < filesz)
            throw ElfError(ElfError::Kind::Truncated, "segment memsz < filesz");
        r.need(offset, filesz);
        seg.bytes.assign(bytes.begin() + offset, bytes.begin() + offset + filesz);
        if (seg.mem_size > 0)
            image.segments.push_back(std::move(seg));
    }
    if (image.segments.empty())
        throw ElfError(ElfError::Kind::NoLoadSegments, "no PT_LOAD segments");

    // Overlap check over [vaddr, vaddr+memsz) intervals.
    std::vector<std::pair<u32, u32>> spans;
    for (auto& s : image.segments)
        spans.emplace_back(s.vaddr, s.vaddr + s.mem_size);
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); i++)
        if (spans[i].first < spans[i - 1].second)
            throw ElfError(ElfError::Kind::OverlappingSegments,
                           "PT_LOAD segments overlap at " + hex_u32(spans[i].first));

    bool entry_ok = false;
    for (auto& s : image.segments)
        if (s.executable && image.entry >= s.vaddr && image.entry < s.vaddr + s.mem_size)
            entry_ok = true;
    if (!entry_ok)
        throw ElfError(ElfError::Kind::EntryNotExecutable,
                       "entry point " + hex_u32(image.entry) +
                           " outside executable segments");

    load_symbols(bytes, image);
    return image;
}

inline LoadedImage load_elf_file(const fs::path& path) {
    return load_elf(read_file(path));
}

/// Best-effort .symtab scan for FUNC/NOTYPE symbols. Malformed symbol
/// tables are ignored; symbols are annotation only.
inline void load_symbols(const std::vector<u8>& bytes, LoadedImage& image) try {
    constexpr u32 kShtSymtab = 2;
    detail::ElfReader r{bytes};
    const u32 shoff = r.r32(0x20);
    const u16 shentsize = r.r16(0x2e);
    const u16 shnum = r.r16(0x30);
    if (shoff == 0)
        return;

    for (u16 i = 0; i < shnum; i++) {
        const size_t sh = shoff + static_cast<size_t>(i) * shentsize;
        if (r.r32(sh + 0x04) != kShtSymtab)
            continue;
        const u32 symoff = r.r32(sh + 0x10);
        const u32 symsize = r.r32(sh + 0x14);
        const u32 link = r.r32(sh + 0x18);
        const u32 entsize = r.r32(sh + 0x24);
        if (entsize < 16 || link >= shnum)
            return;
        const size_t strsh = shoff + static_cast<size_t>(link) * shentsize;
        const u32 stroff = r.r32(strsh + 0x10);
        const u32 strsize = r.r32(strsh + 0x14);
        for (u32 off = 0; off + entsize <= symsize; off += entsize) {
            const size_t sym = symoff + off;
            const u32 name_idx = r.r32(sym + 0x00);
            const u32 value = r.r32(sym + 0x04);
            const u8 info = bytes.at(sym + 0x0c);
            const u8 type = info & 0xf;
            if (type > 2)   // NOTYPE (asm labels), OBJECT, FUNC
                continue;
            if (name_idx == 0 || name_idx >= strsize)
                continue;
            std::string name;
            for (size_t p = stroff + name_idx; p < bytes.size() && bytes[p]; p++)
                name.push_back(static_cast<char>(bytes[p]));
            if (!name.empty())
                image.symbols.emplace(std::move(name), value);
        }
        return;
    }
} catch (const ElfError&) {
    // symbol table problems never fail the load
}

/// Copy segments into machine memory, set pc, and register executable
/// ranges. Loading itself records no page touches.
inline void load_image(MachineState& st, const LoadedImage& image) {
    for (const Segment& seg : image.segments) {
        st.mem.write_block(seg.vaddr, seg.bytes.data(), seg.bytes.size());
        // memsz > filesz tail: sparse memory already reads as zero.
        if (seg.executable)
            st.exec_ranges.emplace_back(seg.vaddr, seg.vaddr + seg.mem_size);
    }
    st.pc = image.entry;
}

} // namespace zkopt
