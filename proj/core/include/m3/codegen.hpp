#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m3/ir.hpp"
#include "m3/machine.hpp"

namespace m3 {

enum class Section : uint8_t { Text = 1, Data = 2 };
enum class SymKind : uint8_t { Proc = 0, Data = 1 };

struct SymbolDef {
    std::string name; // mangled, "Unit.decl"
    Section section = Section::Text;
    uint64_t offset = 0;
    SymKind kind = SymKind::Proc;
    uint64_t size = 0;
    bool exported = false;

    bool operator==(const SymbolDef&) const = default;
};

enum class RelocKind : uint8_t {
    PcRel32 = 1,      // patched at link: target - end of field
    IndirectSlot = 2, // patched at link: index into the image's slot table
};

struct Reloc {
    Section section = Section::Text;
    uint64_t offset = 0; // of the 32-bit field
    std::string symbol;
    RelocKind kind = RelocKind::PcRel32;

    bool operator==(const Reloc&) const = default;
};

struct LineRecord {
    uint64_t text_offset = 0;
    uint32_t line = 0;

    bool operator==(const LineRecord&) const = default;
};

struct CodegenStats {
    uint32_t spills = 0;
    uint32_t max_operand_depth = 0;
};

struct GeneratedUnit {
    std::string unit_name;
    // Interfaces this unit depends on for initialization order: its own
    // imports plus the interface it implements. Filled by the compile
    // pipeline, carried in the object file for link-time use.
    std::vector<std::string> imports;
    std::vector<uint8_t> text;
    std::vector<uint8_t> data;
    std::vector<SymbolDef> symbols;
    std::vector<Reloc> relocs;
    std::vector<LineRecord> lines;
    std::string init_symbol; // "" when the module has no initializer body
    CodegenStats stats;
};

// One pass over the event stream; emitted bytes are never revisited. Operands
// are pushed as descriptors and materialized into registers only when an
// instruction needs them; immediate-plus-immediate folds, nothing else does.
// Calls go through the indirection table (cross-unit) or a pc-relative
// relocation (same unit), so the text never contains an absolute address.
GeneratedUnit generate_code(const UnitIr& ir);

} // namespace m3
