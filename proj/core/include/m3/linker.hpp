#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "m3/codegen.hpp"
#include "m3/typerepo.hpp"

namespace m3 {

struct Prelinked {
    std::vector<std::string> init_order;
    TypeRepo types;
};

// Initialization order: a module runs after every linked module whose
// interface appears in its import set (which carries both the module's own
// imports and its interface's). Ready modules are taken smallest-name-first,
// so the order is unique; a dependency cycle raises InitCycle with the path.
// The type repository is built from the interfaces, verifying revelation
// coherence along the way.
Prelinked prelink(const std::vector<GeneratedUnit>& objects,
                  const std::map<std::string, UnitAst>& interfaces);

struct ImageSlot {
    std::string symbol;
    SymKind kind = SymKind::Proc;

    bool operator==(const ImageSlot&) const = default;
};

// A linked program. Text and data contain no absolute addresses: calls and
// global accesses go through the slot table by index, and pc-relative call
// fields are base-independent, so a loader may place the image anywhere.
struct Image {
    std::string entry; // "" when the package declares none
    std::vector<uint8_t> text;
    std::vector<uint8_t> data;
    std::vector<ImageSlot> slots;        // sorted by symbol name
    std::vector<std::string> init_order; // every linked module
    std::vector<SymbolDef> symbols;      // sorted by name, offsets section-relative
    TypeRepo types;

    bool operator==(const Image&) const = default;

    const SymbolDef* find_symbol(const std::string& name) const;
};

// Concatenates sections in initialization order (leftover objects follow
// alphabetically, 8-aligned), merges symbols, patches pc-relative fields and
// assigns slot indices. Every referenced symbol must be defined here — lazy
// binding defers only the address binding, not existence. Raises
// UndefinedSymbol or DuplicateSymbol.
Image link(const std::vector<GeneratedUnit>& objects, const Prelinked& pre,
           const std::string& entry);

// `.m3x` codec, magic "M3X1". Deterministic; decode validates every offset
// and raises BadMagic, TruncatedFile or OffsetOutOfRange.
std::string encode_image(const Image& img);
Image decode_image(std::string_view bytes);

} // namespace m3
