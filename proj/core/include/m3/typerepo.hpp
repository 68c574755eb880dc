#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m3/ast.hpp"

namespace m3 {

struct TypeNode {
    uint64_t fp = 0;   // structural fingerprint
    uint32_t pre = 0;  // DFS interval over the supertype forest
    uint32_t post = 0;

    bool operator==(const TypeNode&) const = default;
};

struct OpaqueBinding {
    std::string name;        // "Unit.T"
    std::string revealed_in; // unit holding the revelation
    uint32_t type_id = 0;

    bool operator==(const OpaqueBinding&) const = default;
};

// Canonical type table for one linked image. Structurally identical types
// share an id regardless of where they were declared; subtype questions are
// answered by interval containment, no traversal.
struct TypeRepo {
    std::vector<TypeNode> types;           // id = index, ids ordered by fp
    std::map<std::string, uint32_t> names; // qualified name -> id ("ANY" for the root)
    std::vector<OpaqueBinding> opaques;    // ordered by name

    bool is_subtype(uint32_t a, uint32_t b) const; // UnknownTypeId when out of range
    std::optional<uint32_t> id_of(const std::string& qualified_name) const;

    bool operator==(const TypeRepo&) const = default;
};

// Builds the repository from every interface in the link: resolves aliases and
// opaque types to structural shapes, deduplicates by fingerprint, numbers the
// supertype forest depth-first, and verifies that each opaque type has exactly
// one revelation compatible with its declared bound. Raises MissingRevelation,
// DuplicateRevelation, RevelationIncompatible, CycleDetected or TypeError.
TypeRepo build_type_repo(const std::map<std::string, UnitAst>& interfaces);

} // namespace m3
