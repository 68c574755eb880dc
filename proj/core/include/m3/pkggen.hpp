#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "m3/vfs.hpp"

namespace m3 {

// Shape of a synthetic package: `units` interface/module pairs U1..Un plus a
// Main program, every interface importing up to `fanout` earlier interfaces,
// `decls_per_unit` filler constants per interface beyond the referenced ones.
struct PackageParams {
    uint32_t units = 5;
    uint32_t decls_per_unit = 4;
    uint32_t fanout = 2;
};

enum class EditKind : uint8_t {
    UsedConst,   // anchor constant importers fold into their own decls
    UnusedConst, // filler constant nothing references across units
    ModuleBody,  // literal inside a procedure body; interface untouched
};

// The generated package, remembered well enough to reproduce and edit any of
// its files: content is a pure function of (seed, unit, revision).
struct GeneratedPackage {
    std::string dir;
    PackageParams params;
    uint64_t seed = 0;
    std::vector<std::string> names;                          // U1..Un
    std::map<std::string, std::vector<std::string>> imports; // interface -> its imports
    // Edits applied so far, per unit and target declaration.
    std::map<std::string, uint32_t> used_revs, pad_revs, body_revs;
};

// Writes manifest and sources under `dir` (entry Main.Main). Same seed and
// params produce byte-identical trees.
GeneratedPackage gen_package(Vfs& vfs, const std::string& dir, const PackageParams& params,
                             uint64_t seed);

// Rewrites one unit with the addressed declaration changed, then pushes the
// file's mtime a full second past its previous value, so edit-build cycles
// faster than the filesystem timestamp granularity still register as changes.
void apply_edit(Vfs& vfs, GeneratedPackage& pkg, uint32_t unit_index, EditKind kind);

} // namespace m3
