#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "m3/fingerprint.hpp"
#include "m3/source.hpp"
#include "m3/vfs.hpp"

namespace m3 {

// One source file as dependency checking sees it: identity only, no content.
struct SourceFile {
    std::string path;
    std::string unit_name;
    UnitKind kind = UnitKind::Interface;

    std::string key() const { return unit_key(unit_name, kind); }
};

// Per-unit record as of the last successful compile. The used map holds the
// fingerprint each referenced declaration had back then; an empty declaration
// name records a whole-file dependency (instantiations depend on the text of
// their generic interface, which exports no fingerprints of its own).
struct UnitState {
    uint64_t text_hash = 0;
    int64_t mtime_sec = 0;
    int64_t mtime_nsec = 0;
    FpEnv used;

    bool operator==(const UnitState&) const = default;
};

struct BuildState {
    std::map<std::string, UnitState> units; // keyed by unit_key()

    bool operator==(const BuildState&) const = default;
};

// Binary codec, magic "M3S1". Little-endian throughout, strings length-prefixed,
// units and used entries in sorted order so encoding is deterministic.
std::string encode_state(const BuildState& state);
BuildState decode_state(std::string_view bytes); // StateCorrupt on malformed input

// Hash over the full encoded state; changes whenever any entry changes.
uint64_t package_stamp(const BuildState& state);

// nullopt when the file does not exist; StateCorrupt when it cannot be decoded.
std::optional<BuildState> load_state(Vfs& vfs, const std::string& path);

// Write-temp-then-rename, so a crash mid-save leaves the old state readable.
void save_state(Vfs& vfs, const std::string& path, const BuildState& state);

struct ChangeSet {
    std::set<std::string> modified; // unit keys whose content actually changed
    std::set<std::string> deleted;  // unit keys present in prev but gone now
    // Fresh observations for files that were statted/read during detection, so
    // later phases need not probe again.
    std::map<std::string, FileStat> stats;       // by unit key
    std::map<std::string, uint64_t> text_hashes; // by unit key, read files only
};

// Two-step modification probe: mtime is the cheap gate, the content hash
// confirms. Files with unchanged mtimes are never read; files whose mtime
// moved but whose content hashes identically (a touch) are not modified.
// Every unit is modified on a first build (empty prev).
ChangeSet detect_modified(const std::vector<SourceFile>& sources,
                          const BuildState& prev, Vfs& vfs);

struct DirtyReason {
    enum Kind : uint8_t { SourceModified, UsedDeclChanged, MissingObject };
    Kind kind = SourceModified;
    std::string interface_name; // UsedDeclChanged only
    std::string decl_name;      // UsedDeclChanged only; empty = whole file

    bool operator==(const DirtyReason&) const = default;
};

struct DirtySet {
    std::set<std::string> units; // unit keys
    std::map<std::string, std::vector<DirtyReason>> reasons;

    bool is_dirty(const std::string& key) const { return units.count(key) != 0; }
};

// Declaration fingerprints of every current interface, plus the text hash of
// every current generic interface (generics export no fingerprints; their
// instantiations depend on the raw text).
struct CurrentFingerprints {
    std::map<std::string, UnitFingerprints> interfaces;
    std::map<std::string, uint64_t> generic_hashes;
};

// Fingerprints all interfaces in dependency order. The map must contain every
// interface reachable from the units being considered; instantiations must
// already be expanded to ordinary interface ASTs.
CurrentFingerprints fingerprint_interfaces(
    const std::map<std::string, UnitAst>& interfaces,
    const std::map<std::string, uint64_t>& generic_hashes);

// A unit is dirty iff its source changed, or its object file is missing, or
// some declaration it used compiles to a different fingerprint now. A unit is
// NOT dirty merely because a file it imports changed.
DirtySet compute_dirty_set(const std::set<std::string>& modified,
                           const std::vector<SourceFile>& sources,
                           const BuildState& prev,
                           const CurrentFingerprints& current,
                           const std::set<std::string>& objects_present);

// State after a build: entries of recompiled units replaced wholesale, clean
// units carried over verbatim, deleted units dropped.
BuildState record_build_state(const BuildState& prev,
                              const std::map<std::string, UnitState>& recompiled,
                              const std::set<std::string>& surviving);

} // namespace m3
