#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "m3/depcheck.hpp"
#include "m3/phase.hpp"
#include "m3/typecheck.hpp"

namespace m3 {

// Where a unit's source lives. origin "" means the package being built;
// anything else names the library directory it came from.
struct SourceRef {
    std::string path;
    std::string origin;
};

// name + kind -> source location; an empty path means no such unit exists.
using SourceResolver = std::function<SourceRef(const std::string&, UnitKind)>;

// A cached interface: expanded AST (instantiations are stored substituted),
// its checked summary and fingerprints, plus the source identity that decides
// whether it is still current.
struct CacheEntry {
    std::shared_ptr<const UnitAst> ast;
    InterfaceSummary summary;
    UnitFingerprints fps;
    std::string source_path;
    std::string origin;
    uint64_t text_hash = 0;
    FileStat mtime;
    uint64_t valid_stamp = 0;    // epoch this entry was last known valid
    uint64_t resident_bytes = 0; // source text size, the byte-budget proxy
};

struct ValidateResult {
    std::set<std::string> valid;   // revalidated from cache this build
    std::set<std::string> evicted; // stale entries dropped this build
};

struct ShortcutResult {
    bool applied = false;
    std::optional<FileStat> state_stat; // the one probe's result, reusable by callers
};

// Server-resident interface cache, kept across builds. Each build bumps the
// epoch; a depth-first validation walk stamps entries whose source and used
// declaration fingerprints are unchanged, evicts the rest, and (re)parses
// whatever the build needs — each interface at most once per build. Generic
// interface sources are tracked by text hash only, since only their
// instantiations have ASTs worth caching.
class InterfaceCache {
public:
    explicit InterfaceCache(Vfs& vfs) : vfs_(&vfs) {}

    void set_byte_budget(std::optional<uint64_t> budget);

    uint64_t epoch() const { return epoch_; }
    size_t entry_count() const { return entries_.size(); }
    uint64_t resident_bytes() const { return resident_; }
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    // Opens a build: bumps the epoch, installs the package's source resolver
    // and the stat/hash observations modification detection already made, and
    // resets the per-build counters. `changes` and `clock` may be null.
    void begin_build(SourceResolver resolver, const ChangeSet* changes, PhaseClock* clock);

    // Library shortcut: when the library's state file is unchanged, stamps
    // every cached entry of that origin valid for this epoch, so the
    // validation walk skips their per-file checks entirely. A missing state
    // file means no shortcut. The new stamp is remembered but only kept by
    // commit_build().
    ShortcutResult apply_library_shortcut(const std::string& origin,
                                          const std::string& state_path);

    // Validates the import graph reachable from `roots`, depth-first.
    // Raises CycleDetected on an interface import cycle and
    // ImportOfUnknownUnit when a (re)parsed interface imports a unit that
    // does not exist. Unresolvable root names are skipped quietly.
    ValidateResult validate(const std::set<std::string>& roots);

    // Returns the entry for an interface, validating and parsing on demand.
    // Two calls in one build return the same object. Raises
    // ImportOfUnknownUnit when the interface does not exist.
    std::shared_ptr<const CacheEntry> get_or_parse(const std::string& name);

    // Peeks without parsing: null when absent or not valid this epoch.
    std::shared_ptr<const CacheEntry> lookup_valid(const std::string& name) const;

    // Text of a generic interface, read at most once per build. Null when no
    // such generic exists.
    const std::string* generic_text(const std::string& name);
    std::optional<uint64_t> generic_hash(const std::string& name);

    // Fingerprints of everything validated this epoch, for dirty-set
    // computation.
    CurrentFingerprints current_fingerprints() const;

    // Keeps library stamps observed during a successful build.
    void commit_build();

    // Drops the borrowed per-build context (change set, clock). The resolver
    // stays installed for ad-hoc lookups between builds.
    void end_build() {
        changes_ = nullptr;
        clock_ = nullptr;
    }

    // Per-build instrumentation.
    uint64_t parses() const { return parsed_count_; }
    uint64_t reuses() const { return reused_count_; }
    uint64_t parse_count(const std::string& name) const;
    uint64_t check_count(const std::string& name) const;

private:
    struct GenericRec {
        std::string path;
        std::string origin;
        FileStat mtime;
        uint64_t hash = 0;
        std::string text;
        uint64_t stamp = 0;      // epoch the identity was last confirmed
        uint64_t text_epoch = 0; // epoch the text was last read
    };

    struct LibraryStamp {
        FileStat mtime;
        uint64_t hash = 0;
        bool have = false;
    };

    bool validate_one(const std::string& name);
    bool used_fps_current(const FpEnv& used) const;
    const GenericRec* generic_rec(const std::string& name);
    void count_reuse(const std::string& name);
    std::optional<FileStat> stat_source(const std::string& key, const std::string& path);
    void insert_entry(const std::string& name, CacheEntry&& entry);
    void enforce_budget(const std::string& keep);

    Vfs* vfs_;
    std::optional<uint64_t> budget_;
    uint64_t resident_ = 0;
    uint64_t epoch_ = 0;

    std::map<std::string, std::shared_ptr<CacheEntry>> entries_;
    std::map<std::string, GenericRec> generics_;
    std::map<std::string, LibraryStamp> library_stamps_;
    std::map<std::string, LibraryStamp> pending_stamps_;

    // Per-build context.
    SourceResolver resolver_;
    const ChangeSet* changes_ = nullptr;
    PhaseClock* clock_ = nullptr;
    std::set<std::string> checking_;      // DFS in-progress, for cycle reports
    std::vector<std::string> check_path_; // DFS stack, for cycle reports
    std::set<std::string> missing_;       // unresolvable this epoch
    std::set<std::string> counted_;       // reuse counted once per build
    ValidateResult result_;
    uint64_t parsed_count_ = 0;
    uint64_t reused_count_ = 0;
    std::map<std::string, uint64_t> parse_counts_;
    std::map<std::string, uint64_t> check_counts_;
};

} // namespace m3
