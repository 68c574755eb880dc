#pragma once

#include <cstdint>
#include <string>

#include "m3/pipeline.hpp"
#include "m3/pkggen.hpp"
#include "m3/vfs.hpp"

namespace m3 {

// One benchmark scenario: a synthetic package shape plus an edit script,
// parsed from a line-oriented `key value` (or `key = value`) file.
struct BenchScenario {
    PackageParams params;        // units / decls / fanout
    uint64_t seed = 1;
    uint32_t edits = 1;          // units edited per incremental build
    EditKind edit_kind = EditKind::UsedConst;
    uint32_t repetitions = 3;
};

// Raises ScenarioInvalid on unknown keys, malformed numbers, or impossible
// combinations (zero repetitions, more edits than units).
BenchScenario parse_scenario(const std::string& text);

// Median build seconds for the four measured configurations: the standard
// compiler (fresh process, cold cache) and the compilation server (warm
// cache), each doing full builds and small incremental edits.
struct BenchResult {
    BenchScenario scenario;
    double standard_full = 0;
    double standard_incremental = 0;
    double server_full = 0;
    double server_incremental = 0;

    // standard_full / server_incremental: the paper's headline comparison.
    double speedup() const {
        return server_incremental > 0 ? standard_full / server_incremental : 0;
    }

    std::string table() const; // aligned human-readable summary
    std::string kv() const;    // machine-readable key=value lines, ms
};

// Generates packages under `workdir`, runs every configuration, and reports
// medians. Progress lines go to `sink` as they happen. The server
// configurations run against a real server on a private socket beneath
// `workdir`.
BenchResult run_bench(Vfs& vfs, const BenchScenario& scenario, const std::string& workdir,
                      const TextSink& sink);

} // namespace m3
