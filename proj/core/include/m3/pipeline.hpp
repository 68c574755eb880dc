#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "m3/cache.hpp"
#include "m3/phase.hpp"
#include "m3/vfs.hpp"

namespace m3 {

// A package directory is declared by an `m3package` file:
//
//     m3package
//     # comment
//     name Arith
//     unit Arith.i3
//     unit Arith.m3
//     library ../libm3
//     entry Main.Main
//
// `unit` paths are relative to the package directory; `library` names another
// package directory whose interfaces may be imported and whose objects join
// the link. A package with an `entry` links to an executable image.
struct PackageManifest {
    std::string name;
    std::vector<std::string> units;
    std::vector<std::string> libraries;
    std::vector<std::string> options;
    std::string entry;
};

// Raises ManifestError on bad syntax, a missing header line, duplicate
// name/entry, or a unit path whose extension names no unit kind.
PackageManifest parse_manifest(const std::string& text);

// Receives diagnostic text as the build produces it.
using TextSink = std::function<void(std::string_view)>;

// Drives one package build end to end against a (possibly warm) interface
// cache: change detection, cache validation, dirty-set computation, per-unit
// compilation, prelink and link. Failures are streamed to the sink and
// reported via the `failed` marker; the build state file and library stamps
// are only updated by successful builds.
class BuildExecutor {
public:
    BuildExecutor(Vfs& vfs, InterfaceCache& cache) : vfs_(&vfs), cache_(&cache) {}

    PhaseReport build(const std::string& package_dir, const std::vector<std::string>& options,
                      const TextSink& sink);

private:
    Vfs* vfs_;
    InterfaceCache* cache_;
};

} // namespace m3
