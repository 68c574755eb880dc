#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "m3/ast.hpp"

namespace m3 {

// Declaration fingerprints of each visible unit, keyed by unit name. For a
// module this must contain every imported interface plus the same-named
// interface it implements, if one exists.
using FpEnv = std::map<std::string, std::map<std::string, uint64_t>>;

struct UnitFingerprints {
    // Every declaration of the unit, in its own namespace.
    std::map<std::string, uint64_t> decls;
    // Directly referenced declarations of other units, with the fingerprint
    // they had when this unit was processed. Transitive dependencies are
    // already folded into those fingerprints, so direct references suffice
    // to decide recompilation.
    FpEnv used;
};

// Computes fingerprints for all declarations of a unit. A declaration's
// fingerprint covers its kind, name, token spelling, and the fingerprint of
// every declaration it references, so any change in the transitive dependency
// chain shows up here. Unresolvable names raise TypeError or
// UnknownImportedName; a unit missing from env raises MissingRefFingerprint.
UnitFingerprints fingerprint_unit(const UnitAst& unit, const FpEnv& env);

} // namespace m3
