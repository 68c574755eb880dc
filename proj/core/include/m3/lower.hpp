#pragma once

#include "m3/ast.hpp"
#include "m3/ir.hpp"
#include "m3/typecheck.hpp"

namespace m3 {

// Flattens a checked module into the code event stream. Constants fold to
// literals (imported ones included), names become slot or global accesses,
// and calls carry their mangled symbol plus whether the callee lives in this
// unit. Interfaces produce an empty stream.
UnitIr lower_unit(const UnitAst& unit, const CheckedUnit& checked, const TypeEnv& env);

} // namespace m3
