#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "m3/ast.hpp"

namespace m3 {

struct ExportedDecl {
    DeclKind kind;
    int64_t const_value = 0; // Const
    ProcSig sig;             // Proc
};

struct InterfaceSummary {
    std::map<std::string, ExportedDecl> decls;
};

// Summaries of every visible interface, keyed by unit name. For a module,
// the same-named interface it implements is looked up here as well.
using TypeEnv = std::map<std::string, InterfaceSummary>;

struct CheckedUnit {
    InterfaceSummary exports;
    std::map<std::string, int64_t> consts;      // evaluated constant declarations
    std::vector<std::string> globals;           // module variables in declaration order
    std::map<std::string, int64_t> global_init; // their initial values
};

// Everything is an INTEGER, so checking is mostly name classification:
// values, constants, procedures and types must be used as what they are,
// calls must match arity and a discarded result is an error. Constants are
// evaluated here with wraparound arithmetic. Modules must implement every
// procedure of their interface with a matching signature.
CheckedUnit typecheck_unit(const UnitAst& unit, const TypeEnv& env);

} // namespace m3
