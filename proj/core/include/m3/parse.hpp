#pragma once

#include <string>
#include <vector>

#include "m3/ast.hpp"
#include "m3/lexer.hpp"

namespace m3 {

UnitAst parse_tokens(const std::vector<Token>& toks);
UnitAst parse_unit(const std::string& source);

// Expands INTERFACE I = G(A, B) END I. against the text of G's generic
// interface. Parameter names are substituted token-wise and the arguments are
// added to the expanded interface's imports.
UnitAst instantiate_generic(const UnitAst& inst, const std::string& generic_source);

// Prints a unit back to source. Reparsing the output yields identical
// declaration fingerprints, which the tests rely on.
std::string canonical_source(const UnitAst& unit);

} // namespace m3
