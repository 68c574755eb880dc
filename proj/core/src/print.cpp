#include <sstream>

#include "m3/parse.hpp"

namespace m3 {

namespace {

// Declarations are reprinted from their recorded token spellings, so the
// output re-lexes to the exact token stream the fingerprints were computed
// from, redundant parentheses included.
void print_tokens(std::ostream& out, const std::vector<std::string>& toks) {
    for (size_t i = 0; i < toks.size(); i++) {
        if (i > 0) out << ' ';
        out << toks[i];
    }
}

} // namespace

std::string canonical_source(const UnitAst& unit) {
    std::ostringstream out;
    if (unit.is_instantiation) {
        out << "INTERFACE " << unit.name << " = " << unit.generic_name << "(";
        for (size_t i = 0; i < unit.generic_args.size(); i++) {
            if (i > 0) out << ", ";
            out << unit.generic_args[i];
        }
        out << ") END " << unit.name << ".\n";
        return out.str();
    }

    switch (unit.kind) {
        case UnitKind::Interface:
            out << "INTERFACE " << unit.name << ";\n";
            break;
        case UnitKind::Module:
            out << "MODULE " << unit.name << ";\n";
            break;
        case UnitKind::GenericInterface:
            out << "GENERIC INTERFACE " << unit.name << "(";
            for (size_t i = 0; i < unit.generic_params.size(); i++) {
                if (i > 0) out << ", ";
                out << unit.generic_params[i];
            }
            out << ");\n";
            break;
    }
    if (!unit.imports.empty()) {
        out << "IMPORT ";
        for (size_t i = 0; i < unit.imports.size(); i++) {
            if (i > 0) out << ", ";
            out << unit.imports[i];
        }
        out << ";\n";
    }
    for (const auto& d : unit.decls) {
        print_tokens(out, d.body_tokens);
        out << '\n';
    }
    if (unit.has_init) {
        out << "BEGIN\n";
        print_tokens(out, unit.init_tokens);
        out << '\n';
    }
    out << "END " << unit.name << ".\n";
    return out.str();
}

} // namespace m3
