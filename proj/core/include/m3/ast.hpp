#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "m3/source.hpp"

namespace m3 {

// Possibly-qualified name. Empty unit means the name is unqualified and
// resolves through normal scoping (params, locals, own unit, paired
// interface).
struct QualIdent {
    std::string unit;
    std::string name;
    int line = 0;
    int col = 0;

    std::string spelled() const { return unit.empty() ? name : unit + "." + name; }
};

enum class ExprKind : uint8_t { Literal, Name, Binary, Call };
enum class BinOp : uint8_t { Add, Sub, Mul };

struct Expr {
    ExprKind kind;
    int line = 0;
    int col = 0;

    int64_t value = 0;                       // Literal
    QualIdent name;                          // Name, Call target
    BinOp op = BinOp::Add;                   // Binary
    std::unique_ptr<Expr> lhs, rhs;          // Binary
    std::vector<std::unique_ptr<Expr>> args; // Call
};

enum class StmtKind : uint8_t { Assign, CallStmt, Return };

struct Stmt {
    StmtKind kind;
    int line = 0;
    int col = 0;

    QualIdent target;           // Assign
    std::unique_ptr<Expr> expr; // Assign rhs, Return value (null for bare RETURN), CallStmt call
};

enum class TypeExprKind : uint8_t { Record, Object, Named };

struct FieldDecl {
    std::string name;
    int line = 0;
};

struct TypeExpr {
    TypeExprKind kind;
    std::vector<FieldDecl> fields;  // Record, Object
    std::optional<QualIdent> super; // Object supertype, absent for root objects
    QualIdent named;                // Named
};

// Reveal declarations are stored under the spelled target plus this suffix so
// they occupy a distinct slot in the declaration map of their unit.
inline constexpr const char* kRevealSuffix = "%reveal";

enum class DeclKind : uint8_t { Const, Type, Opaque, Reveal, Var, Proc };

struct ProcSig {
    std::vector<std::string> params; // every param and return is INTEGER
    bool returns_value = false;

    bool operator==(const ProcSig&) const = default;
};

struct LocalVar {
    std::string name;
    int line = 0;
};

struct ProcBody {
    std::vector<LocalVar> locals;
    std::vector<Stmt> stmts;
};

struct Decl {
    DeclKind kind;
    std::string name;
    int line = 0;
    int col = 0;

    std::unique_ptr<Expr> value;       // Const (required), Var initializer (optional)
    std::unique_ptr<TypeExpr> type;    // Type definition, Reveal structure
    std::optional<QualIdent> bound;    // Opaque supertype bound, absent means ANY
    QualIdent reveal_target;           // Reveal
    ProcSig sig;                       // Proc
    std::unique_ptr<ProcBody> body;    // Proc implementations (modules only)

    // Token spellings of the declaration body, used for fingerprinting. The
    // name itself is excluded; positions are not included.
    std::vector<std::string> body_tokens;
};

struct UnitAst {
    UnitKind kind = UnitKind::Interface;
    std::string name;
    int line = 0;
    std::vector<std::string> imports;

    // GENERIC INTERFACE G(P1, P2)
    std::vector<std::string> generic_params;

    // INTERFACE I = G(A, B) END I.
    bool is_instantiation = false;
    std::string generic_name;
    std::vector<std::string> generic_args;

    std::vector<Decl> decls;

    // Module body between BEGIN and END, run at image startup.
    bool has_init = false;
    std::vector<Stmt> init_stmts;
    std::vector<std::string> init_tokens;

    const Decl* find_decl(const std::string& name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d;
        return nullptr;
    }
};

} // namespace m3
