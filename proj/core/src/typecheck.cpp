#include "m3/typecheck.hpp"

#include <algorithm>

#include "m3/error.hpp"

namespace m3 {

namespace {

int64_t wrap_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

enum class NameClass { Value, Const, Proc, Type };

struct Resolved {
    NameClass cls;
    int64_t const_value = 0;
    ProcSig sig;
    bool assignable = false;
};

class Checker {
public:
    Checker(const UnitAst& unit, const TypeEnv& env) : unit_(unit), env_(env) {
        if (unit.kind == UnitKind::Module) {
            auto it = env.find(unit.name);
            if (it != env.end()) paired_ = &it->second;
        }
    }

    CheckedUnit run() {
        for (const auto& d : unit_.decls) check_decl(d);
        check_implementations();
        if (unit_.has_init) {
            scope_.clear();
            in_init_ = true;
            for (const auto& s : unit_.init_stmts) check_stmt(s);
        }
        return std::move(out_);
    }

private:
    [[noreturn]] static void err(int line, int col, const std::string& msg) {
        throw Error::at(Err::TypeError, line, col, msg);
    }

    void check_decl(const Decl& d) {
        switch (d.kind) {
            case DeclKind::Const: {
                int64_t v = eval_const(*d.value);
                out_.consts[d.name] = v;
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Const, v, {}};
                break;
            }
            case DeclKind::Var: {
                int64_t v = d.value ? eval_const(*d.value) : 0;
                out_.globals.push_back(d.name);
                out_.global_init[d.name] = v;
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Var, 0, {}};
                break;
            }
            case DeclKind::Type:
                check_type_expr(*d.type);
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Type, 0, {}};
                break;
            case DeclKind::Opaque:
                if (d.bound) require_type(*d.bound);
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Opaque, 0, {}};
                break;
            case DeclKind::Reveal: {
                DeclKind target = decl_kind_of(d.reveal_target);
                if (target != DeclKind::Opaque)
                    err(d.reveal_target.line, d.reveal_target.col,
                        "REVEAL target " + d.reveal_target.spelled() + " is not an opaque type");
                check_type_expr(*d.type);
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Reveal, 0, {}};
                break;
            }
            case DeclKind::Proc: {
                out_.exports.decls[d.name] = ExportedDecl{DeclKind::Proc, 0, d.sig};
                if (d.body) check_proc_body(d);
                break;
            }
        }
        own_[d.name] = &d;
    }

    void check_proc_body(const Decl& d) {
        if (paired_) {
            auto it = paired_->decls.find(d.name);
            if (it != paired_->decls.end() && it->second.kind == DeclKind::Proc) {
                const ProcSig& want = it->second.sig;
                if (want.params.size() != d.sig.params.size() ||
                    want.returns_value != d.sig.returns_value)
                    err(d.line, d.col,
                        d.name + " is implemented with a different signature than " + unit_.name +
                            " declares");
            }
        }

        scope_.clear();
        for (const auto& p : d.sig.params) scope_[p] = true;
        for (const auto& v : d.body->locals) {
            if (!scope_.emplace(v.name, false).second)
                err(v.line, 0, "local " + v.name + " collides with another local or parameter");
        }

        in_init_ = false;
        current_ = &d;
        for (const auto& s : d.body->stmts) check_stmt(s);

        bool ends_with_value_return = !d.body->stmts.empty() &&
                                      d.body->stmts.back().kind == StmtKind::Return &&
                                      d.body->stmts.back().expr != nullptr;
        if (d.sig.returns_value && !ends_with_value_return)
            err(d.line, d.col, d.name + " must end with RETURN of a value");
        current_ = nullptr;
    }

    void check_implementations() {
        if (unit_.kind != UnitKind::Module || !paired_) return;
        for (const auto& [name, exp] : paired_->decls) {
            if (exp.kind != DeclKind::Proc) continue;
            auto it = own_.find(name);
            if (it == own_.end() || it->second->kind != DeclKind::Proc || !it->second->body)
                throw Error::at(Err::TypeError, unit_.line, 0,
                                "procedure " + name + " of interface " + unit_.name +
                                    " is not implemented");
        }
    }

    void check_stmt(const Stmt& s) {
        switch (s.kind) {
            case StmtKind::Assign: {
                // Right side first: `x := x` with an unassigned x must fail.
                check_expr(*s.expr);
                Resolved r = resolve(s.target, false, true);
                if (!r.assignable)
                    err(s.target.line, s.target.col,
                        "cannot assign to " + s.target.spelled());
                break;
            }
            case StmtKind::CallStmt: {
                const Expr& call = *s.expr;
                Resolved r = resolve(call.name);
                check_call(call, r);
                if (r.sig.returns_value)
                    err(call.line, call.col,
                        "result of " + call.name.spelled() + " is discarded");
                break;
            }
            case StmtKind::Return: {
                if (in_init_) err(s.line, s.col, "RETURN outside a procedure");
                bool wants_value = current_->sig.returns_value;
                if (wants_value && !s.expr)
                    err(s.line, s.col, current_->name + " must RETURN a value");
                if (!wants_value && s.expr)
                    err(s.line, s.col, current_->name + " returns no value");
                if (s.expr) check_expr(*s.expr);
                break;
            }
        }
    }

    void check_expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal:
                break;
            case ExprKind::Name: {
                Resolved r = resolve(e.name);
                if (r.cls == NameClass::Type)
                    err(e.line, e.col, e.name.spelled() + " is a type, not a value");
                if (r.cls == NameClass::Proc)
                    err(e.line, e.col, e.name.spelled() + " is a procedure, not a value");
                break;
            }
            case ExprKind::Binary:
                check_expr(*e.lhs);
                check_expr(*e.rhs);
                break;
            case ExprKind::Call: {
                Resolved r = resolve(e.name);
                check_call(e, r);
                if (!r.sig.returns_value)
                    err(e.line, e.col, e.name.spelled() + " returns no value");
                break;
            }
        }
    }

    void check_call(const Expr& call, const Resolved& r) {
        if (r.cls != NameClass::Proc)
            err(call.line, call.col, call.name.spelled() + " is not a procedure");
        if (call.args.size() != r.sig.params.size())
            err(call.line, call.col,
                call.name.spelled() + " takes " + std::to_string(r.sig.params.size()) +
                    " arguments, got " + std::to_string(call.args.size()));
        for (const auto& a : call.args) check_expr(*a);
    }

    int64_t eval_const(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal:
                return e.value;
            case ExprKind::Name: {
                Resolved r = resolve(e.name);
                if (r.cls != NameClass::Const)
                    err(e.line, e.col,
                        e.name.spelled() + " is not a constant");
                return r.const_value;
            }
            case ExprKind::Binary: {
                int64_t a = eval_const(*e.lhs);
                int64_t b = eval_const(*e.rhs);
                switch (e.op) {
                    case BinOp::Add: return wrap_add(a, b);
                    case BinOp::Sub: return wrap_sub(a, b);
                    case BinOp::Mul: return wrap_mul(a, b);
                }
                return 0;
            }
            case ExprKind::Call:
                err(e.line, e.col, "calls are not allowed in constant expressions");
        }
        return 0;
    }

    DeclKind decl_kind_of(const QualIdent& q) {
        Resolved r = resolve(q, true);
        switch (r.cls) {
            case NameClass::Const: return DeclKind::Const;
            case NameClass::Proc: return DeclKind::Proc;
            case NameClass::Value: return DeclKind::Var;
            case NameClass::Type: break;
        }
        // Types and opaques both classify as Type; distinguish them again.
        return resolved_is_opaque_ ? DeclKind::Opaque : DeclKind::Type;
    }

    void require_type(const QualIdent& q) {
        Resolved r = resolve(q);
        if (r.cls != NameClass::Type)
            err(q.line, q.col, q.spelled() + " is not a type");
    }

    void check_type_expr(const TypeExpr& t) {
        switch (t.kind) {
            case TypeExprKind::Record:
                break;
            case TypeExprKind::Object:
                if (t.super) require_type(*t.super);
                break;
            case TypeExprKind::Named:
                require_type(t.named);
                break;
        }
    }

    Resolved from_decl(const Decl& d) {
        resolved_is_opaque_ = d.kind == DeclKind::Opaque;
        switch (d.kind) {
            case DeclKind::Const:
                return Resolved{NameClass::Const, out_.consts.at(d.name), {}, false};
            case DeclKind::Var:
                return Resolved{NameClass::Value, 0, {}, true};
            case DeclKind::Proc:
                return Resolved{NameClass::Proc, 0, d.sig, false};
            case DeclKind::Type:
            case DeclKind::Opaque:
            case DeclKind::Reveal:
                return Resolved{NameClass::Type, 0, {}, false};
        }
        return Resolved{NameClass::Type, 0, {}, false};
    }

    Resolved from_export(const ExportedDecl& e) {
        resolved_is_opaque_ = e.kind == DeclKind::Opaque;
        switch (e.kind) {
            case DeclKind::Const:
                return Resolved{NameClass::Const, e.const_value, {}, false};
            case DeclKind::Proc:
                return Resolved{NameClass::Proc, 0, e.sig, false};
            case DeclKind::Var:
                // Interfaces export no variables; Var appears only in module
                // summaries, which are never imported.
                return Resolved{NameClass::Value, 0, {}, false};
            case DeclKind::Type:
            case DeclKind::Opaque:
            case DeclKind::Reveal:
                return Resolved{NameClass::Type, 0, {}, false};
        }
        return Resolved{NameClass::Type, 0, {}, false};
    }

    Resolved resolve(const QualIdent& q, bool allow_reveal_target = false,
                     bool as_assign_target = false) {
        (void)allow_reveal_target;
        if (q.unit.empty()) {
            auto sit = scope_.find(q.name);
            if (sit != scope_.end()) {
                // Every local must be written before it is first read; this keeps
                // execution independent of whatever happens to be in its frame slot.
                if (as_assign_target)
                    sit->second = true;
                else if (!sit->second)
                    err(q.line, q.col, "local " + q.name + " is read before it is assigned");
                resolved_is_opaque_ = false;
                return Resolved{NameClass::Value, 0, {}, true};
            }
            auto it = own_.find(q.name);
            if (it != own_.end()) return from_decl(*it->second);
            if (paired_) {
                auto pit = paired_->decls.find(q.name);
                if (pit != paired_->decls.end()) return from_export(pit->second);
            }
            err(q.line, q.col, "undeclared name " + q.name);
        }

        const InterfaceSummary* summary = nullptr;
        if (unit_.kind == UnitKind::Module && q.unit == unit_.name) {
            summary = paired_;
        } else if (std::find(unit_.imports.begin(), unit_.imports.end(), q.unit) !=
                   unit_.imports.end()) {
            auto it = env_.find(q.unit);
            if (it != env_.end()) summary = &it->second;
        } else {
            err(q.line, q.col, "unit " + q.unit + " is not imported");
        }
        if (!summary)
            err(q.line, q.col, "unit " + q.unit + " is not available");
        auto dit = summary->decls.find(q.name);
        if (dit == summary->decls.end())
            throw Error::at(Err::UnknownImportedName, q.line, q.col,
                            q.unit + " has no declaration named " + q.name);
        return from_export(dit->second);
    }

    const UnitAst& unit_;
    const TypeEnv& env_;
    const InterfaceSummary* paired_ = nullptr;
    CheckedUnit out_;
    std::map<std::string, const Decl*> own_;
    std::map<std::string, bool> scope_; // name -> definitely assigned

    const Decl* current_ = nullptr;
    bool in_init_ = false;
    bool resolved_is_opaque_ = false;
};

} // namespace

CheckedUnit typecheck_unit(const UnitAst& unit, const TypeEnv& env) {
    return Checker(unit, env).run();
}

} // namespace m3
