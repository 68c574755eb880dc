#include "m3/lower.hpp"

#include <map>

#include "m3/error.hpp"

namespace m3 {

namespace {

class Lowerer {
public:
    Lowerer(const UnitAst& unit, const CheckedUnit& checked, const TypeEnv& env)
        : unit_(unit), checked_(checked), env_(env) {
        if (auto it = env.find(unit.name); it != env.end()) paired_ = &it->second;
    }

    UnitIr run() {
        ir_.unit_name = unit_.name;
        if (unit_.kind != UnitKind::Module) return std::move(ir_);

        for (const auto& g : checked_.globals)
            ir_.globals.emplace_back(unit_.name + "." + g, checked_.global_init.at(g));
        for (const auto& d : unit_.decls) {
            if (d.kind == DeclKind::Proc && d.body) lower_proc(d);
        }
        if (unit_.has_init) {
            IrEvent e{IrOp::InitBegin, unit_.line};
            e.name = unit_.name + ".__init";
            ir_.events.push_back(std::move(e));
            scope_.clear();
            for (const auto& s : unit_.init_stmts) lower_stmt(s);
            ir_.events.push_back(IrEvent{IrOp::InitEnd, unit_.line});
        }
        return std::move(ir_);
    }

private:
    void lower_proc(const Decl& d) {
        IrEvent begin{IrOp::BeginProc, d.line};
        begin.name = unit_.name + "." + d.name;
        begin.n_params = static_cast<uint32_t>(d.sig.params.size());
        begin.n_locals = static_cast<uint32_t>(d.body->locals.size());
        begin.returns_value = d.sig.returns_value;
        begin.exported = is_exported(d.name);
        ir_.events.push_back(std::move(begin));

        scope_.clear();
        for (uint32_t i = 0; i < d.sig.params.size(); i++)
            scope_[d.sig.params[i]] = IrSlot{IrSlot::Param, i};
        for (uint32_t i = 0; i < d.body->locals.size(); i++) {
            scope_[d.body->locals[i].name] = IrSlot{IrSlot::Local, i};
            IrEvent e{IrOp::DeclareLocal, d.body->locals[i].line};
            e.name = d.body->locals[i].name;
            ir_.events.push_back(std::move(e));
        }

        bool explicit_exit = false;
        for (const auto& s : d.body->stmts) {
            lower_stmt(s);
            if (s.kind == StmtKind::Return) explicit_exit = true;
        }
        if (!explicit_exit) {
            IrEvent e{IrOp::ExitProc, d.line};
            ir_.events.push_back(std::move(e));
        }
        ir_.events.push_back(IrEvent{IrOp::EndProc, d.line});
    }

    bool is_exported(const std::string& name) const {
        // A module without an interface is a program; its procedures are its
        // public face. One with an interface exports what the interface lists.
        if (!paired_) return true;
        auto it = paired_->decls.find(name);
        return it != paired_->decls.end() && it->second.kind == DeclKind::Proc;
    }

    void lower_stmt(const Stmt& s) {
        switch (s.kind) {
            case StmtKind::Assign: {
                lower_expr(*s.expr);
                auto slot = scope_.find(s.target.name);
                if (s.target.unit.empty() && slot != scope_.end()) {
                    IrEvent e{IrOp::Store, s.line};
                    e.slot = slot->second;
                    ir_.events.push_back(std::move(e));
                } else {
                    IrEvent e{IrOp::StoreGlobal, s.line};
                    e.name = unit_.name + "." + s.target.name;
                    ir_.events.push_back(std::move(e));
                }
                break;
            }
            case StmtKind::CallStmt:
                lower_expr(*s.expr);
                break;
            case StmtKind::Return:
                if (s.expr) lower_expr(*s.expr);
                ir_.events.push_back(IrEvent{IrOp::ExitProc, s.line});
                break;
        }
    }

    void lower_expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal: {
                IrEvent ev{IrOp::Literal, e.line};
                ev.value = e.value;
                ir_.events.push_back(std::move(ev));
                break;
            }
            case ExprKind::Name:
                lower_name(e);
                break;
            case ExprKind::Binary: {
                lower_expr(*e.lhs);
                lower_expr(*e.rhs);
                IrOp op = e.op == BinOp::Add ? IrOp::Add
                        : e.op == BinOp::Sub ? IrOp::Sub
                                             : IrOp::Mul;
                ir_.events.push_back(IrEvent{op, e.line});
                break;
            }
            case ExprKind::Call:
                lower_call(e);
                break;
        }
    }

    void lower_name(const Expr& e) {
        const QualIdent& q = e.name;
        if (q.unit.empty()) {
            if (auto it = scope_.find(q.name); it != scope_.end()) {
                IrEvent ev{IrOp::Load, e.line};
                ev.slot = it->second;
                ir_.events.push_back(std::move(ev));
                return;
            }
            if (auto it = checked_.consts.find(q.name); it != checked_.consts.end()) {
                push_literal(it->second, e.line);
                return;
            }
            if (checked_.global_init.count(q.name)) {
                IrEvent ev{IrOp::LoadGlobal, e.line};
                ev.name = unit_.name + "." + q.name;
                ir_.events.push_back(std::move(ev));
                return;
            }
            if (paired_) {
                auto it = paired_->decls.find(q.name);
                if (it != paired_->decls.end() && it->second.kind == DeclKind::Const) {
                    push_literal(it->second.const_value, e.line);
                    return;
                }
            }
        } else {
            const InterfaceSummary* s = summary_of(q.unit);
            if (s) {
                auto it = s->decls.find(q.name);
                if (it != s->decls.end() && it->second.kind == DeclKind::Const) {
                    push_literal(it->second.const_value, e.line);
                    return;
                }
            }
        }
        throw Error::at(Err::TypeError, e.line, e.col,
                        "cannot lower " + q.spelled() + " as a value");
    }

    void lower_call(const Expr& e) {
        for (const auto& a : e.args) lower_expr(*a);

        const QualIdent& q = e.name;
        std::string target_unit;
        const ProcSig* sig = nullptr;
        if (q.unit.empty() || q.unit == unit_.name) {
            target_unit = unit_.name;
            if (q.unit.empty()) {
                const Decl* own = unit_.find_decl(q.name);
                if (own && own->kind == DeclKind::Proc) sig = &own->sig;
            }
            if (!sig && paired_) {
                auto it = paired_->decls.find(q.name);
                if (it != paired_->decls.end() && it->second.kind == DeclKind::Proc)
                    sig = &it->second.sig;
            }
        } else {
            target_unit = q.unit;
            const InterfaceSummary* s = summary_of(q.unit);
            if (s) {
                auto it = s->decls.find(q.name);
                if (it != s->decls.end() && it->second.kind == DeclKind::Proc)
                    sig = &it->second.sig;
            }
        }
        if (!sig)
            throw Error::at(Err::TypeError, e.line, e.col,
                            "cannot lower call of " + q.spelled());

        IrEvent ev{IrOp::Call, e.line};
        ev.name = target_unit + "." + q.name;
        ev.n_args = static_cast<uint32_t>(e.args.size());
        ev.returns_value = sig->returns_value;
        ev.callee_in_unit = target_unit == unit_.name;
        ir_.events.push_back(std::move(ev));
    }

    void push_literal(int64_t v, int line) {
        IrEvent ev{IrOp::Literal, line};
        ev.value = v;
        ir_.events.push_back(std::move(ev));
    }

    const InterfaceSummary* summary_of(const std::string& name) const {
        auto it = env_.find(name);
        return it == env_.end() ? nullptr : &it->second;
    }

    const UnitAst& unit_;
    const CheckedUnit& checked_;
    const TypeEnv& env_;
    const InterfaceSummary* paired_ = nullptr;
    UnitIr ir_;
    std::map<std::string, IrSlot> scope_;
};

} // namespace

UnitIr lower_unit(const UnitAst& unit, const CheckedUnit& checked, const TypeEnv& env) {
    return Lowerer(unit, checked, env).run();
}

} // namespace m3
