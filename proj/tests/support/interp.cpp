#include "interp.hpp"

#include <set>
#include <stdexcept>

namespace m3::test {

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

} // namespace

void AstInterp::add_interface(const std::string& name, const InterfaceSummary& summary) {
    ifaces_[name] = summary;
}

void AstInterp::add_module(std::shared_ptr<const UnitAst> ast, CheckedUnit checked) {
    std::string name = ast->name;
    for (const auto& g : checked.globals) {
        auto it = checked.global_init.find(g);
        globals_[name + "." + g] = it == checked.global_init.end() ? 0 : it->second;
    }
    mods_[name] = Mod{std::move(ast), std::move(checked)};
}

const AstInterp::Mod& AstInterp::module_for(const std::string& name) const {
    auto it = mods_.find(name);
    if (it == mods_.end())
        throw std::runtime_error("interp: no module " + name);
    return it->second;
}

void AstInterp::tick() {
    if (++steps_ > 100'000'000)
        throw std::runtime_error("interp: step limit exceeded");
}

int64_t AstInterp::run(const std::vector<std::string>& init_order, const std::string& entry,
                       const std::vector<int64_t>& args) {
    steps_ = 0;
    for (const auto& name : init_order) {
        const Mod& m = module_for(name);
        Frame f;
        int64_t ret = 0;
        for (const auto& s : m.ast->init_stmts)
            if (exec(m, f, s, ret)) break;
    }
    size_t dot = entry.find('.');
    if (dot == std::string::npos)
        throw std::runtime_error("interp: entry must be Module.Proc: " + entry);
    return call_proc(entry.substr(0, dot), entry.substr(dot + 1), args);
}

int64_t AstInterp::global(const std::string& mangled) const {
    auto it = globals_.find(mangled);
    if (it == globals_.end())
        throw std::runtime_error("interp: no global " + mangled);
    return it->second;
}

int64_t AstInterp::call_proc(const std::string& module, const std::string& proc,
                             const std::vector<int64_t>& args) {
    tick();
    const Mod& m = module_for(module);
    const Decl* d = m.ast->find_decl(proc);
    if (!d || d->kind != DeclKind::Proc || !d->body)
        throw std::runtime_error("interp: no procedure body " + module + "." + proc);
    if (d->sig.params.size() != args.size())
        throw std::runtime_error("interp: arity mismatch calling " + module + "." + proc);

    Frame f;
    for (size_t i = 0; i < args.size(); i++) f.vars[d->sig.params[i]] = args[i];
    for (const auto& l : d->body->locals) f.locals.insert(l.name);

    int64_t ret = 0;
    for (const auto& s : d->body->stmts)
        if (exec(m, f, s, ret)) return ret;
    return 0;
}

bool AstInterp::exec(const Mod& m, Frame& f, const Stmt& s, int64_t& ret) {
    tick();
    switch (s.kind) {
        case StmtKind::Assign: {
            int64_t v = eval(m, f, *s.expr);
            const QualIdent& q = s.target;
            if (q.unit.empty() && (f.vars.count(q.name) || f.locals.count(q.name))) {
                f.vars[q.name] = v;
                return false;
            }
            const std::string& unit = q.unit.empty() ? m.ast->name : q.unit;
            auto it = globals_.find(unit + "." + q.name);
            if (it == globals_.end())
                throw std::runtime_error("interp: assign to unknown " + q.spelled());
            it->second = v;
            return false;
        }
        case StmtKind::CallStmt: {
            eval(m, f, *s.expr);
            return false;
        }
        case StmtKind::Return: {
            ret = s.expr ? eval(m, f, *s.expr) : 0;
            return true;
        }
    }
    return false;
}

int64_t AstInterp::eval(const Mod& m, Frame& f, const Expr& e) {
    tick();
    switch (e.kind) {
        case ExprKind::Literal:
            return e.value;
        case ExprKind::Binary: {
            int64_t a = eval(m, f, *e.lhs);
            int64_t b = eval(m, f, *e.rhs);
            switch (e.op) {
                case BinOp::Add: return wrap_add(a, b);
                case BinOp::Sub: return wrap_sub(a, b);
                case BinOp::Mul: return wrap_mul(a, b);
            }
            return 0;
        }
        case ExprKind::Name: {
            const QualIdent& q = e.name;
            if (q.unit.empty()) {
                auto vit = f.vars.find(q.name);
                if (vit != f.vars.end()) return vit->second;
                auto cit = m.checked.consts.find(q.name);
                if (cit != m.checked.consts.end()) return cit->second;
                auto git = globals_.find(m.ast->name + "." + q.name);
                if (git != globals_.end()) return git->second;
                auto iit = ifaces_.find(m.ast->name);
                if (iit != ifaces_.end()) {
                    auto dit = iit->second.decls.find(q.name);
                    if (dit != iit->second.decls.end() && dit->second.kind == DeclKind::Const)
                        return dit->second.const_value;
                }
                throw std::runtime_error("interp: unknown name " + q.name);
            }
            if (q.unit == m.ast->name) {
                auto cit = m.checked.consts.find(q.name);
                if (cit != m.checked.consts.end()) return cit->second;
                auto git = globals_.find(q.unit + "." + q.name);
                if (git != globals_.end()) return git->second;
                throw std::runtime_error("interp: unknown name " + q.spelled());
            }
            auto iit = ifaces_.find(q.unit);
            if (iit == ifaces_.end())
                throw std::runtime_error("interp: unknown unit " + q.unit);
            auto dit = iit->second.decls.find(q.name);
            if (dit == iit->second.decls.end() || dit->second.kind != DeclKind::Const)
                throw std::runtime_error("interp: not a constant: " + q.spelled());
            return dit->second.const_value;
        }
        case ExprKind::Call: {
            const QualIdent& q = e.name;
            std::vector<int64_t> args;
            args.reserve(e.args.size());
            for (const auto& a : e.args) args.push_back(eval(m, f, *a));
            const std::string& unit = q.unit.empty() ? m.ast->name : q.unit;
            return call_proc(unit, q.name, args);
        }
    }
    return 0;
}

} // namespace m3::test
