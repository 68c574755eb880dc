#include "m3/fingerprint.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "m3/error.hpp"
#include "m3/fnv.hpp"

namespace m3 {

namespace {

struct Ref {
    std::string unit;
    std::string decl;
    uint64_t fp;
    bool cross_unit;
};

// Resolves the names a declaration mentions and records them in first
// occurrence order. Declarations resolve before use, so every intra-unit
// reference already has a computed fingerprint when it is looked up.
class RefWalker {
public:
    RefWalker(const UnitAst& unit, const FpEnv& env,
              const std::map<std::string, uint64_t>& own,
              const std::map<std::string, uint64_t>* paired)
        : unit_(unit), env_(env), own_(own), paired_(paired) {}

    std::vector<Ref> refs;

    void set_scope(const Decl& d) {
        scope_.clear();
        for (const auto& p : d.sig.params) scope_.insert(p);
        if (d.body)
            for (const auto& v : d.body->locals) scope_.insert(v.name);
    }

    void add_paired_sig(const std::string& name) {
        if (paired_) {
            auto it = paired_->find(name);
            if (it != paired_->end()) add(unit_.name, name, it->second, true);
        }
    }

    void walk_decl(const Decl& d) {
        switch (d.kind) {
            case DeclKind::Const:
                walk_expr(*d.value);
                break;
            case DeclKind::Var:
                if (d.value) walk_expr(*d.value);
                break;
            case DeclKind::Type:
                walk_type(*d.type);
                break;
            case DeclKind::Opaque:
                if (d.bound) resolve(*d.bound);
                break;
            case DeclKind::Reveal:
                resolve(d.reveal_target);
                walk_type(*d.type);
                break;
            case DeclKind::Proc:
                if (d.body) {
                    for (const auto& s : d.body->stmts) walk_stmt(s);
                }
                break;
        }
    }

    void walk_stmt(const Stmt& s) {
        switch (s.kind) {
            case StmtKind::Assign:
                resolve(s.target);
                walk_expr(*s.expr);
                break;
            case StmtKind::CallStmt:
                walk_expr(*s.expr);
                break;
            case StmtKind::Return:
                if (s.expr) walk_expr(*s.expr);
                break;
        }
    }

private:
    void walk_expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal:
                break;
            case ExprKind::Name:
                resolve(e.name);
                break;
            case ExprKind::Binary:
                walk_expr(*e.lhs);
                walk_expr(*e.rhs);
                break;
            case ExprKind::Call:
                resolve(e.name);
                for (const auto& a : e.args) walk_expr(*a);
                break;
        }
    }

    void walk_type(const TypeExpr& t) {
        switch (t.kind) {
            case TypeExprKind::Record:
                break;
            case TypeExprKind::Object:
                if (t.super) resolve(*t.super);
                break;
            case TypeExprKind::Named:
                resolve(t.named);
                break;
        }
    }

    void resolve(const QualIdent& q) {
        if (q.unit.empty()) {
            if (scope_.count(q.name)) return;
            auto it = own_.find(q.name);
            if (it != own_.end()) {
                add(unit_.name, q.name, it->second, false);
                return;
            }
            if (paired_) {
                auto pit = paired_->find(q.name);
                if (pit != paired_->end()) {
                    add(unit_.name, q.name, pit->second, true);
                    return;
                }
            }
            throw Error::at(Err::TypeError, q.line, q.col, "undeclared name " + q.name);
        }

        bool own_interface = unit_.kind == UnitKind::Module && q.unit == unit_.name;
        if (!own_interface &&
            std::find(unit_.imports.begin(), unit_.imports.end(), q.unit) ==
                unit_.imports.end())
            throw Error::at(Err::TypeError, q.line, q.col, "unit " + q.unit + " is not imported");

        const std::map<std::string, uint64_t>* fps = nullptr;
        if (own_interface) {
            fps = paired_;
        } else {
            auto eit = env_.find(q.unit);
            if (eit != env_.end()) fps = &eit->second;
        }
        if (!fps)
            throw Error::at(Err::MissingRefFingerprint, q.line, q.col,
                            "no fingerprints available for unit " + q.unit);
        auto dit = fps->find(q.name);
        if (dit == fps->end())
            throw Error::at(Err::UnknownImportedName, q.line, q.col,
                            q.unit + " has no declaration named " + q.name);
        add(q.unit, q.name, dit->second, true);
    }

    void add(const std::string& u, const std::string& d, uint64_t fp, bool cross) {
        if (!seen_.insert(std::make_pair(u, d)).second) return;
        refs.push_back(Ref{u, d, fp, cross});
    }

    const UnitAst& unit_;
    const FpEnv& env_;
    const std::map<std::string, uint64_t>& own_;
    const std::map<std::string, uint64_t>* paired_;
    std::set<std::pair<std::string, std::string>> seen_;
    std::set<std::string> scope_;
};

uint64_t hash_decl(const Decl& d, const std::vector<Ref>& refs) {
    Fnv1a h;
    h.update_byte(static_cast<uint8_t>(d.kind));
    h.update_byte(0);
    h.update(d.name);
    h.update_byte(0);
    for (const auto& tok : d.body_tokens) {
        h.update(tok);
        h.update_byte(0x1F);
    }
    h.update_byte(0);
    for (const auto& r : refs) {
        h.update(r.unit);
        h.update_byte(0x1F);
        h.update(r.decl);
        h.update_byte(0x1F);
        h.update_u64(r.fp);
    }
    return h.digest();
}

} // namespace

UnitFingerprints fingerprint_unit(const UnitAst& unit, const FpEnv& env) {
    UnitFingerprints out;
    const std::map<std::string, uint64_t>* paired = nullptr;
    if (unit.kind == UnitKind::Module) {
        auto it = env.find(unit.name);
        if (it != env.end()) paired = &it->second;
    }

    auto merge_used = [&](const std::vector<Ref>& refs) {
        for (const auto& r : refs)
            if (r.cross_unit) out.used[r.unit][r.decl] = r.fp;
    };

    for (const auto& d : unit.decls) {
        RefWalker w(unit, env, out.decls, paired);
        if (d.kind == DeclKind::Proc && d.body) {
            // Implementing a signature ties the implementation to it, so a
            // signature change recompiles the module even when the module
            // text is untouched.
            w.add_paired_sig(d.name);
            w.set_scope(d);
        }
        w.walk_decl(d);
        out.decls[d.name] = hash_decl(d, w.refs);
        merge_used(w.refs);
    }

    if (unit.has_init) {
        RefWalker w(unit, env, out.decls, paired);
        for (const auto& s : unit.init_stmts) w.walk_stmt(s);
        merge_used(w.refs);
    }
    return out;
}

} // namespace m3
