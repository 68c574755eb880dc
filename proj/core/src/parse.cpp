#include "m3/parse.hpp"

#include <algorithm>
#include <stdexcept>

#include "m3/error.hpp"

namespace m3 {

namespace {

class Parser {
public:
    explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

    UnitAst parse() {
        UnitAst unit;
        if (at(Tok::KwGeneric)) {
            next();
            expect(Tok::KwInterface);
            unit.kind = UnitKind::GenericInterface;
            parse_generic_header(unit);
            parse_imports(unit);
            parse_interface_decls(unit);
            parse_unit_end(unit);
        } else if (at(Tok::KwInterface)) {
            next();
            unit.kind = UnitKind::Interface;
            unit.line = cur().line;
            unit.name = expect_ident();
            if (at(Tok::Eq)) {
                next();
                parse_instantiation(unit);
            } else {
                expect(Tok::Semi);
                parse_imports(unit);
                parse_interface_decls(unit);
                parse_unit_end(unit);
            }
        } else if (at(Tok::KwModule)) {
            next();
            unit.kind = UnitKind::Module;
            unit.line = cur().line;
            unit.name = expect_ident();
            expect(Tok::Semi);
            parse_imports(unit);
            parse_module_decls(unit);
            if (at(Tok::KwBegin)) {
                next();
                unit.has_init = true;
                size_t start = i_;
                unit.init_stmts = parse_stmts();
                unit.init_tokens = span_texts(start);
            }
            parse_unit_end(unit);
        } else {
            fail("expected INTERFACE, MODULE or GENERIC");
        }
        if (!at(Tok::Eof)) fail("trailing text after unit");
        return unit;
    }

private:
    const std::vector<Token>& toks_;
    size_t i_ = 0;
    std::string unit_name_;

    const Token& cur() const { return toks_[i_]; }
    bool at(Tok k) const { return cur().kind == k; }
    void next() { if (i_ + 1 < toks_.size()) i_++; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error::at(Err::SyntaxError, cur().line, cur().col, msg);
    }

    void expect(Tok k) {
        if (!at(k))
            fail(std::string("expected ") + tok_name(k) + ", got " + tok_name(cur().kind));
        next();
    }

    std::string expect_ident() {
        if (!at(Tok::Ident)) fail(std::string("expected identifier, got ") + tok_name(cur().kind));
        std::string s = cur().text;
        next();
        return s;
    }

    void parse_generic_header(UnitAst& unit) {
        unit.line = cur().line;
        unit.name = expect_ident();
        expect(Tok::LParen);
        unit.generic_params.push_back(expect_ident());
        while (at(Tok::Comma)) {
            next();
            unit.generic_params.push_back(expect_ident());
        }
        expect(Tok::RParen);
        expect(Tok::Semi);
        for (size_t a = 0; a < unit.generic_params.size(); a++)
            for (size_t b = a + 1; b < unit.generic_params.size(); b++)
                if (unit.generic_params[a] == unit.generic_params[b])
                    fail("duplicate generic parameter " + unit.generic_params[a]);
        unit_name_ = unit.name;
    }

    void parse_instantiation(UnitAst& unit) {
        unit.is_instantiation = true;
        unit.generic_name = expect_ident();
        expect(Tok::LParen);
        unit.generic_args.push_back(expect_ident());
        while (at(Tok::Comma)) {
            next();
            unit.generic_args.push_back(expect_ident());
        }
        expect(Tok::RParen);
        unit_name_ = unit.name;
        parse_unit_end(unit);
    }

    void parse_unit_end(UnitAst& unit) {
        expect(Tok::KwEnd);
        std::string closer = expect_ident();
        if (closer != unit.name)
            fail("unit " + unit.name + " closed as " + closer);
        expect(Tok::Dot);
    }

    void parse_imports(UnitAst& unit) {
        unit_name_ = unit.name;
        while (at(Tok::KwImport)) {
            next();
            for (;;) {
                int line = cur().line, col = cur().col;
                std::string name = expect_ident();
                if (name == unit.name)
                    throw Error::at(Err::SyntaxError, line, col, "unit imports itself");
                if (std::find(unit.imports.begin(), unit.imports.end(), name) ==
                    unit.imports.end())
                    unit.imports.push_back(name);
                if (!at(Tok::Comma)) break;
                next();
            }
            expect(Tok::Semi);
        }
    }

    // Token spellings from start index up to the current position; used for
    // declaration fingerprints, so positions never leak in.
    std::vector<std::string> span_texts(size_t start) const {
        std::vector<std::string> out;
        out.reserve(i_ - start);
        for (size_t k = start; k < i_; k++) out.push_back(toks_[k].text);
        return out;
    }

    void finish_decl(UnitAst& unit, Decl d, size_t start) {
        d.body_tokens = span_texts(start);
        for (const auto& prev : unit.decls)
            if (prev.name == d.name)
                throw Error::at(Err::SyntaxError, d.line, d.col,
                                "duplicate declaration of " + d.name);
        unit.decls.push_back(std::move(d));
    }

    void parse_interface_decls(UnitAst& unit) {
        while (!at(Tok::KwEnd)) {
            size_t start = i_;
            if (at(Tok::KwConst)) {
                parse_const(unit, start);
            } else if (at(Tok::KwType)) {
                parse_type(unit, start);
            } else if (at(Tok::KwReveal)) {
                parse_reveal(unit, start);
            } else if (at(Tok::KwProcedure)) {
                parse_proc_sig(unit, start);
            } else {
                fail("expected a declaration or END");
            }
        }
    }

    void parse_module_decls(UnitAst& unit) {
        while (!at(Tok::KwEnd) && !at(Tok::KwBegin)) {
            size_t start = i_;
            if (at(Tok::KwConst)) {
                parse_const(unit, start);
            } else if (at(Tok::KwVar)) {
                parse_var(unit, start);
            } else if (at(Tok::KwProcedure)) {
                parse_proc_impl(unit, start);
            } else {
                fail("expected a declaration, BEGIN or END");
            }
        }
    }

    void parse_const(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.kind = DeclKind::Const;
        d.line = cur().line;
        d.col = cur().col;
        d.name = expect_ident();
        expect(Tok::Eq);
        d.value = parse_expr();
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    void parse_var(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.kind = DeclKind::Var;
        d.line = cur().line;
        d.col = cur().col;
        d.name = expect_ident();
        expect(Tok::Colon);
        expect(Tok::KwInteger);
        if (at(Tok::Assign)) {
            next();
            d.value = parse_expr();
        }
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    void parse_type(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.line = cur().line;
        d.col = cur().col;
        d.name = expect_ident();
        if (at(Tok::Subtype)) {
            next();
            d.kind = DeclKind::Opaque;
            if (at(Tok::KwAny)) {
                next();
            } else {
                d.bound = parse_qualident();
            }
        } else {
            expect(Tok::Eq);
            d.kind = DeclKind::Type;
            d.type = std::make_unique<TypeExpr>(parse_type_expr());
        }
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    void parse_reveal(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.kind = DeclKind::Reveal;
        d.line = cur().line;
        d.col = cur().col;
        d.reveal_target = parse_qualident();
        d.name = d.reveal_target.spelled() + kRevealSuffix;
        expect(Tok::Eq);
        d.type = std::make_unique<TypeExpr>(parse_type_expr());
        if (d.type->kind == TypeExprKind::Named)
            throw Error::at(Err::SyntaxError, d.line, d.col,
                            "revelation must be a record or object type");
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    TypeExpr parse_type_expr() {
        TypeExpr t;
        if (at(Tok::KwRecord)) {
            next();
            t.kind = TypeExprKind::Record;
            t.fields = parse_fields();
            expect(Tok::KwEnd);
        } else if (at(Tok::KwObject)) {
            next();
            t.kind = TypeExprKind::Object;
            t.fields = parse_fields();
            expect(Tok::KwEnd);
        } else {
            QualIdent q = parse_qualident();
            if (at(Tok::KwObject)) {
                next();
                t.kind = TypeExprKind::Object;
                t.super = q;
                t.fields = parse_fields();
                expect(Tok::KwEnd);
            } else {
                t.kind = TypeExprKind::Named;
                t.named = q;
            }
        }
        return t;
    }

    std::vector<FieldDecl> parse_fields() {
        std::vector<FieldDecl> fields;
        while (at(Tok::Ident)) {
            std::vector<FieldDecl> group;
            group.push_back(FieldDecl{cur().text, cur().line});
            next();
            while (at(Tok::Comma)) {
                next();
                if (!at(Tok::Ident)) fail("expected field name");
                group.push_back(FieldDecl{cur().text, cur().line});
                next();
            }
            expect(Tok::Colon);
            expect(Tok::KwInteger);
            for (auto& f : group) {
                for (const auto& prev : fields)
                    if (prev.name == f.name)
                        throw Error::at(Err::SyntaxError, f.line, 0,
                                        "duplicate field " + f.name);
                fields.push_back(std::move(f));
            }
            if (at(Tok::Semi)) next();
            else break;
        }
        return fields;
    }

    ProcSig parse_sig() {
        ProcSig sig;
        expect(Tok::LParen);
        while (at(Tok::Ident)) {
            std::vector<std::string> group;
            group.push_back(expect_ident());
            while (at(Tok::Comma)) {
                next();
                group.push_back(expect_ident());
            }
            expect(Tok::Colon);
            expect(Tok::KwInteger);
            for (auto& p : group) {
                if (std::find(sig.params.begin(), sig.params.end(), p) != sig.params.end())
                    fail("duplicate parameter " + p);
                sig.params.push_back(std::move(p));
            }
            if (at(Tok::Semi)) next();
            else break;
        }
        expect(Tok::RParen);
        if (at(Tok::Colon)) {
            next();
            expect(Tok::KwInteger);
            sig.returns_value = true;
        }
        return sig;
    }

    void parse_proc_sig(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.kind = DeclKind::Proc;
        d.line = cur().line;
        d.col = cur().col;
        d.name = expect_ident();
        d.sig = parse_sig();
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    void parse_proc_impl(UnitAst& unit, size_t start) {
        next();
        Decl d;
        d.kind = DeclKind::Proc;
        d.line = cur().line;
        d.col = cur().col;
        d.name = expect_ident();
        d.sig = parse_sig();
        expect(Tok::Eq);
        d.body = std::make_unique<ProcBody>();
        if (at(Tok::KwVar)) {
            next();
            while (at(Tok::Ident)) {
                std::vector<LocalVar> group;
                group.push_back(LocalVar{cur().text, cur().line});
                next();
                while (at(Tok::Comma)) {
                    next();
                    if (!at(Tok::Ident)) fail("expected local variable name");
                    group.push_back(LocalVar{cur().text, cur().line});
                    next();
                }
                expect(Tok::Colon);
                expect(Tok::KwInteger);
                for (auto& v : group) d.body->locals.push_back(std::move(v));
                expect(Tok::Semi);
            }
        }
        expect(Tok::KwBegin);
        d.body->stmts = parse_stmts();
        expect(Tok::KwEnd);
        std::string closer = expect_ident();
        if (closer != d.name) fail("procedure " + d.name + " closed as " + closer);
        expect(Tok::Semi);
        finish_decl(unit, std::move(d), start);
    }

    std::vector<Stmt> parse_stmts() {
        std::vector<Stmt> stmts;
        while (!at(Tok::KwEnd)) {
            stmts.push_back(parse_stmt());
            bool was_return = stmts.back().kind == StmtKind::Return;
            if (at(Tok::Semi)) next();
            else if (!at(Tok::KwEnd)) fail("expected ';' or END");
            if (was_return && !at(Tok::KwEnd))
                fail("RETURN must be the final statement");
        }
        return stmts;
    }

    Stmt parse_stmt() {
        Stmt s;
        s.line = cur().line;
        s.col = cur().col;
        if (at(Tok::KwReturn)) {
            next();
            s.kind = StmtKind::Return;
            if (!at(Tok::Semi) && !at(Tok::KwEnd)) s.expr = parse_expr();
            return s;
        }
        QualIdent q = parse_qualident();
        if (at(Tok::Assign)) {
            next();
            s.kind = StmtKind::Assign;
            s.target = q;
            s.expr = parse_expr();
        } else if (at(Tok::LParen)) {
            s.kind = StmtKind::CallStmt;
            s.expr = parse_call(std::move(q));
        } else {
            fail("expected ':=' or '(' after name");
        }
        return s;
    }

    QualIdent parse_qualident() {
        QualIdent q;
        q.line = cur().line;
        q.col = cur().col;
        q.name = expect_ident();
        if (at(Tok::Dot)) {
            next();
            q.unit = std::move(q.name);
            q.name = expect_ident();
        }
        return q;
    }

    std::unique_ptr<Expr> parse_call(QualIdent target) {
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Call;
        e->line = target.line;
        e->col = target.col;
        e->name = std::move(target);
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            e->args.push_back(parse_expr());
            while (at(Tok::Comma)) {
                next();
                e->args.push_back(parse_expr());
            }
        }
        expect(Tok::RParen);
        return e;
    }

    std::unique_ptr<Expr> parse_expr() {
        auto lhs = parse_term();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
            int line = cur().line, col = cur().col;
            next();
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->op = op;
            e->line = line;
            e->col = col;
            e->lhs = std::move(lhs);
            e->rhs = parse_term();
            lhs = std::move(e);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_term() {
        auto lhs = parse_factor();
        while (at(Tok::Star)) {
            int line = cur().line, col = cur().col;
            next();
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->op = BinOp::Mul;
            e->line = line;
            e->col = col;
            e->lhs = std::move(lhs);
            e->rhs = parse_factor();
            lhs = std::move(e);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_factor() {
        if (at(Tok::Number)) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Literal;
            e->line = cur().line;
            e->col = cur().col;
            try {
                e->value = std::stoll(cur().text);
            } catch (const std::out_of_range&) {
                fail("integer literal out of range");
            }
            next();
            return e;
        }
        if (at(Tok::Minus)) {
            // Unary minus is 0 - x; there is no negate in the expression core.
            int line = cur().line, col = cur().col;
            next();
            auto zero = std::make_unique<Expr>();
            zero->kind = ExprKind::Literal;
            zero->value = 0;
            zero->line = line;
            zero->col = col;
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->op = BinOp::Sub;
            e->line = line;
            e->col = col;
            e->lhs = std::move(zero);
            e->rhs = parse_factor();
            return e;
        }
        if (at(Tok::LParen)) {
            next();
            auto e = parse_expr();
            expect(Tok::RParen);
            return e;
        }
        if (at(Tok::Ident)) {
            QualIdent q = parse_qualident();
            if (at(Tok::LParen)) return parse_call(std::move(q));
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Name;
            e->line = q.line;
            e->col = q.col;
            e->name = std::move(q);
            return e;
        }
        fail(std::string("expected an expression, got ") + tok_name(cur().kind));
    }
};

} // namespace

UnitAst parse_tokens(const std::vector<Token>& toks) {
    return Parser(toks).parse();
}

UnitAst parse_unit(const std::string& source) {
    return parse_tokens(lex(source));
}

UnitAst instantiate_generic(const UnitAst& inst, const std::string& generic_source) {
    std::vector<Token> gtoks = lex(generic_source);
    // Header: GENERIC INTERFACE G ( P1, ..., Pn ) ;
    size_t i = 0;
    auto want = [&](Tok k, const char* what) {
        if (i >= gtoks.size() || gtoks[i].kind != k)
            throw Error::at(Err::SyntaxError, i < gtoks.size() ? gtoks[i].line : 0, 0,
                            std::string("generic interface: expected ") + what);
        return gtoks[i++];
    };
    want(Tok::KwGeneric, "GENERIC");
    want(Tok::KwInterface, "INTERFACE");
    Token gname = want(Tok::Ident, "name");
    if (gname.text != inst.generic_name)
        throw Error::at(Err::TypeError, inst.line, 0,
                        "instantiation of " + inst.generic_name + " but generic file declares " +
                            gname.text);
    want(Tok::LParen, "'('");
    std::vector<std::string> params;
    params.push_back(want(Tok::Ident, "parameter").text);
    while (i < gtoks.size() && gtoks[i].kind == Tok::Comma) {
        i++;
        params.push_back(want(Tok::Ident, "parameter").text);
    }
    want(Tok::RParen, "')'");
    want(Tok::Semi, "';'");

    if (params.size() != inst.generic_args.size())
        throw Error::at(Err::TypeError, inst.line, 0,
                        inst.generic_name + " takes " + std::to_string(params.size()) +
                            " arguments, got " + std::to_string(inst.generic_args.size()));

    // Body runs to the closing END G . which is replaced wholesale.
    if (gtoks.size() < 4)
        throw Error::at(Err::SyntaxError, 0, 0, "generic interface has no body");
    size_t body_end = gtoks.size() - 4; // END, name, '.', EOF
    if (gtoks[body_end].kind != Tok::KwEnd || gtoks[body_end + 1].kind != Tok::Ident ||
        gtoks[body_end + 1].text != gname.text || gtoks[body_end + 2].kind != Tok::Dot)
        throw Error::at(Err::SyntaxError, gtoks.back().line, 0,
                        "generic interface must close with END " + gname.text + ".");

    auto subst = [&](const std::string& name) -> const std::string& {
        for (size_t p = 0; p < params.size(); p++)
            if (params[p] == name) return inst.generic_args[p];
        return name;
    };

    std::vector<Token> out;
    int l = inst.line;
    out.push_back(Token{Tok::KwInterface, "INTERFACE", l, 1});
    out.push_back(Token{Tok::Ident, inst.name, l, 1});
    out.push_back(Token{Tok::Semi, ";", l, 1});
    // Arguments stand in for the generic parameters, which are implicitly
    // imported interfaces.
    out.push_back(Token{Tok::KwImport, "IMPORT", l, 1});
    for (size_t a = 0; a < inst.generic_args.size(); a++) {
        if (a > 0) out.push_back(Token{Tok::Comma, ",", l, 1});
        out.push_back(Token{Tok::Ident, inst.generic_args[a], l, 1});
    }
    out.push_back(Token{Tok::Semi, ";", l, 1});
    for (size_t k = i; k < body_end; k++) {
        Token t = gtoks[k];
        if (t.kind == Tok::Ident) t.text = subst(t.text);
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::KwEnd, "END", l, 1});
    out.push_back(Token{Tok::Ident, inst.name, l, 1});
    out.push_back(Token{Tok::Dot, ".", l, 1});
    out.push_back(Token{Tok::Eof, "", l, 1});
    return parse_tokens(out);
}

} // namespace m3
