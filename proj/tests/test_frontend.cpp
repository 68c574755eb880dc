#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>

#include "m3/error.hpp"
#include "m3/fingerprint.hpp"
#include "m3/lexer.hpp"
#include "m3/parse.hpp"
#include "m3/typecheck.hpp"
#include "support/randpkg.hpp"
#include "support/support.hpp"

using namespace m3;
using namespace m3::test;

namespace {

Err code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Err::SyntaxError;
}

} // namespace

TEST_CASE("lexer: tokens, keywords and positions") {
    auto toks = lex("INTERFACE Ab;\n  CONST x := 12;");
    REQUIRE(toks.size() == 9); // incl. Eof
    CHECK(toks[0].kind == Tok::KwInterface);
    CHECK(toks[1].kind == Tok::Ident);
    CHECK(toks[1].text == "Ab");
    CHECK(toks[3].kind == Tok::KwConst);
    CHECK(toks[3].line == 2);
    CHECK(toks[3].col == 3);
    CHECK(toks[5].kind == Tok::Assign);
    CHECK(toks[6].kind == Tok::Number);
    CHECK(toks[6].text == "12");
    CHECK(toks[8].kind == Tok::Eof);
}

TEST_CASE("lexer: subtype and punctuation disambiguation") {
    auto toks = lex("<: : := = ( ) [ ] . , ; + - *");
    std::vector<Tok> kinds;
    for (const auto& t : toks) kinds.push_back(t.kind);
    CHECK(kinds == std::vector<Tok>{Tok::Subtype, Tok::Colon, Tok::Assign, Tok::Eq,
                                    Tok::LParen, Tok::RParen, Tok::LBracket, Tok::RBracket,
                                    Tok::Dot, Tok::Comma, Tok::Semi, Tok::Plus, Tok::Minus,
                                    Tok::Star, Tok::Eof});
}

TEST_CASE("lexer: comments nest and span lines") {
    auto toks = lex("CONST (* outer (* inner *) still\nouter *) x = 1;");
    REQUIRE(toks.size() == 6);
    CHECK(toks[1].text == "x");
    CHECK(toks[1].line == 2);
}

TEST_CASE("lexer: unterminated comment and stray characters") {
    CHECK(code_of([] { lex("CONST (* open"); }) == Err::SyntaxError);
    CHECK(code_of([] { lex("CONST ? x"); }) == Err::SyntaxError);
    try {
        lex("x\n  ?");
    } catch (const Error& e) {
        CHECK(e.line() == 2);
        CHECK(e.col() == 3);
    }
}

TEST_CASE("parser: interface shape") {
    UnitAst u = parse_unit("INTERFACE A;\nIMPORT B, C;\n"
                           "CONST K = B.X + 1;\n"
                           "TYPE T = RECORD a, b: INTEGER END;\n"
                           "TYPE O <: ANY;\n"
                           "PROCEDURE F(x, y: INTEGER; z: INTEGER): INTEGER;\n"
                           "PROCEDURE G();\n"
                           "END A.\n");
    CHECK(u.kind == UnitKind::Interface);
    CHECK(u.name == "A");
    CHECK(u.imports == std::vector<std::string>{"B", "C"});
    REQUIRE(u.decls.size() == 5);
    CHECK(u.decls[0].kind == DeclKind::Const);
    CHECK(u.decls[1].kind == DeclKind::Type);
    CHECK(u.decls[1].type->fields.size() == 2);
    CHECK(u.decls[2].kind == DeclKind::Opaque);
    CHECK(!u.decls[2].bound.has_value());
    const Decl* f = u.find_decl("F");
    REQUIRE(f);
    CHECK(f->sig.params == std::vector<std::string>{"x", "y", "z"});
    CHECK(f->sig.returns_value);
    CHECK(!u.find_decl("G")->sig.returns_value);
}

TEST_CASE("parser: module with locals, body and initializer") {
    UnitAst u = parse_unit("MODULE M;\n"
                           "VAR g: INTEGER := 7;\n"
                           "PROCEDURE F(a: INTEGER): INTEGER =\n"
                           "VAR t, u: INTEGER;\n"
                           "BEGIN\n  t := a + g;\n  u := t * 2;\n  RETURN u\nEND F;\n"
                           "BEGIN\n  g := F(1)\nEND M.\n");
    CHECK(u.kind == UnitKind::Module);
    CHECK(u.has_init);
    REQUIRE(u.init_stmts.size() == 1);
    CHECK(u.init_stmts[0].kind == StmtKind::Assign);
    const Decl* f = u.find_decl("F");
    REQUIRE(f);
    REQUIRE(f->body);
    CHECK(f->body->locals.size() == 2);
    REQUIRE(f->body->stmts.size() == 3);
    CHECK(f->body->stmts[2].kind == StmtKind::Return);
}

TEST_CASE("parser: rejects malformed units") {
    // Closer must repeat the unit name.
    CHECK(code_of([] { parse_unit("INTERFACE A; END B.\n"); }) == Err::SyntaxError);
    // RETURN only as the final statement.
    CHECK(code_of([] {
              parse_unit("MODULE M;\nPROCEDURE F(): INTEGER =\n"
                         "BEGIN RETURN 1; F() END F;\nEND M.\n");
          }) == Err::SyntaxError);
    // Duplicate parameter names.
    CHECK(code_of([] { parse_unit("INTERFACE A;\nPROCEDURE F(x, x: INTEGER);\nEND A.\n"); }) ==
          Err::SyntaxError);
    // Declarations after BEGIN.
    CHECK(code_of([] { parse_unit("MODULE M;\nBEGIN\nCONST x = 1;\nEND M.\n"); }) ==
          Err::SyntaxError);
    // A module file cannot declare an interface body form.
    CHECK(code_of([] { parse_unit("MODULE M;\nPROCEDURE F(): INTEGER;\nEND M.\n"); }) ==
          Err::SyntaxError);
}

TEST_CASE("parser: generic interface and instantiation expand by substitution") {
    std::string generic = "GENERIC INTERFACE Table(Key, Val);\n"
                          "IMPORT Base;\n"
                          "CONST Width = Key.Size + Val.Size + Base.Pad;\n"
                          "END Table.\n";
    UnitAst g = parse_unit(generic);
    CHECK(g.kind == UnitKind::GenericInterface);
    CHECK(g.generic_params == std::vector<std::string>{"Key", "Val"});

    UnitAst inst = parse_unit("INTERFACE IntTbl = Table(IntKey, IntVal) END IntTbl.\n");
    CHECK(inst.is_instantiation);
    CHECK(inst.generic_name == "Table");

    UnitAst expanded = instantiate_generic(inst, generic);
    CHECK(expanded.kind == UnitKind::Interface);
    CHECK(expanded.name == "IntTbl");
    // Arguments join the imports; parameter names are substituted in bodies.
    bool has_intkey = false, has_base = false;
    for (const auto& i : expanded.imports) {
        if (i == "IntKey") has_intkey = true;
        if (i == "Base") has_base = true;
    }
    CHECK(has_intkey);
    CHECK(has_base);
    const Decl* w = expanded.find_decl("Width");
    REQUIRE(w);
    bool substituted = false;
    for (const auto& t : w->body_tokens)
        if (t == "IntKey") substituted = true;
    CHECK(substituted);
    for (const auto& t : w->body_tokens) CHECK(t != "Key");

    // Arity mismatch is rejected.
    UnitAst bad = parse_unit("INTERFACE T2 = Table(JustOne) END T2.\n");
    CHECK(code_of([&] { instantiate_generic(bad, generic); }) == Err::TypeError);
}

TEST_CASE("canonical print: reparse yields identical fingerprints") {
    for (const auto& [fname, text] : fig2_sources()) {
        UnitAst a = parse_unit(text);
        UnitAst b = parse_unit(canonical_source(a));
        CHECK(a.name == b.name);
        CHECK(a.imports == b.imports);
        REQUIRE(a.decls.size() == b.decls.size());
        for (size_t i = 0; i < a.decls.size(); i++)
            CHECK(a.decls[i].body_tokens == b.decls[i].body_tokens);
    }
}

TEST_CASE("fingerprints: edits ripple exactly along the reference closure") {
    // In the running example B folds D and E, C folds B, A folds B and D.
    auto files = fig2_sources();
    auto states = full_compile_states(files);

    auto fps_of = [](const std::map<std::string, std::string>& fs) {
        std::map<std::string, UnitAst> ifaces;
        for (const auto& [fname, text] : fs) {
            UnitAst ast = parse_unit(text);
            if (ast.kind == UnitKind::Interface) ifaces[ast.name] = std::move(ast);
        }
        return fingerprint_interfaces(ifaces, {});
    };

    CurrentFingerprints before = fps_of(files);
    auto edited = files;
    edited["E.i3"] = "INTERFACE E;\nCONST EVal = 6;\nEND E.\n";
    CurrentFingerprints after = fps_of(edited);

    CHECK(before.interfaces.at("E").decls.at("EVal") !=
          after.interfaces.at("E").decls.at("EVal"));
    CHECK(before.interfaces.at("B").decls.at("BVal") !=
          after.interfaces.at("B").decls.at("BVal"));
    CHECK(before.interfaces.at("C").decls.at("CVal") !=
          after.interfaces.at("C").decls.at("CVal"));
    CHECK(before.interfaces.at("A").decls.at("AVal") !=
          after.interfaces.at("A").decls.at("AVal"));
    CHECK(before.interfaces.at("D").decls.at("DVal") ==
          after.interfaces.at("D").decls.at("DVal"));

    // A new unreferenced constant changes nothing else.
    auto padded = files;
    padded["E.i3"] = "INTERFACE E;\nCONST EVal = 5;\nCONST Pad = 1;\nEND E.\n";
    CurrentFingerprints with_pad = fps_of(padded);
    CHECK(with_pad.interfaces.at("E").decls.at("EVal") ==
          before.interfaces.at("E").decls.at("EVal"));
    CHECK(with_pad.interfaces.at("B").decls.at("BVal") ==
          before.interfaces.at("B").decls.at("BVal"));
}

TEST_CASE("fingerprints: random edits match the reference-closure oracle") {
    std::mt19937_64 rng(20260821);
    for (int trial = 0; trial < 60; trial++) {
        RandomBuild b = gen_build(rng, 8);
        auto before = full_compile_states(b.files());
        EditResult edit = random_edit(rng, b);
        auto after = full_compile_states(b.files());

        // The reference closure from the model: which declarations
        // transitively reference the edited one?
        std::map<std::string, std::set<std::string>> changed_by_oracle;
        if (edit.interface_edit) {
            // Seed with the edited declaration, then close over const refs.
            std::set<std::string> seeds{edit.iface + "." + edit.decl};
            bool grew = true;
            while (grew) {
                grew = false;
                for (const auto& f : b.ifaces)
                    for (const auto& c : f.consts) {
                        std::string id = f.name + "." + c.name;
                        if (seeds.count(id)) continue;
                        for (const auto& r : c.refs) {
                            std::string target =
                                r.find('.') == std::string::npos ? f.name + "." + r : r;
                            if (seeds.count(target)) {
                                seeds.insert(id);
                                grew = true;
                            }
                        }
                    }
            }
            for (const auto& s : seeds) {
                size_t dot = s.find('.');
                changed_by_oracle[s.substr(0, dot)].insert(s.substr(dot + 1));
            }
        }

        for (const auto& [key, st] : after) {
            auto pit = before.find(key);
            if (pit == before.end()) continue;
            bool text_changed = pit->second.text_hash != st.text_hash;
            bool used_changed = !(pit->second.used == st.used);
            if (!edit.interface_edit) {
                // A module tweak touches exactly that module's text.
                if (key == edit.unit_key) CHECK(text_changed);
                else CHECK((!text_changed && !used_changed));
            } else if (!text_changed && used_changed) {
                // Used-fingerprint drift must trace back to the closure.
                bool explained = false;
                for (const auto& [iface, decls] : changed_by_oracle)
                    for (const auto& d : decls)
                        if (pit->second.used.count(iface) &&
                            pit->second.used.at(iface).count(d))
                            explained = true;
                CHECK(explained);
            }
        }
    }
}

TEST_CASE("typecheck: classification and arity errors") {
    TypeEnv env;
    {
        UnitAst i = parse_unit("INTERFACE I;\nCONST K = 3;\n"
                               "PROCEDURE F(a: INTEGER): INTEGER;\nPROCEDURE Q();\nEND I.\n");
        env["I"] = typecheck_unit(i, {}).exports;
    }
    auto check_mod = [&](const std::string& body) {
        UnitAst m = parse_unit(body);
        return typecheck_unit(m, env);
    };

    // Wrong arity.
    CHECK(code_of([&] {
              check_mod("MODULE M;\nIMPORT I;\nPROCEDURE G(): INTEGER =\n"
                        "BEGIN RETURN I.F(1, 2) END G;\nEND M.\n");
          }) == Err::TypeError);
    // Discarded result.
    CHECK(code_of([&] {
              check_mod("MODULE M;\nIMPORT I;\nPROCEDURE G() =\n"
                        "BEGIN I.F(1) END G;\nEND M.\n");
          }) == Err::TypeError);
    // Proper procedure used as a value.
    CHECK(code_of([&] {
              check_mod("MODULE M;\nIMPORT I;\nPROCEDURE G(): INTEGER =\n"
                        "BEGIN RETURN I.Q() END G;\nEND M.\n");
          }) == Err::TypeError);
    // Unknown declaration in a known interface.
    CHECK(code_of([&] {
              check_mod("MODULE M;\nIMPORT I;\nPROCEDURE G(): INTEGER =\n"
                        "BEGIN RETURN I.Nope END G;\nEND M.\n");
          }) == Err::UnknownImportedName);
    // Reference without the import.
    CHECK(code_of([&] {
              check_mod("MODULE M;\nPROCEDURE G(): INTEGER =\n"
                        "BEGIN RETURN I.K END G;\nEND M.\n");
          }) == Err::TypeError);
    // Valid use passes and folds the constant.
    CheckedUnit ok = check_mod("MODULE M;\nIMPORT I;\nCONST L = I.K * 2;\n"
                               "PROCEDURE G(): INTEGER =\nBEGIN RETURN L END G;\nEND M.\n");
    CHECK(ok.consts.at("L") == 6);
}

TEST_CASE("typecheck: constant evaluation wraps around") {
    UnitAst i = parse_unit("INTERFACE W;\nCONST Big = 4611686018427387904;\n"
                           "CONST Wrap = Big * 4;\nEND W.\n");
    CheckedUnit c = typecheck_unit(i, {});
    CHECK(c.exports.decls.at("Wrap").const_value == 0); // 2^62 * 4 wraps to 0
}

TEST_CASE("typecheck: module must implement its interface's procedures") {
    TypeEnv env;
    UnitAst i = parse_unit("INTERFACE M;\nPROCEDURE F(a: INTEGER): INTEGER;\nEND M.\n");
    env["M"] = typecheck_unit(i, {}).exports;

    CHECK(code_of([&] {
              UnitAst m = parse_unit("MODULE M;\nEND M.\n");
              typecheck_unit(m, env);
          }) == Err::TypeError);
    // Signature mismatch is also a failure to implement.
    CHECK(code_of([&] {
              UnitAst m = parse_unit("MODULE M;\nPROCEDURE F(a, b: INTEGER): INTEGER =\n"
                                     "BEGIN RETURN a END F;\nEND M.\n");
              typecheck_unit(m, env);
          }) == Err::TypeError);

    UnitAst good = parse_unit("MODULE M;\nPROCEDURE F(a: INTEGER): INTEGER =\n"
                              "BEGIN RETURN a END F;\nEND M.\n");
    CHECK(typecheck_unit(good, env).exports.decls.count("F") == 1);
}

TEST_CASE("typecheck: locals must be assigned before read, globals need not") {
    CHECK(code_of([] {
              UnitAst m = parse_unit("MODULE M;\nPROCEDURE F(): INTEGER =\n"
                                     "VAR t: INTEGER;\nBEGIN RETURN t END F;\nEND M.\n");
              typecheck_unit(m, {});
          }) == Err::TypeError);
    // `x := x` with unassigned x reads before assigning.
    CHECK(code_of([] {
              UnitAst m = parse_unit("MODULE M;\nPROCEDURE F() =\n"
                                     "VAR t: INTEGER;\nBEGIN t := t END F;\nEND M.\n");
              typecheck_unit(m, {});
          }) == Err::TypeError);
    // Globals carry their initial value.
    UnitAst m = parse_unit("MODULE M;\nVAR g: INTEGER;\n"
                           "PROCEDURE F(): INTEGER =\nBEGIN RETURN g END F;\nEND M.\n");
    CheckedUnit c = typecheck_unit(m, {});
    CHECK(c.globals == std::vector<std::string>{"g"});
}

TEST_CASE("unit keys carry the extension") {
    CHECK(unit_key("A", UnitKind::Interface) == "A.i3");
    CHECK(unit_key("A", UnitKind::Module) == "A.m3");
    CHECK(*classify_path("x/y/G.ig") == UnitKind::GenericInterface);
    CHECK(!classify_path("x/y/G.txt").has_value());
    CHECK(unit_name_from_path("lib/sub/Arith.i3") == "Arith");
}
