#include "randprog.hpp"

#include <algorithm>
#include <deque>

namespace m3::test {

namespace {

struct ProcInfo {
    int module = 0;
    std::string name;
    int arity = 0;
    bool returns = false;
    bool in_iface = false;
    int seq = 0;
    std::string sym;
};

struct ConstInfo {
    int module = 0;
    std::string name;
};

struct ModuleInfo {
    std::string name;
    std::vector<int> imports; // module indices, all smaller
    std::vector<ConstInfo> consts;
    std::vector<std::string> globals;
};

struct Gen {
    std::mt19937_64& rng;
    std::vector<ModuleInfo> mods;
    std::vector<ProcInfo> procs;
    std::map<std::string, std::set<std::string>> edges; // caller sym -> callees
    std::set<std::string> roots;                        // entry + init-called

    int irand(int lo, int hi) {
        return static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1)) + lo;
    }
    bool chance(int percent) { return irand(1, 100) <= percent; }

    // Procedures callable from inside `caller`: smaller sequence number, in
    // the caller's module or an imported one, and cross-module only through
    // the interface.
    std::vector<const ProcInfo*> callable(const ProcInfo& caller, bool want_returns) {
        std::vector<const ProcInfo*> out;
        const ModuleInfo& m = mods[static_cast<size_t>(caller.module)];
        for (const auto& p : procs) {
            if (p.seq >= caller.seq || p.returns != want_returns) continue;
            if (p.module == caller.module) out.push_back(&p);
            else if (p.in_iface &&
                     std::find(m.imports.begin(), m.imports.end(), p.module) !=
                         m.imports.end())
                out.push_back(&p);
        }
        return out;
    }

    // Callable from module `mi`'s initializer: any own procedure or any
    // imported interface procedure.
    std::vector<const ProcInfo*> init_callable(int mi, bool want_returns) {
        std::vector<const ProcInfo*> out;
        const ModuleInfo& m = mods[static_cast<size_t>(mi)];
        for (const auto& p : procs) {
            if (p.returns != want_returns) continue;
            if (p.module == mi) out.push_back(&p);
            else if (p.in_iface &&
                     std::find(m.imports.begin(), m.imports.end(), p.module) !=
                         m.imports.end())
                out.push_back(&p);
        }
        return out;
    }

    struct ExprCtx {
        int module = 0;
        const ProcInfo* self = nullptr; // null inside an initializer
        std::vector<std::string> params;
        std::vector<std::string> assigned_locals;
        std::string caller_sym; // for the call graph
    };

    std::string qual_const(const ConstInfo& c, int from_module) {
        if (c.module == from_module) return c.name;
        return mods[static_cast<size_t>(c.module)].name + "." + c.name;
    }

    std::string gen_expr(ExprCtx& ctx, int depth) {
        const ModuleInfo& m = mods[static_cast<size_t>(ctx.module)];
        if (depth > 0 && chance(30)) {
            std::string lhs = gen_expr(ctx, depth - 1);
            std::string rhs = gen_expr(ctx, depth - 1);
            const char* op = chance(50) ? " + " : (chance(50) ? " - " : " * ");
            return "(" + lhs + op + rhs + ")";
        }
        if (depth > 0 && chance(25)) {
            std::vector<const ProcInfo*> cands =
                ctx.self ? callable(*ctx.self, true) : init_callable(ctx.module, true);
            if (!cands.empty()) {
                const ProcInfo* callee = cands[static_cast<size_t>(
                    irand(0, static_cast<int>(cands.size()) - 1))];
                edges[ctx.caller_sym].insert(callee->sym);
                std::string call = callee->module == ctx.module
                                       ? callee->name
                                       : mods[static_cast<size_t>(callee->module)].name +
                                             "." + callee->name;
                call += "(";
                for (int a = 0; a < callee->arity; a++) {
                    if (a) call += ", ";
                    call += gen_expr(ctx, depth - 1);
                }
                return call + ")";
            }
        }
        // Leaves: literals, parameters, assigned locals, constants, globals.
        std::vector<std::string> leaves;
        leaves.push_back(std::to_string(irand(0, 99)));
        for (const auto& p : ctx.params) leaves.push_back(p);
        for (const auto& l : ctx.assigned_locals) leaves.push_back(l);
        for (const auto& c : m.consts) leaves.push_back(c.name);
        for (int imp : m.imports)
            for (const auto& c : mods[static_cast<size_t>(imp)].consts)
                leaves.push_back(qual_const(c, ctx.module));
        for (const auto& g : m.globals) leaves.push_back(g);
        return leaves[static_cast<size_t>(irand(0, static_cast<int>(leaves.size()) - 1))];
    }
};

} // namespace

RandomProgram gen_program(std::mt19937_64& rng) {
    Gen g{rng, {}, {}, {}, {}};
    int nmods = g.irand(1, 3);

    // Shape: modules, imports, constants, globals, procedure signatures.
    for (int i = 0; i < nmods; i++) {
        ModuleInfo m;
        m.name = "M" + std::to_string(i + 1);
        for (int j = 0; j < i; j++)
            if (g.chance(60)) m.imports.push_back(j);
        int nconsts = g.irand(1, 3);
        for (int c = 0; c < nconsts; c++)
            m.consts.push_back({i, "K" + std::to_string(i + 1) + "_" + std::to_string(c)});
        int nglobals = g.irand(0, 2);
        for (int v = 0; v < nglobals; v++)
            m.globals.push_back("G" + std::to_string(i + 1) + "_" + std::to_string(v));
        g.mods.push_back(std::move(m));
    }
    int seq = 0;
    for (int i = 0; i < nmods; i++) {
        int nprocs = g.irand(1, 3);
        for (int p = 0; p < nprocs; p++) {
            ProcInfo pi;
            pi.module = i;
            pi.name = (g.chance(65) ? "P" : "Q") + std::to_string(i + 1) + "_" +
                      std::to_string(p);
            pi.returns = pi.name[0] == 'P';
            pi.arity = g.irand(0, 3);
            pi.in_iface = g.chance(80);
            pi.seq = seq++;
            pi.sym = g.mods[static_cast<size_t>(i)].name + "." + pi.name;
            g.procs.push_back(pi);
        }
    }
    ProcInfo main_pi;
    main_pi.module = nmods - 1;
    main_pi.name = "Main";
    main_pi.returns = true;
    main_pi.arity = g.irand(0, 2);
    main_pi.in_iface = true;
    main_pi.seq = seq++;
    main_pi.sym = g.mods[static_cast<size_t>(nmods - 1)].name + ".Main";
    g.procs.push_back(main_pi);
    g.roots.insert(main_pi.sym);

    RandomProgram out;
    out.entry = main_pi.sym;
    for (int a = 0; a < main_pi.arity; a++) out.args.push_back(g.irand(-100, 100));

    // Emit sources.
    for (int i = 0; i < nmods; i++) {
        const ModuleInfo& m = g.mods[static_cast<size_t>(i)];
        std::string imports;
        if (!m.imports.empty()) {
            imports = "IMPORT ";
            for (size_t k = 0; k < m.imports.size(); k++) {
                if (k) imports += ", ";
                imports += g.mods[static_cast<size_t>(m.imports[k])].name;
            }
            imports += ";\n";
        }

        std::string iface = "INTERFACE " + m.name + ";\n" + imports;
        for (size_t c = 0; c < m.consts.size(); c++) {
            iface += "CONST " + m.consts[c].name + " = " + std::to_string(g.irand(0, 99));
            // Reference an earlier own constant or an imported one sometimes.
            if (g.chance(40)) {
                std::vector<std::string> refs;
                for (size_t e = 0; e < c; e++) refs.push_back(m.consts[e].name);
                for (int imp : m.imports)
                    for (const auto& ic : g.mods[static_cast<size_t>(imp)].consts)
                        refs.push_back(g.qual_const(ic, i));
                if (!refs.empty())
                    iface += " + " +
                             refs[static_cast<size_t>(
                                 g.irand(0, static_cast<int>(refs.size()) - 1))];
            }
            iface += ";\n";
        }
        for (const auto& p : g.procs) {
            if (p.module != i || !p.in_iface) continue;
            iface += "PROCEDURE " + p.name + "(";
            for (int a = 0; a < p.arity; a++) {
                if (a) iface += ", ";
                iface += "a" + std::to_string(a);
            }
            if (p.arity) iface += ": INTEGER";
            iface += ")";
            if (p.returns) iface += ": INTEGER";
            iface += ";\n";
        }
        iface += "END " + m.name + ".\n";
        out.files[m.name + ".i3"] = iface;

        std::string mod = "MODULE " + m.name + ";\n" + imports;
        for (size_t v = 0; v < m.globals.size(); v++) {
            mod += "VAR " + m.globals[v] + ": INTEGER";
            if (g.chance(70)) mod += " := " + std::to_string(g.irand(0, 99));
            mod += ";\n";
        }
        for (const auto& p : g.procs) {
            if (p.module != i) continue;
            Gen::ExprCtx ctx;
            ctx.module = i;
            ctx.self = &p;
            ctx.caller_sym = p.sym;
            for (int a = 0; a < p.arity; a++) ctx.params.push_back("a" + std::to_string(a));
            int nlocals = g.irand(0, 2);
            std::vector<std::string> locals;
            for (int l = 0; l < nlocals; l++) locals.push_back("t" + std::to_string(l));

            mod += "PROCEDURE " + p.name + "(";
            for (int a = 0; a < p.arity; a++) {
                if (a) mod += ", ";
                mod += "a" + std::to_string(a);
            }
            if (p.arity) mod += ": INTEGER";
            mod += ")";
            if (p.returns) mod += ": INTEGER";
            mod += " =\n";
            if (!locals.empty()) {
                mod += "VAR ";
                for (size_t l = 0; l < locals.size(); l++) {
                    if (l) mod += ", ";
                    mod += locals[l];
                }
                mod += ": INTEGER;\n";
            }
            mod += "BEGIN\n";
            int nstmts = g.irand(0, 2);
            for (int s = 0; s < nstmts; s++) {
                if (!locals.empty() && g.chance(50)) {
                    std::string l = locals[static_cast<size_t>(
                        g.irand(0, static_cast<int>(locals.size()) - 1))];
                    mod += "  " + l + " := " + g.gen_expr(ctx, 2) + ";\n";
                    if (std::find(ctx.assigned_locals.begin(), ctx.assigned_locals.end(),
                                  l) == ctx.assigned_locals.end())
                        ctx.assigned_locals.push_back(l);
                } else if (!m.globals.empty() && g.chance(60)) {
                    const std::string& gv = m.globals[static_cast<size_t>(
                        g.irand(0, static_cast<int>(m.globals.size()) - 1))];
                    mod += "  " + gv + " := " + g.gen_expr(ctx, 2) + ";\n";
                } else {
                    auto cands = g.callable(p, false);
                    if (cands.empty()) continue;
                    const ProcInfo* callee = cands[static_cast<size_t>(
                        g.irand(0, static_cast<int>(cands.size()) - 1))];
                    g.edges[p.sym].insert(callee->sym);
                    std::string call =
                        callee->module == i
                            ? callee->name
                            : g.mods[static_cast<size_t>(callee->module)].name + "." +
                                  callee->name;
                    call += "(";
                    for (int a = 0; a < callee->arity; a++) {
                        if (a) call += ", ";
                        call += g.gen_expr(ctx, 1);
                    }
                    mod += "  " + call + ");\n";
                }
            }
            if (p.returns)
                mod += "  RETURN " + g.gen_expr(ctx, 3) + "\n";
            else if (g.chance(30))
                mod += "  RETURN\n";
            mod += "END " + p.name + ";\n";
        }

        // Initializer: global assignments and proper-procedure calls.
        int ninit = g.irand(0, 2);
        std::string init;
        Gen::ExprCtx ictx;
        ictx.module = i;
        ictx.caller_sym = "<init:" + m.name + ">";
        for (int s = 0; s < ninit; s++) {
            if (!m.globals.empty() && g.chance(70)) {
                const std::string& gv = m.globals[static_cast<size_t>(
                    g.irand(0, static_cast<int>(m.globals.size()) - 1))];
                init += "  " + gv + " := " + g.gen_expr(ictx, 2) + ";\n";
            } else {
                auto cands = g.init_callable(i, false);
                if (cands.empty()) continue;
                const ProcInfo* callee = cands[static_cast<size_t>(
                    g.irand(0, static_cast<int>(cands.size()) - 1))];
                g.edges[ictx.caller_sym].insert(callee->sym);
                g.roots.insert(callee->sym);
                std::string call =
                    callee->module == i
                        ? callee->name
                        : g.mods[static_cast<size_t>(callee->module)].name + "." +
                              callee->name;
                call += "(";
                for (int a = 0; a < callee->arity; a++) {
                    if (a) call += ", ";
                    call += g.gen_expr(ictx, 1);
                }
                init += "  " + call + ");\n";
            }
        }
        // Roots also include value procedures called from initializer
        // expressions; gen_expr recorded those edges under ictx.caller_sym.
        for (const auto& callee : g.edges[ictx.caller_sym]) g.roots.insert(callee);
        if (!init.empty()) mod += "BEGIN\n" + init;
        mod += "END " + m.name + ".\n";
        out.files[m.name + ".m3"] = mod;
    }

    // Static reachability from entry and initializers.
    std::set<std::string> reachable = g.roots;
    std::deque<std::string> work(g.roots.begin(), g.roots.end());
    while (!work.empty()) {
        std::string cur = work.front();
        work.pop_front();
        for (const auto& callee : g.edges[cur])
            if (reachable.insert(callee).second) work.push_back(callee);
    }
    for (const auto& p : g.procs)
        if (!reachable.count(p.sym)) out.uncalled.insert(p.sym);
    return out;
}

} // namespace m3::test
