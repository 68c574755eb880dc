#include "randpkg.hpp"

#include <algorithm>

#include "m3/fnv.hpp"
#include "m3/parse.hpp"

namespace m3::test {

namespace {

int irand(std::mt19937_64& rng, int lo, int hi) {
    return static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1)) + lo;
}

std::string emit_iface(const RandomBuild::Iface& f) {
    std::string s = "INTERFACE " + f.name + ";\n";
    if (!f.imports.empty()) {
        s += "IMPORT ";
        for (size_t i = 0; i < f.imports.size(); i++) {
            if (i) s += ", ";
            s += f.imports[i];
        }
        s += ";\n";
    }
    for (const auto& c : f.consts) {
        s += "CONST " + c.name + " = " + std::to_string(c.value);
        for (const auto& r : c.refs) s += " + " + r;
        s += ";\n";
    }
    for (const auto& p : f.procs) {
        s += "PROCEDURE " + p.name + "(";
        for (int a = 0; a < p.arity; a++) {
            if (a) s += ", ";
            s += "a" + std::to_string(a);
        }
        if (p.arity) s += ": INTEGER";
        s += "): INTEGER;\n";
    }
    s += "END " + f.name + ".\n";
    return s;
}

std::string emit_module(const RandomBuild::Iface& f) {
    std::string s = "MODULE " + f.name + ";\n";
    if (!f.imports.empty()) {
        s += "IMPORT ";
        for (size_t i = 0; i < f.imports.size(); i++) {
            if (i) s += ", ";
            s += f.imports[i];
        }
        s += ";\n";
    }
    for (const auto& impl : f.impls) {
        const RandomBuild::ProcSigDecl* sig = nullptr;
        for (const auto& p : f.procs)
            if (p.name == impl.name) sig = &p;
        s += "PROCEDURE " + impl.name + "(";
        for (int a = 0; a < sig->arity; a++) {
            if (a) s += ", ";
            s += "a" + std::to_string(a);
        }
        if (sig->arity) s += ": INTEGER";
        s += "): INTEGER =\nBEGIN\n  RETURN " + std::to_string(impl.tweak);
        for (int a = 0; a < sig->arity; a++) s += " + a" + std::to_string(a);
        for (const auto& r : impl.refs) s += " + " + r;
        s += "\nEND " + impl.name + ";\n";
    }
    s += "END " + f.name + ".\n";
    return s;
}

} // namespace

std::map<std::string, std::string> RandomBuild::files() const {
    std::map<std::string, std::string> out;
    for (const auto& f : ifaces) {
        out[f.name + ".i3"] = emit_iface(f);
        if (f.has_module) out[f.name + ".m3"] = emit_module(f);
    }
    return out;
}

std::set<std::string> RandomBuild::importer_closure(const std::string& edited_key) const {
    std::set<std::string> closure{edited_key};
    if (edited_key.size() > 3 && edited_key.substr(edited_key.size() - 3) == ".m3")
        return closure; // nothing depends on a module
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& f : ifaces) {
            bool member = closure.count(f.name + ".i3") != 0;
            bool depends = member;
            for (const auto& imp : f.imports)
                if (closure.count(imp + ".i3")) depends = true;
            if (!depends) continue;
            if (closure.insert(f.name + ".i3").second) grew = true;
            if (f.has_module && closure.insert(f.name + ".m3").second) grew = true;
        }
    }
    return closure;
}

bool RandomBuild::used_outside(const std::string& iface, const std::string& decl) const {
    std::string qualified = iface + "." + decl;
    for (const auto& f : ifaces) {
        for (const auto& c : f.consts)
            for (const auto& r : c.refs) {
                if (r == qualified) return true;
                if (f.name == iface && r == decl && c.name != decl) return true;
            }
        for (const auto& impl : f.impls)
            for (const auto& r : impl.refs) {
                if (r == qualified) return true;
                if (f.name == iface && r == decl) return true;
            }
    }
    return false;
}

std::vector<std::string> RandomBuild::popular_ifaces(size_t n) const {
    std::vector<std::string> out;
    for (const auto& f : ifaces) {
        size_t importers = 0;
        for (const auto& other : ifaces)
            if (std::find(other.imports.begin(), other.imports.end(), f.name) !=
                other.imports.end())
                importers += other.has_module ? 2 : 1;
        if (importers >= n) out.push_back(f.name);
    }
    return out;
}

RandomBuild gen_build(std::mt19937_64& rng, int max_units) {
    RandomBuild b;
    int n = irand(rng, 2, std::max(2, max_units));
    for (int i = 0; i < n; i++) {
        RandomBuild::Iface f;
        f.name = "U" + std::to_string(i + 1);
        for (int j = 0; j < i && f.imports.size() < 4; j++)
            if (irand(rng, 1, 100) <= 40) f.imports.push_back("U" + std::to_string(j + 1));

        int nconsts = irand(rng, 1, 4);
        for (int c = 0; c < nconsts; c++) {
            RandomBuild::ConstDecl cd;
            cd.name = "K" + std::to_string(c);
            cd.value = irand(rng, 0, 99);
            if (irand(rng, 1, 100) <= 50) {
                std::vector<std::string> pool;
                for (int e = 0; e < c; e++) pool.push_back("K" + std::to_string(e));
                for (const auto& imp : f.imports) {
                    const auto& other = b.ifaces[static_cast<size_t>(
                        std::stoi(imp.substr(1)) - 1)];
                    for (const auto& oc : other.consts) pool.push_back(imp + "." + oc.name);
                }
                if (!pool.empty())
                    cd.refs.push_back(
                        pool[static_cast<size_t>(irand(rng, 0, static_cast<int>(pool.size()) - 1))]);
            }
            f.consts.push_back(std::move(cd));
        }

        int nprocs = irand(rng, 0, 2);
        for (int p = 0; p < nprocs; p++)
            f.procs.push_back({"F" + std::to_string(p), irand(rng, 0, 2)});

        f.has_module = !f.procs.empty() && irand(rng, 1, 100) <= 85;
        if (f.has_module) {
            for (const auto& p : f.procs) {
                RandomBuild::ProcImpl impl;
                impl.name = p.name;
                impl.tweak = irand(rng, 0, 99);
                int nrefs = irand(rng, 0, 2);
                std::vector<std::string> pool;
                for (const auto& c : f.consts) pool.push_back(c.name);
                for (const auto& imp : f.imports) {
                    const auto& other = b.ifaces[static_cast<size_t>(
                        std::stoi(imp.substr(1)) - 1)];
                    for (const auto& oc : other.consts) pool.push_back(imp + "." + oc.name);
                }
                for (int r = 0; r < nrefs && !pool.empty(); r++)
                    impl.refs.push_back(
                        pool[static_cast<size_t>(irand(rng, 0, static_cast<int>(pool.size()) - 1))]);
                f.impls.push_back(std::move(impl));
            }
        }
        b.ifaces.push_back(std::move(f));
    }
    return b;
}

EditResult random_edit(std::mt19937_64& rng, RandomBuild& b) {
    EditResult out;
    for (int attempt = 0; attempt < 64; attempt++) {
        auto& f = b.ifaces[static_cast<size_t>(
            irand(rng, 0, static_cast<int>(b.ifaces.size()) - 1))];
        int roll = irand(rng, 1, 100);
        if (roll <= 55) {
            auto& c = f.consts[static_cast<size_t>(
                irand(rng, 0, static_cast<int>(f.consts.size()) - 1))];
            c.value += 1;
            out = {f.name + ".i3", f.name, c.name, true, b.used_outside(f.name, c.name)};
            return out;
        }
        if (roll <= 70) {
            std::string name = "K" + std::to_string(f.consts.size()) + "n";
            f.consts.push_back({name, irand(rng, 0, 99), {}});
            out = {f.name + ".i3", f.name, name, true, false};
            return out;
        }
        if (roll <= 85) {
            if (f.procs.empty()) continue;
            auto& p = f.procs[static_cast<size_t>(
                irand(rng, 0, static_cast<int>(f.procs.size()) - 1))];
            p.arity += 1;
            out = {f.name + ".i3", f.name, p.name, true, b.used_outside(f.name, p.name)};
            return out;
        }
        if (!f.has_module) continue;
        auto& impl = f.impls[static_cast<size_t>(
            irand(rng, 0, static_cast<int>(f.impls.size()) - 1))];
        impl.tweak += 1;
        out = {f.name + ".m3", f.name, impl.name, false, false};
        return out;
    }
    // Fall back to the always-possible edit.
    auto& f = b.ifaces[0];
    f.consts[0].value += 1;
    return {f.name + ".i3", f.name, f.consts[0].name, true,
            b.used_outside(f.name, f.consts[0].name)};
}

bool edit_unused_const(RandomBuild& b, const std::string& iface, EditResult& out) {
    for (auto& f : b.ifaces) {
        if (f.name != iface) continue;
        for (auto& c : f.consts) {
            if (b.used_outside(f.name, c.name)) continue;
            bool own_ref = false;
            for (const auto& other : f.consts)
                for (const auto& r : other.refs)
                    if (r == c.name) own_ref = true;
            if (own_ref) continue;
            c.value += 1;
            out = {f.name + ".i3", f.name, c.name, true, false};
            return true;
        }
    }
    return false;
}

std::map<std::string, UnitState> full_compile_states(
    const std::map<std::string, std::string>& files) {
    std::map<std::string, UnitAst> ifaces;
    std::map<std::string, UnitAst> modules;
    std::map<std::string, uint64_t> hashes;
    for (const auto& [fname, text] : files) {
        UnitAst ast = parse_unit(text);
        hashes[fname] = fnv1a(text);
        if (ast.kind == UnitKind::Interface) ifaces[ast.name] = std::move(ast);
        else modules[ast.name] = std::move(ast);
    }

    CurrentFingerprints cf = fingerprint_interfaces(ifaces, {});

    FpEnv all;
    for (const auto& [name, fps] : cf.interfaces) all[name] = fps.decls;

    std::map<std::string, UnitState> out;
    for (const auto& [name, ast] : ifaces) {
        UnitState st;
        st.text_hash = hashes.at(name + ".i3");
        st.used = cf.interfaces.at(name).used;
        out[name + ".i3"] = std::move(st);
    }
    for (const auto& [name, ast] : modules) {
        UnitState st;
        st.text_hash = hashes.at(name + ".m3");
        st.used = fingerprint_unit(ast, all).used;
        out[name + ".m3"] = std::move(st);
    }
    return out;
}

std::set<std::string> oracle_dirty(const std::map<std::string, UnitState>& prev,
                                   const std::map<std::string, UnitState>& now,
                                   const std::set<std::string>& objects_present) {
    std::set<std::string> dirty;
    for (const auto& [key, st] : now) {
        auto it = prev.find(key);
        if (it == prev.end() || it->second.text_hash != st.text_hash ||
            it->second.used != st.used)
            dirty.insert(key);
        else if (key.size() > 3 && key.substr(key.size() - 3) == ".m3" &&
                 !objects_present.count(key))
            dirty.insert(key);
    }
    return dirty;
}

DirtySet dirty_via_depcheck(const std::map<std::string, std::string>& prev_files,
                            const std::map<std::string, std::string>& now_files,
                            const std::set<std::string>& objects_present) {
    BuildState prev;
    prev.units = full_compile_states(prev_files);

    std::set<std::string> modified;
    std::vector<SourceFile> sources;
    std::map<std::string, UnitAst> ifaces;
    for (const auto& [fname, text] : now_files) {
        auto pit = prev_files.find(fname);
        if (pit == prev_files.end() || pit->second != text) modified.insert(fname);
        UnitAst ast = parse_unit(text);
        SourceFile sf;
        sf.path = fname;
        sf.unit_name = ast.name;
        sf.kind = ast.kind;
        sources.push_back(sf);
        if (ast.kind == UnitKind::Interface) ifaces[ast.name] = std::move(ast);
    }
    CurrentFingerprints cf = fingerprint_interfaces(ifaces, {});
    return compute_dirty_set(modified, sources, prev, cf, objects_present);
}

} // namespace m3::test
