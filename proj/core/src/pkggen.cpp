#include "m3/pkggen.hpp"

#include <filesystem>
#include <random>

#include "m3/error.hpp"
#include "m3/fnv.hpp"

namespace m3 {

namespace {

uint32_t rev_of(const std::map<std::string, uint32_t>& revs, const std::string& name) {
    auto it = revs.find(name);
    return it == revs.end() ? 0 : it->second;
}

// Stable small value for one declaration: a pure function of the package
// seed and the declaration's address, so regeneration never needs the
// original RNG stream.
int64_t value_of(uint64_t seed, const std::string& unit, const std::string& what) {
    return static_cast<int64_t>(
               fnv1a(std::to_string(seed) + ":" + unit + ":" + what) % 89) +
           1;
}

std::string interface_text(const GeneratedPackage& pkg, size_t i) {
    const std::string& name = pkg.names[i];
    std::string num = std::to_string(i + 1);
    const auto& imports = pkg.imports.at(name);
    std::string s = "INTERFACE " + name + ";\n";
    if (!imports.empty()) {
        s += "IMPORT ";
        for (size_t k = 0; k < imports.size(); k++)
            s += (k ? ", " : "") + imports[k];
        s += ";\n";
    }
    s += "\n";
    int64_t base = value_of(pkg.seed, name, "base") + rev_of(pkg.used_revs, name);
    s += "CONST Base" + num + " = " + std::to_string(base) + ";\n";
    for (uint32_t d = 1; d <= pkg.params.decls_per_unit; d++) {
        int64_t pad = value_of(pkg.seed, name, "pad" + std::to_string(d)) +
                      (d == 1 ? rev_of(pkg.pad_revs, name) : 0);
        s += "CONST Pad" + num + "_" + std::to_string(d) + " = " + std::to_string(pad) +
             ";\n";
    }
    s += "CONST Sum" + num + " = ";
    for (const auto& imp : imports)
        s += imp + ".Base" + imp.substr(1) + " + ";
    s += "Base" + num + ";\n";
    s += "\nPROCEDURE Get" + num + "(x: INTEGER): INTEGER;\n";
    s += "\nEND " + name + ".\n";
    return s;
}

std::string module_text(const GeneratedPackage& pkg, size_t i) {
    const std::string& name = pkg.names[i];
    std::string num = std::to_string(i + 1);
    const auto& imports = pkg.imports.at(name);
    std::string s = "MODULE " + name + ";\n";
    if (!imports.empty()) {
        s += "IMPORT ";
        for (size_t k = 0; k < imports.size(); k++)
            s += (k ? ", " : "") + imports[k];
        s += ";\n";
    }
    s += "\n";
    int64_t tweak = value_of(pkg.seed, name, "body") + rev_of(pkg.body_revs, name);
    s += "VAR Total" + num + ": INTEGER := " + std::to_string(value_of(pkg.seed, name, "total")) +
         ";\n";
    s += "\nPROCEDURE Get" + num + "(x: INTEGER): INTEGER =\n";
    s += "VAR t: INTEGER;\n";
    s += "BEGIN\n";
    s += "    t := x + Sum" + num + " + " + std::to_string(tweak) + ";\n";
    if (!imports.empty()) {
        // One call edge keeps the runtime call graph linear while the
        // fingerprint graph still fans out through Sum's references.
        const std::string& callee = imports.front();
        s += "    t := t + " + callee + ".Get" + callee.substr(1) + "(x);\n";
    }
    s += "    RETURN t\n";
    s += "END Get" + num + ";\n";
    s += "\nBEGIN\n";
    s += "    Total" + num + " := Total" + num + " + Base" + num + "\n";
    s += "END " + name + ".\n";
    return s;
}

std::string main_text(const GeneratedPackage& pkg) {
    std::string s = "MODULE Main;\n";
    s += "IMPORT ";
    for (size_t i = 0; i < pkg.names.size(); i++) s += (i ? ", " : "") + pkg.names[i];
    s += ";\n";
    s += "\nPROCEDURE Main(): INTEGER =\n";
    s += "VAR acc: INTEGER;\n";
    s += "BEGIN\n";
    s += "    acc := 0;\n";
    for (size_t i = 0; i < pkg.names.size(); i++) {
        std::string num = std::to_string(i + 1);
        s += "    acc := acc + " + pkg.names[i] + ".Get" + num + "(" + num + ");\n";
    }
    s += "    RETURN acc\n";
    s += "END Main;\n";
    s += "\nEND Main.\n";
    return s;
}

std::string manifest_text(const GeneratedPackage& pkg) {
    std::string s = "m3package\nname Gen\n";
    for (const auto& name : pkg.names) {
        s += "unit " + name + ".i3\n";
        s += "unit " + name + ".m3\n";
    }
    s += "unit Main.m3\n";
    s += "entry Main.Main\n";
    return s;
}

} // namespace

GeneratedPackage gen_package(Vfs& vfs, const std::string& dir, const PackageParams& params,
                             uint64_t seed) {
    if (params.units == 0)
        throw Error(Err::ScenarioInvalid, "a package needs at least one unit");
    GeneratedPackage pkg;
    pkg.dir = dir;
    pkg.params = params;
    pkg.seed = seed;
    for (uint32_t i = 1; i <= params.units; i++) pkg.names.push_back("U" + std::to_string(i));

    // Import edges point strictly backwards, so the graph is acyclic by
    // construction; raw engine outputs keep the choice portable.
    std::mt19937_64 rng(seed);
    for (uint32_t i = 0; i < params.units; i++) {
        uint32_t k = std::min(params.fanout, i);
        std::vector<uint32_t> cand;
        for (uint32_t j = 0; j < i; j++) cand.push_back(j);
        for (uint32_t t = 0; t < k; t++)
            std::swap(cand[t], cand[t + rng() % (cand.size() - t)]);
        std::vector<uint32_t> picked(cand.begin(), cand.begin() + k);
        std::sort(picked.begin(), picked.end());
        auto& imp = pkg.imports[pkg.names[i]];
        for (uint32_t j : picked) imp.push_back(pkg.names[j]);
    }

    std::filesystem::create_directories(dir);
    vfs.write(dir + "/m3package", manifest_text(pkg));
    for (size_t i = 0; i < pkg.names.size(); i++) {
        vfs.write(dir + "/" + pkg.names[i] + ".i3", interface_text(pkg, i));
        vfs.write(dir + "/" + pkg.names[i] + ".m3", module_text(pkg, i));
    }
    vfs.write(dir + "/Main.m3", main_text(pkg));
    return pkg;
}

void apply_edit(Vfs& vfs, GeneratedPackage& pkg, uint32_t unit_index, EditKind kind) {
    if (unit_index >= pkg.names.size())
        throw Error(Err::ScenarioInvalid,
                    "edit target " + std::to_string(unit_index) + " out of range");
    const std::string& name = pkg.names[unit_index];
    std::string path;
    std::string text;
    switch (kind) {
    case EditKind::UsedConst:
        pkg.used_revs[name] += 1;
        path = pkg.dir + "/" + name + ".i3";
        text = interface_text(pkg, unit_index);
        break;
    case EditKind::UnusedConst:
        if (pkg.params.decls_per_unit == 0)
            throw Error(Err::ScenarioInvalid, "package has no filler constants to edit");
        pkg.pad_revs[name] += 1;
        path = pkg.dir + "/" + name + ".i3";
        text = interface_text(pkg, unit_index);
        break;
    case EditKind::ModuleBody:
        pkg.body_revs[name] += 1;
        path = pkg.dir + "/" + name + ".m3";
        text = module_text(pkg, unit_index);
        break;
    }
    auto before = vfs.stat(path);
    vfs.write(path, text);
    // A full-second bump past the previous stamp: edit-build cycles faster
    // than the filesystem clock still register, and repeated edits stay
    // strictly ordered.
    if (before) set_mtime(path, before->mtime_sec + 1, before->mtime_nsec);
}

} // namespace m3
