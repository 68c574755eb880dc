#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "interp.hpp"
#include "m3/error.hpp"
#include "m3/ir.hpp"
#include "m3/lower.hpp"
#include "m3/parse.hpp"
#include "m3/source.hpp"

namespace m3::test {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "m3test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data()))
        throw std::runtime_error("mkdtemp failed for " + tmpl);
    path_ = buf.data();
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw std::runtime_error("cannot write " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_package(const std::string& dir, const std::string& name,
                   const std::map<std::string, std::string>& files,
                   const std::vector<std::string>& libraries, const std::string& entry) {
    fs::create_directories(dir);
    std::string manifest = "m3package\nname " + name + "\n";
    for (const auto& [fname, text] : files) {
        write_file(dir + "/" + fname, text);
        manifest += "unit " + fname + "\n";
    }
    for (const auto& lib : libraries)
        manifest += "library " + lib + "\n";
    if (!entry.empty())
        manifest += "entry " + entry + "\n";
    write_file(dir + "/m3package", manifest);
}

std::map<std::string, std::string> fig2_sources() {
    return {
        {"E.i3", "INTERFACE E;\nCONST EVal = 5;\nEND E.\n"},
        {"D.i3", "INTERFACE D;\nCONST DVal = 4;\nEND D.\n"},
        {"B.i3",
         "INTERFACE B;\nIMPORT D, E;\nCONST BVal = D.DVal + E.EVal;\nEND B.\n"},
        {"C.i3", "INTERFACE C;\nIMPORT B;\nCONST CVal = B.BVal + 1;\nEND C.\n"},
        {"A.i3",
         "INTERFACE A;\nIMPORT B, D;\nCONST AVal = B.BVal + D.DVal;\nEND A.\n"},
        {"P.m3",
         "MODULE P;\nIMPORT A, B, C;\n"
         "PROCEDURE Main(): INTEGER =\n"
         "BEGIN\n  RETURN A.AVal + B.BVal + C.CVal\nEND Main;\n"
         "END P.\n"},
    };
}

namespace {

// Interfaces in import-dependency order, imports first. Only edges between
// interfaces present in the map count.
std::vector<std::string> topo_interfaces(const std::map<std::string, UnitAst>& ifaces) {
    std::vector<std::string> order;
    std::set<std::string> done, visiting;
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        if (done.count(name)) return;
        if (!visiting.insert(name).second)
            throw std::runtime_error("interface import cycle through " + name);
        auto it = ifaces.find(name);
        if (it != ifaces.end()) {
            for (const auto& imp : it->second.imports)
                if (ifaces.count(imp)) visit(imp);
            order.push_back(name);
        }
        visiting.erase(name);
        done.insert(name);
    };
    for (const auto& [name, ast] : ifaces) visit(name);
    return order;
}

} // namespace

CompiledProgram compile_program(const std::map<std::string, std::string>& files,
                                const std::string& entry) {
    std::map<std::string, std::string> generic_src, module_src, iface_src;
    for (const auto& [fname, text] : files) {
        auto kind = classify_path(fname);
        if (!kind)
            throw std::runtime_error("unclassifiable unit file " + fname);
        std::string name = unit_name_from_path(fname);
        switch (*kind) {
            case UnitKind::Interface: iface_src[name] = text; break;
            case UnitKind::Module: module_src[name] = text; break;
            case UnitKind::GenericInterface: generic_src[name] = text; break;
        }
    }

    CompiledProgram out;
    for (const auto& [name, text] : iface_src) {
        UnitAst ast = parse_unit(text);
        if (ast.is_instantiation) {
            auto git = generic_src.find(ast.generic_name);
            if (git == generic_src.end())
                throw std::runtime_error(name + " instantiates unknown generic " +
                                         ast.generic_name);
            ast = instantiate_generic(ast, git->second);
        }
        out.interfaces[name] = std::move(ast);
    }

    TypeEnv env;
    for (const auto& name : topo_interfaces(out.interfaces))
        env[name] = typecheck_unit(out.interfaces.at(name), env).exports;

    for (const auto& [name, text] : module_src) {
        UnitAst ast = parse_unit(text);
        CheckedUnit checked = typecheck_unit(ast, env);
        UnitIr ir = lower_unit(ast, checked, env);
        validate_ir(ir);
        GeneratedUnit gen = generate_code(ir);
        std::set<std::string> imps(ast.imports.begin(), ast.imports.end());
        auto pit = out.interfaces.find(name);
        if (pit != out.interfaces.end()) {
            imps.insert(name);
            for (const auto& i : pit->second.imports) imps.insert(i);
        }
        gen.imports.assign(imps.begin(), imps.end());
        out.objects.push_back(std::move(gen));
    }

    Prelinked pre = prelink(out.objects, out.interfaces);
    out.image = link(out.objects, pre, entry);
    return out;
}

int64_t interp_program(const std::map<std::string, std::string>& files,
                       const std::vector<std::string>& init_order, const std::string& entry,
                       const std::vector<int64_t>& args) {
    std::map<std::string, std::string> generic_src, module_src, iface_src;
    for (const auto& [fname, text] : files) {
        auto kind = classify_path(fname);
        std::string name = unit_name_from_path(fname);
        if (kind == UnitKind::Interface) iface_src[name] = text;
        else if (kind == UnitKind::Module) module_src[name] = text;
        else generic_src[name] = text;
    }

    std::map<std::string, UnitAst> ifaces;
    for (const auto& [name, text] : iface_src) {
        UnitAst ast = parse_unit(text);
        if (ast.is_instantiation)
            ast = instantiate_generic(ast, generic_src.at(ast.generic_name));
        ifaces[name] = std::move(ast);
    }

    TypeEnv env;
    for (const auto& name : topo_interfaces(ifaces))
        env[name] = typecheck_unit(ifaces.at(name), env).exports;

    AstInterp interp;
    for (const auto& [name, summary] : env) interp.add_interface(name, summary);
    for (const auto& [name, text] : module_src) {
        auto ast = std::make_shared<UnitAst>(parse_unit(text));
        CheckedUnit checked = typecheck_unit(*ast, env);
        interp.add_module(ast, std::move(checked));
    }
    return interp.run(init_order, entry, args);
}

} // namespace m3::test
