#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "m3/ast.hpp"
#include "m3/typecheck.hpp"

namespace m3::test {

// Direct tree-walking evaluator over checked ASTs, sharing nothing with the
// code generator or the VM. Used as the semantics oracle in differential
// tests: for any valid program both executions must agree exactly.
class AstInterp {
public:
    void add_interface(const std::string& name, const InterfaceSummary& summary);
    void add_module(std::shared_ptr<const UnitAst> ast, CheckedUnit checked);

    // Runs module initializers in the given order, then calls `entry`
    // ("Module.Proc") with `args` and returns its value.
    int64_t run(const std::vector<std::string>& init_order, const std::string& entry,
                const std::vector<int64_t>& args);

    // Value of a module variable after run(), by mangled name "Module.var".
    int64_t global(const std::string& mangled) const;

private:
    struct Mod {
        std::shared_ptr<const UnitAst> ast;
        CheckedUnit checked;
    };
    struct Frame {
        std::map<std::string, int64_t> vars; // params and assigned locals
        std::set<std::string> locals;        // declared local names
    };

    int64_t call_proc(const std::string& module, const std::string& proc,
                      const std::vector<int64_t>& args);
    int64_t eval(const Mod& m, Frame& f, const Expr& e);
    bool exec(const Mod& m, Frame& f, const Stmt& s, int64_t& ret);
    const Mod& module_for(const std::string& name) const;
    void tick();

    std::map<std::string, Mod> mods_;
    std::map<std::string, InterfaceSummary> ifaces_;
    std::map<std::string, int64_t> globals_; // "Module.var"
    uint64_t steps_ = 0;
};

} // namespace m3::test
