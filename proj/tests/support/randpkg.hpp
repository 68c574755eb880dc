#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "m3/depcheck.hpp"

namespace m3::test {

// Model of a random package of interfaces and modules, regenerated to text
// after each model edit. Every reference recorded in the model appears
// verbatim in the emitted source, so "is this declaration used elsewhere"
// is answerable without reparsing.
struct RandomBuild {
    struct ConstDecl {
        std::string name;
        int64_t value = 0;
        std::vector<std::string> refs; // spelled as emitted: "K2" or "U1.K0"
    };
    struct ProcSigDecl {
        std::string name;
        int arity = 1;
    };
    struct ProcImpl {
        std::string name;  // implements the same-named interface procedure
        int64_t tweak = 0; // editable literal in the body
        std::vector<std::string> refs;
    };
    struct Iface {
        std::string name;
        std::vector<std::string> imports;
        std::vector<ConstDecl> consts;
        std::vector<ProcSigDecl> procs;
        bool has_module = false;
        std::vector<ProcImpl> impls;
    };

    std::vector<Iface> ifaces; // topologically ordered: imports point backward

    std::map<std::string, std::string> files() const; // unit file name -> text

    // All unit keys a make-style build would recompile after editing
    // `edited_key`: the file itself plus every unit whose transitive import
    // closure contains the edited interface.
    std::set<std::string> importer_closure(const std::string& edited_key) const;

    // True when some other unit's emitted source references iface.decl.
    bool used_outside(const std::string& iface, const std::string& decl) const;

    // Interfaces imported (directly) by at least `n` other units.
    std::vector<std::string> popular_ifaces(size_t n) const;
};

RandomBuild gen_build(std::mt19937_64& rng, int max_units);

struct EditResult {
    std::string unit_key;   // file that changed
    std::string iface;      // owning interface
    std::string decl;       // edited declaration
    bool interface_edit = false;
    bool used_elsewhere = false;
};

// One random single-declaration change: const value bump, new constant,
// procedure arity change (interface and module together count as the same
// declaration edit), or a module body tweak.
EditResult random_edit(std::mt19937_64& rng, RandomBuild& b);

// Pad-constant edit on an interface nothing else references, for the
// fine-grain-vs-file-grain comparison. Returns false when `iface` has no
// such constant.
bool edit_unused_const(RandomBuild& b, const std::string& iface, EditResult& out);

// Full fresh compile of every unit: text hash plus used-fingerprint map per
// unit key, mtimes zeroed. The independent input for the dirty-set oracle.
std::map<std::string, UnitState> full_compile_states(
    const std::map<std::string, std::string>& files);

// Units whose compilation inputs differ between the two full compiles:
// text changed, used fingerprints changed, newly appeared, or a module
// whose object is gone.
std::set<std::string> oracle_dirty(const std::map<std::string, UnitState>& prev,
                                   const std::map<std::string, UnitState>& now,
                                   const std::set<std::string>& objects_present);

// The production path for the same question, end to end: build prev state,
// detect modified keys by text hash, fingerprint the current sources, run
// compute_dirty_set.
DirtySet dirty_via_depcheck(const std::map<std::string, std::string>& prev_files,
                            const std::map<std::string, std::string>& now_files,
                            const std::set<std::string>& objects_present);

} // namespace m3::test
