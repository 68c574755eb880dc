#pragma once

#include <map>
#include <string>
#include <vector>

#include "m3/ast.hpp"
#include "m3/codegen.hpp"
#include "m3/linker.hpp"
#include "m3/typecheck.hpp"
#include "m3/vfs.hpp"

namespace m3::test {

// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string sub(const std::string& rel) const { return path_ + "/" + rel; }

private:
    std::string path_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Writes sources plus an `m3package` manifest into `dir`. Keys of `files`
// are unit file names ("A.i3"); extra manifest lines (library/entry) come
// from the remaining arguments.
void write_package(const std::string& dir, const std::string& name,
                   const std::map<std::string, std::string>& files,
                   const std::vector<std::string>& libraries = {},
                   const std::string& entry = "");

// The running example: interfaces A-E and a program module P with import
// edges P->{A,B,C}, A->{B,D}, B->{D,E}, C->{B}. P.Main computes 32.
std::map<std::string, std::string> fig2_sources();
inline constexpr int64_t kFig2Result = 32;

// Whole-program compile straight through the library API: parse everything,
// expand instantiations, typecheck interfaces in dependency order, compile
// modules, prelink and link. Keys of `files` are unit file names.
struct CompiledProgram {
    std::map<std::string, UnitAst> interfaces;
    std::vector<GeneratedUnit> objects;
    Image image;
};

CompiledProgram compile_program(const std::map<std::string, std::string>& files,
                                const std::string& entry);

// Runs the same sources in the AST interpreter: module initializers in
// `init_order`, then the entry procedure.
int64_t interp_program(const std::map<std::string, std::string>& files,
                       const std::vector<std::string>& init_order, const std::string& entry,
                       const std::vector<int64_t>& args);

} // namespace m3::test
