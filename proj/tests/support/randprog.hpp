#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace m3::test {

// A randomly generated, always-valid multi-module program. Procedures only
// call procedures with strictly smaller sequence numbers, so every program
// terminates; locals are assigned before use; call statements only target
// proper procedures. `uncalled` lists mangled procedure symbols that no
// static call path from the entry point or any module initializer reaches.
struct RandomProgram {
    std::map<std::string, std::string> files; // "M1.i3" / "M1.m3" -> source
    std::string entry;                        // "Mn.Main"
    std::vector<int64_t> args;
    std::set<std::string> uncalled;
};

RandomProgram gen_program(std::mt19937_64& rng);

} // namespace m3::test
