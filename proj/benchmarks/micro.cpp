#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "m3/codegen.hpp"
#include "m3/fingerprint.hpp"
#include "m3/lexer.hpp"
#include "m3/linker.hpp"
#include "m3/lower.hpp"
#include "m3/objfile.hpp"
#include "m3/parse.hpp"
#include "m3/typecheck.hpp"
#include "m3/vm.hpp"

namespace {

using namespace m3;

// Interface with a chain of referencing constants and a few procedures, so
// fingerprinting has real reference graphs to fold.
std::string interface_source(int decls) {
    std::string s = "INTERFACE Big;\n";
    for (int i = 0; i < decls; i++) {
        s += "CONST C" + std::to_string(i) + " = " + std::to_string(i + 1);
        if (i > 0) s += " + C" + std::to_string(i - 1);
        s += ";\n";
    }
    for (int i = 0; i < decls / 4 + 1; i++)
        s += "PROCEDURE P" + std::to_string(i) + "(x: INTEGER): INTEGER;\n";
    s += "END Big.\n";
    return s;
}

std::string module_source(int procs) {
    std::string s = "MODULE Gen;\n";
    for (int i = 0; i < procs; i++) {
        std::string n = std::to_string(i);
        s += "PROCEDURE P" + n + "(x, y: INTEGER): INTEGER =\n";
        s += "VAR t: INTEGER;\n";
        s += "BEGIN\n";
        s += "  t := x * y + " + n + ";\n";
        s += "  t := t + t * 2;\n";
        s += "  RETURN t - y\n";
        s += "END P" + n + ";\n";
    }
    s += "BEGIN\nEND Gen.\n";
    return s;
}

GeneratedUnit compile_module(const std::string& src) {
    UnitAst ast = parse_unit(src);
    CheckedUnit checked = typecheck_unit(ast, {});
    UnitIr ir = lower_unit(ast, checked, {});
    return generate_code(ir);
}

void BM_Lex(benchmark::State& state) {
    std::string src = interface_source(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(lex(src));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(src.size()));
}
BENCHMARK(BM_Lex)->Arg(16)->Arg(256);

void BM_Parse(benchmark::State& state) {
    std::string src = interface_source(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(parse_unit(src));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(src.size()));
}
BENCHMARK(BM_Parse)->Arg(16)->Arg(256);

void BM_Fingerprint(benchmark::State& state) {
    UnitAst ast = parse_unit(interface_source(static_cast<int>(state.range(0))));
    for (auto _ : state)
        benchmark::DoNotOptimize(fingerprint_unit(ast, {}));
}
BENCHMARK(BM_Fingerprint)->Arg(16)->Arg(256);

void BM_Codegen(benchmark::State& state) {
    std::string src = module_source(static_cast<int>(state.range(0)));
    UnitAst ast = parse_unit(src);
    CheckedUnit checked = typecheck_unit(ast, {});
    UnitIr ir = lower_unit(ast, checked, {});
    for (auto _ : state)
        benchmark::DoNotOptimize(generate_code(ir));
}
BENCHMARK(BM_Codegen)->Arg(4)->Arg(64);

void BM_ObjectRoundtrip(benchmark::State& state) {
    GeneratedUnit obj = compile_module(module_source(32));
    for (auto _ : state) {
        std::string bytes = encode_object(obj);
        benchmark::DoNotOptimize(decode_object(bytes));
    }
}
BENCHMARK(BM_ObjectRoundtrip);

void BM_VmCall(benchmark::State& state) {
    GeneratedUnit obj = compile_module(
        "MODULE Prog;\n"
        "PROCEDURE Add(i, j: INTEGER): INTEGER =\n"
        "BEGIN RETURN i + j END Add;\n"
        "BEGIN\nEND Prog.\n");
    Image image = link({obj}, prelink({obj}, {}), "Prog.Add");
    for (auto _ : state)
        benchmark::DoNotOptimize(load_and_run(image, "Prog.Add", {2, 3}));
}
BENCHMARK(BM_VmCall);

} // namespace

BENCHMARK_MAIN();
