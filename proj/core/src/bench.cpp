#include "m3/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <thread>
#include <vector>

#include "m3/cache.hpp"
#include "m3/client.hpp"
#include "m3/error.hpp"
#include "m3/server.hpp"

namespace m3 {

namespace fs = std::filesystem;

namespace {

uint64_t parse_number(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        uint64_t n = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return n;
    } catch (const std::exception&) {
        throw Error(Err::ScenarioInvalid, "'" + key + "' needs a number, got '" + value + "'");
    }
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    size_t n = xs.size();
    return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

std::string ms(double seconds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", seconds * 1000.0);
    return buf;
}

} // namespace

BenchScenario parse_scenario(const std::string& text) {
    BenchScenario sc;
    size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        lineno++;
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line[0] == '#') continue;
        size_t sp = line.find_first_of(" \t=");
        std::string key = line.substr(0, sp);
        std::string value;
        if (sp != std::string::npos) {
            size_t vb = line.find_first_not_of(" \t=", sp);
            if (vb != std::string::npos) value = line.substr(vb);
        }
        if (value.empty())
            throw Error(Err::ScenarioInvalid,
                        "line " + std::to_string(lineno) + ": '" + key + "' needs a value");
        if (key == "units") sc.params.units = static_cast<uint32_t>(parse_number(key, value));
        else if (key == "decls") sc.params.decls_per_unit = static_cast<uint32_t>(parse_number(key, value));
        else if (key == "fanout") sc.params.fanout = static_cast<uint32_t>(parse_number(key, value));
        else if (key == "seed") sc.seed = parse_number(key, value);
        else if (key == "edits") sc.edits = static_cast<uint32_t>(parse_number(key, value));
        else if (key == "repetitions") sc.repetitions = static_cast<uint32_t>(parse_number(key, value));
        else if (key == "edit_kind") {
            if (value == "used") sc.edit_kind = EditKind::UsedConst;
            else if (value == "unused") sc.edit_kind = EditKind::UnusedConst;
            else if (value == "module") sc.edit_kind = EditKind::ModuleBody;
            else
                throw Error(Err::ScenarioInvalid,
                            "edit_kind must be used, unused or module, got '" + value + "'");
        } else {
            throw Error(Err::ScenarioInvalid,
                        "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (sc.params.units == 0) throw Error(Err::ScenarioInvalid, "units must be at least 1");
    if (sc.repetitions == 0) throw Error(Err::ScenarioInvalid, "repetitions must be at least 1");
    if (sc.edits > sc.params.units)
        throw Error(Err::ScenarioInvalid, "more edits per build than units");
    return sc;
}

std::string BenchResult::table() const {
    std::string s;
    char buf[160];
    std::snprintf(buf, sizeof buf, "package: %u units, %u decls, fanout %u, %u edits/build\n",
                  scenario.params.units, scenario.params.decls_per_unit, scenario.params.fanout,
                  scenario.edits);
    s += buf;
    std::snprintf(buf, sizeof buf, "%-10s %14s %14s\n", "", "full (ms)", "incremental (ms)");
    s += buf;
    std::snprintf(buf, sizeof buf, "%-10s %14s %14s\n", "standard", ms(standard_full).c_str(),
                  ms(standard_incremental).c_str());
    s += buf;
    std::snprintf(buf, sizeof buf, "%-10s %14s %14s\n", "server", ms(server_full).c_str(),
                  ms(server_incremental).c_str());
    s += buf;
    std::snprintf(buf, sizeof buf, "speedup (standard full / server incremental): %.1fx\n",
                  speedup());
    s += buf;
    return s;
}

std::string BenchResult::kv() const {
    auto line = [](const char* key, double seconds) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s=%.3f\n", key, seconds * 1000.0);
        return std::string(buf);
    };
    std::string s;
    s += line("standard_full_ms", standard_full);
    s += line("standard_incremental_ms", standard_incremental);
    s += line("server_full_ms", server_full);
    s += line("server_incremental_ms", server_incremental);
    char buf[64];
    std::snprintf(buf, sizeof buf, "speedup=%.2f\n", speedup());
    s += buf;
    return s;
}

BenchResult run_bench(Vfs& vfs, const BenchScenario& scenario, const std::string& workdir,
                      const TextSink& sink) {
    BenchResult result;
    result.scenario = scenario;
    auto say = [&](const std::string& text) {
        if (sink) sink(text);
    };
    fs::create_directories(workdir);

    // Standard compiler, full build: every repetition starts from a clean
    // output directory and a cold cache, like a fresh compiler process.
    {
        std::string dir = workdir + "/standard";
        GeneratedPackage pkg = gen_package(vfs, dir, scenario.params, scenario.seed);
        std::vector<double> full;
        for (uint32_t r = 0; r < scenario.repetitions; r++) {
            fs::remove_all(dir + "/m3out");
            InterfaceCache cache(vfs);
            BuildExecutor exec(vfs, cache);
            PhaseReport rep = exec.build(dir, {}, nullptr);
            if (rep.failed)
                throw Error(Err::ScenarioInvalid, "standard full build failed: " + rep.error);
            full.push_back(rep.total);
        }
        result.standard_full = median(full);
        say("standard full: " + ms(result.standard_full) + " ms median\n");

        // Standard compiler, incremental: smart recompilation still prunes
        // the dirty set, but every run pays cold-cache parsing.
        std::vector<double> inc;
        for (uint32_t r = 0; r < scenario.repetitions; r++) {
            for (uint32_t e = 0; e < scenario.edits; e++)
                apply_edit(vfs, pkg, (r * scenario.edits + e) % scenario.params.units,
                           scenario.edit_kind);
            InterfaceCache cache(vfs);
            BuildExecutor exec(vfs, cache);
            PhaseReport rep = exec.build(dir, {}, nullptr);
            if (rep.failed)
                throw Error(Err::ScenarioInvalid,
                            "standard incremental build failed: " + rep.error);
            inc.push_back(rep.total);
        }
        result.standard_incremental = median(inc);
        say("standard incremental: " + ms(result.standard_incremental) + " ms median\n");
    }

    // Server configurations: one long-lived server, warm interface cache.
    {
        std::string dir = workdir + "/server";
        GeneratedPackage pkg = gen_package(vfs, dir, scenario.params, scenario.seed);
        ServerOptions opts;
        opts.socket_path = workdir + "/bench.sock";
        Server server(vfs, opts);
        server.start();
        std::thread executor([&] { server.serve(); });
        try {
            auto build = [&]() -> PhaseReport {
                ClientResult res = client_request(opts.socket_path, dir, {}, nullptr);
                if (res.exit_code != 0 || !res.got_report)
                    throw Error(Err::ScenarioInvalid,
                                "server build failed: " + res.report.error);
                return res.report;
            };
            build(); // warm the cache

            // Full rebuilds against a warm cache: outputs are erased, the
            // interface cache is not.
            std::vector<double> full;
            for (uint32_t r = 0; r < scenario.repetitions; r++) {
                fs::remove_all(dir + "/m3out");
                full.push_back(build().total);
            }
            result.server_full = median(full);
            say("server full: " + ms(result.server_full) + " ms median\n");

            std::vector<double> inc;
            for (uint32_t r = 0; r < scenario.repetitions; r++) {
                for (uint32_t e = 0; e < scenario.edits; e++)
                    apply_edit(vfs, pkg, (r * scenario.edits + e) % scenario.params.units,
                               scenario.edit_kind);
                inc.push_back(build().total);
            }
            result.server_incremental = median(inc);
            say("server incremental: " + ms(result.server_incremental) + " ms median\n");
        } catch (...) {
            request_shutdown(opts.socket_path);
            executor.join();
            throw;
        }
        request_shutdown(opts.socket_path);
        executor.join();
    }
    say(result.table());
    return result;
}

} // namespace m3
