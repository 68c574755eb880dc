#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "m3/bench.hpp"
#include "m3/cache.hpp"
#include "m3/client.hpp"
#include "m3/error.hpp"
#include "m3/linker.hpp"
#include "m3/phase.hpp"
#include "m3/pipeline.hpp"
#include "m3/protocol.hpp"
#include "m3/server.hpp"
#include "m3/vfs.hpp"
#include "m3/vm.hpp"

namespace {

namespace fs = std::filesystem;

m3::TextSink stdout_sink() {
    return [](std::string_view text) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        std::fflush(stdout);
    };
}

int build_local(m3::Vfs& vfs, const std::string& dir, const std::vector<std::string>& options) {
    m3::InterfaceCache cache(vfs);
    m3::BuildExecutor exec(vfs, cache);
    std::string abs = fs::absolute(dir).lexically_normal().string();
    m3::PhaseReport report = exec.build(abs, options, stdout_sink());
    std::fputs(m3::format_report(report).c_str(), stdout);
    return report.failed ? 1 : 0;
}

int build_command(const std::string& dir, bool local, std::string socket, bool fallback,
                  const std::vector<std::string>& options) {
    m3::Vfs vfs;
    if (local)
        return build_local(vfs, dir, options);
    if (socket.empty())
        socket = m3::default_socket_path();
    try {
        m3::ClientResult res = m3::client_request(socket, dir, options, stdout_sink());
        if (res.got_report)
            std::fputs(m3::format_report(res.report).c_str(), stdout);
        return res.exit_code;
    } catch (const m3::Error& e) {
        if (e.code() == m3::Err::ConnectFailed && fallback)
            return build_local(vfs, dir, options);
        std::fprintf(stderr, "m3c: %s\n", m3::format_diagnostic(e).c_str());
        return 2;
    }
}

int serve_command(const std::string& socket, std::optional<uint64_t> cache_bytes) {
    m3::Vfs vfs;
    m3::ServerOptions opts;
    opts.socket_path = socket;
    opts.cache_bytes = cache_bytes;
    m3::Server server(vfs, std::move(opts));
    server.start();
    std::printf("listening at %s\n", server.socket_path().c_str());
    std::fflush(stdout);
    server.serve();
    return 0;
}

int run_command(const std::string& image_path, const std::string& entry,
                const std::vector<int64_t>& args) {
    m3::Vfs vfs;
    std::optional<std::string> bytes = vfs.read(image_path);
    if (!bytes)
        throw m3::Error(m3::Err::IoError, "cannot read image: " + image_path);
    m3::Image image = m3::decode_image(*bytes);
    m3::VmResult result = m3::load_and_run(image, entry, args);
    std::printf("%lld\n", static_cast<long long>(result.value));
    return 0;
}

int bench_command(const std::string& config_path) {
    m3::Vfs vfs;
    std::optional<std::string> text = vfs.read(config_path);
    if (!text)
        throw m3::Error(m3::Err::IoError, "cannot read scenario: " + config_path);
    m3::BenchScenario scenario = m3::parse_scenario(*text);
    fs::path workdir =
        fs::temp_directory_path() / ("m3bench-" + std::to_string(::getpid()));
    fs::create_directories(workdir);
    m3::BenchResult result;
    try {
        result = m3::run_bench(vfs, scenario, workdir.string(), stdout_sink());
    } catch (...) {
        std::error_code ec;
        fs::remove_all(workdir, ec);
        throw;
    }
    std::error_code ec;
    fs::remove_all(workdir, ec);
    std::fputs(result.table().c_str(), stdout);
    std::fputs(result.kv().c_str(), stdout);
    return 0;
}

int shutdown_command(std::string socket) {
    if (socket.empty())
        socket = m3::default_socket_path();
    int status = m3::request_shutdown(socket);
    if (status != 0)
        std::fprintf(stderr, "m3c: no server at %s\n", socket.c_str());
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental compiler with a persistent compilation server"};
    app.require_subcommand(1);

    std::string build_dir;
    bool local = false;
    std::string server_socket;
    bool fallback = false;
    std::vector<std::string> options;
    CLI::App* build = app.add_subcommand("build", "compile a package directory");
    build->add_option("dir", build_dir, "package directory")->required();
    CLI::Option* local_opt =
        build->add_flag("--local", local, "run in-process instead of contacting a server");
    CLI::Option* server_opt =
        build->add_option("--server", server_socket, "server socket path");
    build->add_flag("--fallback-local", fallback,
                    "build in-process when no server answers");
    build->add_option("--option", options, "extra build options, passed through");
    local_opt->excludes(server_opt);

    std::string serve_socket;
    uint64_t cache_bytes = 0;
    CLI::App* serve = app.add_subcommand("serve", "run the compilation server");
    serve->add_option("--socket", serve_socket, "listening socket path");
    CLI::Option* cache_opt =
        serve->add_option("--cache-bytes", cache_bytes, "interface cache byte budget");

    std::string image_path;
    std::string entry;
    std::vector<int64_t> run_args;
    CLI::App* run = app.add_subcommand("run", "execute a linked image");
    run->add_option("image", image_path, "image file")->required();
    run->add_option("entry", entry, "entry procedure, Module.Proc")->required();
    run->add_option("args", run_args, "integer arguments");

    std::string config_path;
    CLI::App* bench = app.add_subcommand("bench", "compare server and standard builds");
    bench->add_option("config", config_path, "scenario file")->required();

    std::string shutdown_socket;
    CLI::App* shutdown = app.add_subcommand("shutdown", "stop the server after its queue drains");
    shutdown->add_option("--socket", shutdown_socket, "server socket path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (build->parsed())
            return build_command(build_dir, local, server_socket, fallback, options);
        if (serve->parsed())
            return serve_command(serve_socket, cache_opt->count() > 0
                                                   ? std::optional<uint64_t>(cache_bytes)
                                                   : std::nullopt);
        if (run->parsed())
            return run_command(image_path, entry, run_args);
        if (bench->parsed())
            return bench_command(config_path);
        if (shutdown->parsed())
            return shutdown_command(shutdown_socket);
    } catch (const m3::Error& e) {
        std::fprintf(stderr, "m3c: %s\n", m3::format_diagnostic(e).c_str());
        return e.code() == m3::Err::ConnectFailed ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "m3c: error: %s\n", e.what());
        return 1;
    }
    return 64;
}
