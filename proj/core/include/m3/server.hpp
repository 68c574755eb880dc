#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "m3/cache.hpp"
#include "m3/pipeline.hpp"
#include "m3/protocol.hpp"
#include "m3/vfs.hpp"

namespace m3 {

struct ServerOptions {
    std::string socket_path;             // empty: default_socket_path()
    std::optional<uint64_t> cache_bytes; // interface cache byte budget
};

// Compilation server. Connections are accepted and read concurrently, but
// requests funnel into one FIFO queue consumed by a single executor — the
// interface cache is touched by exactly one build at a time, and stays warm
// across them. A shutdown request stops the listener, lets the queue drain,
// and is acknowledged last.
class Server {
public:
    Server(Vfs& vfs, ServerOptions opts = {});
    ~Server();

    // Binds the socket and starts accepting. Raises IoError when another
    // server already listens here; a stale socket file is replaced.
    void start();

    // Runs queued builds on the calling thread until a shutdown request has
    // been processed and the queue is empty.
    void serve();

    const std::string& socket_path() const { return path_; }
    InterfaceCache& cache() { return cache_; }
    uint64_t builds_run() const { return builds_run_; }
    bool in_build() const { return in_build_; }

private:
    struct Job {
        int fd = -1;
        bool shutdown = false;
        BuildRequest req;
        std::chrono::steady_clock::time_point arrival;
    };

    void acceptor();
    void handle_connection(int fd);
    void enqueue(Job job);
    void run_build(Job& job);
    void stop_accepting();
    void teardown();

    Vfs* vfs_;
    ServerOptions opts_;
    std::string path_;
    InterfaceCache cache_;
    BuildExecutor exec_;

    int listen_fd_ = -1;
    std::thread acceptor_;
    std::mutex handlers_mu_;
    std::vector<std::thread> handlers_;

    std::mutex queue_mu_;
    std::condition_variable queue_cv_;
    std::deque<Job> queue_;

    std::atomic<bool> in_build_{false};
    std::atomic<uint64_t> builds_run_{0};
    bool torn_down_ = false;
};

} // namespace m3
