#include "m3/server.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "m3/error.hpp"

namespace m3 {

namespace {

void set_io_timeouts(int fd) {
    // A peer that stalls the handshake or stops reading mid-stream is
    // dropped rather than wedging a server thread.
    timeval tv{30, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

sockaddr_un socket_address(const std::string& path) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path)
        throw Error(Err::IoError, "socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    return addr;
}

} // namespace

Server::Server(Vfs& vfs, ServerOptions opts)
    : vfs_(&vfs), opts_(std::move(opts)), cache_(vfs), exec_(vfs, cache_) {
    path_ = opts_.socket_path.empty() ? default_socket_path() : opts_.socket_path;
    if (opts_.cache_bytes) cache_.set_byte_budget(*opts_.cache_bytes);
}

Server::~Server() { teardown(); }

void Server::start() {
    sockaddr_un addr = socket_address(path_);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw Error(Err::IoError, std::string("socket: ") + std::strerror(errno));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        if (errno != EADDRINUSE) {
            int e = errno;
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw Error(Err::IoError, "bind " + path_ + ": " + std::strerror(e));
        }
        // A socket file exists. Live server -> refuse; stale file -> replace.
        int probe = ::socket(AF_UNIX, SOCK_STREAM, 0);
        bool alive = probe >= 0 &&
                     ::connect(probe, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
        if (probe >= 0) ::close(probe);
        if (alive) {
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw Error(Err::IoError, "a server is already listening at " + path_);
        }
        ::unlink(path_.c_str());
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            int e = errno;
            ::close(listen_fd_);
            listen_fd_ = -1;
            throw Error(Err::IoError, "bind " + path_ + ": " + std::strerror(e));
        }
    }
    if (::listen(listen_fd_, 16) != 0) {
        int e = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        ::unlink(path_.c_str());
        throw Error(Err::IoError, "listen " + path_ + ": " + std::strerror(e));
    }
    acceptor_ = std::thread(&Server::acceptor, this);
}

void Server::acceptor() {
    for (;;) {
        int cfd = ::accept(listen_fd_, nullptr, nullptr);
        if (cfd < 0) {
            if (errno == EINTR) continue;
            return; // listener shut down
        }
        set_io_timeouts(cfd);
        std::lock_guard lk(handlers_mu_);
        handlers_.emplace_back(&Server::handle_connection, this, cfd);
    }
}

void Server::handle_connection(int fd) {
    try {
        auto hello = recv_frame(fd);
        if (!hello || hello->kind != Msg::Hello) {
            ::close(fd);
            return;
        }
        uint16_t peer = decode_hello(hello->payload);
        send_frame(fd, Msg::Hello, encode_hello());
        if (peer != kProtocolVersion) {
            ::close(fd); // the client reads our version and reports the mismatch
            return;
        }
        auto req = recv_frame(fd);
        if (!req) {
            ::close(fd);
            return;
        }
        if (req->kind == Msg::Build) {
            Job job;
            job.fd = fd;
            job.req = decode_build(req->payload);
            job.arrival = std::chrono::steady_clock::now();
            enqueue(std::move(job));
            return; // the executor owns the connection now
        }
        if (req->kind == Msg::Shutdown) {
            Job job;
            job.fd = fd;
            job.shutdown = true;
            job.arrival = std::chrono::steady_clock::now();
            enqueue(std::move(job));
            return;
        }
        throw Error(Err::ProtocolError, "expected a build or shutdown request");
    } catch (const std::exception& e) {
        std::string text = std::string("error: ") + e.what() + "\n";
        try {
            send_frame(fd, Msg::Text, std::vector<uint8_t>(text.begin(), text.end()));
            send_frame(fd, Msg::Done, encode_done(2));
        } catch (...) {
        }
        ::close(fd);
    }
}

void Server::enqueue(Job job) {
    {
        std::lock_guard lk(queue_mu_);
        queue_.push_back(std::move(job));
    }
    queue_cv_.notify_one();
}

void Server::serve() {
    if (listen_fd_ < 0) start();
    bool draining = false;
    std::vector<int> shutdown_fds;
    for (;;) {
        Job job;
        {
            std::unique_lock lk(queue_mu_);
            if (draining && queue_.empty()) break;
            queue_cv_.wait(lk, [&] { return !queue_.empty(); });
            job = std::move(queue_.front());
            queue_.pop_front();
        }
        if (job.shutdown) {
            shutdown_fds.push_back(job.fd);
            if (!draining) {
                draining = true;
                stop_accepting(); // no new connections; finish what is queued
            }
            continue;
        }
        run_build(job);
    }
    for (int fd : shutdown_fds) {
        try {
            send_frame(fd, Msg::Done, encode_done(0));
        } catch (...) {
        }
        ::close(fd);
    }
    teardown();
}

void Server::run_build(Job& job) {
    double queue_wait = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      job.arrival)
                            .count();
    bool broken = false;
    TextSink sink = [&](std::string_view text) {
        if (broken) return;
        try {
            send_frame(job.fd, Msg::Text, std::vector<uint8_t>(text.begin(), text.end()));
        } catch (...) {
            // Client went away; the build carries on so its state persists.
            broken = true;
        }
    };
    in_build_ = true;
    PhaseReport report = exec_.build(job.req.package_dir, job.req.options, sink);
    in_build_ = false;
    builds_run_ += 1;
    report.queue_wait = queue_wait;
    if (!broken) {
        try {
            send_frame(job.fd, Msg::Report, encode_report(report));
            send_frame(job.fd, Msg::Done, encode_done(report.failed ? 1 : 0));
        } catch (...) {
        }
    }
    ::close(job.fd);
}

void Server::stop_accepting() {
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
}

void Server::teardown() {
    if (torn_down_) return;
    torn_down_ = true;
    stop_accepting();
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> handlers;
    {
        std::lock_guard lk(handlers_mu_);
        handlers.swap(handlers_);
    }
    for (auto& h : handlers)
        if (h.joinable()) h.join();
    // Connections still queued were never answered; close them.
    std::lock_guard lk(queue_mu_);
    for (auto& job : queue_)
        if (job.fd >= 0) ::close(job.fd);
    queue_.clear();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        ::unlink(path_.c_str());
    }
}

} // namespace m3
