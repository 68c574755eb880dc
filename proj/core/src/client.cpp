#include "m3/client.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "m3/error.hpp"
#include "m3/protocol.hpp"

namespace m3 {

namespace {

struct Fd {
    int fd = -1;
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
};

int connect_to(const std::string& path) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path)
        throw Error(Err::ConnectFailed, "socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0)
        throw Error(Err::ConnectFailed, std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int e = errno;
        ::close(fd);
        throw Error(Err::ConnectFailed,
                    "no server at " + path + ": " + std::strerror(e));
    }
    return fd;
}

// Hello exchange; on return the server speaks our version.
void handshake(int fd, const std::string& path) {
    send_frame(fd, Msg::Hello, encode_hello());
    auto reply = recv_frame(fd);
    if (!reply || reply->kind != Msg::Hello)
        throw Error(Err::ProtocolError, "server at " + path + " sent no hello");
    uint16_t version = decode_hello(reply->payload);
    if (version != kProtocolVersion)
        throw Error(Err::ProtocolVersionMismatch,
                    "server speaks protocol v" + std::to_string(version) + ", this client v" +
                        std::to_string(kProtocolVersion));
}

} // namespace

ClientResult client_request(const std::string& socket_path, const std::string& package_dir,
                            const std::vector<std::string>& options, const TextSink& sink) {
    Fd conn{connect_to(socket_path)};
    handshake(conn.fd, socket_path);

    BuildRequest req;
    req.package_dir = std::filesystem::absolute(package_dir).lexically_normal().string();
    req.options = options;
    send_frame(conn.fd, Msg::Build, encode_build(req));

    ClientResult result;
    for (;;) {
        auto frame = recv_frame(conn.fd);
        if (!frame) throw Error(Err::ProtocolError, "server closed before finishing the build");
        if (frame->kind == Msg::Text) {
            if (sink)
                sink(std::string_view(reinterpret_cast<const char*>(frame->payload.data()),
                                      frame->payload.size()));
        } else if (frame->kind == Msg::Report) {
            result.report = decode_report(frame->payload);
            result.got_report = true;
        } else if (frame->kind == Msg::Done) {
            result.exit_code = decode_done(frame->payload);
            break;
        } else {
            throw Error(Err::ProtocolError, "unexpected frame from server");
        }
    }
    return result;
}

int request_shutdown(const std::string& socket_path) {
    int raw;
    try {
        raw = connect_to(socket_path);
    } catch (const Error&) {
        return 2;
    }
    Fd conn{raw};
    handshake(conn.fd, socket_path);
    send_frame(conn.fd, Msg::Shutdown, {});
    auto frame = recv_frame(conn.fd);
    if (!frame || frame->kind != Msg::Done)
        throw Error(Err::ProtocolError, "server did not acknowledge shutdown");
    return decode_done(frame->payload);
}

} // namespace m3
