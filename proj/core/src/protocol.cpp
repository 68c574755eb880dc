#include "m3/protocol.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "m3/bytes.hpp"
#include "m3/error.hpp"

namespace m3 {

namespace {

void write_all(int fd, const uint8_t* data, size_t n) {
    while (n > 0) {
        ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw Error(Err::ProtocolError,
                        std::string("connection write failed: ") + std::strerror(errno));
        }
        data += w;
        n -= static_cast<size_t>(w);
    }
}

// False on clean EOF at offset 0; throws on EOF mid-buffer.
bool read_all(int fd, uint8_t* data, size_t n) {
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd, data + got, n - got, 0);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw Error(Err::ProtocolError,
                        std::string("connection read failed: ") + std::strerror(errno));
        }
        if (r == 0) {
            if (got == 0) return false;
            throw Error(Err::ProtocolError, "connection closed mid-frame");
        }
        got += static_cast<size_t>(r);
    }
    return true;
}

} // namespace

void send_frame(int fd, Msg kind, const std::vector<uint8_t>& payload) {
    if (payload.size() > kMaxFrameBytes)
        throw Error(Err::ProtocolError, "frame too large to send");
    ByteWriter w;
    w.u32(static_cast<uint32_t>(payload.size()));
    w.u8(static_cast<uint8_t>(kind));
    w.bytes(payload.data(), payload.size());
    write_all(fd, w.data().data(), w.size());
}

std::optional<Frame> recv_frame(int fd) {
    uint8_t head[5];
    if (!read_all(fd, head, sizeof head)) return std::nullopt;
    ByteReader r(std::span<const uint8_t>(head, sizeof head), Err::ProtocolError);
    uint32_t len = r.u32();
    uint8_t kind = r.u8();
    if (len > kMaxFrameBytes) throw Error(Err::ProtocolError, "frame too large");
    if (kind < 1 || kind > 6)
        throw Error(Err::ProtocolError, "unknown frame kind " + std::to_string(kind));
    Frame f;
    f.kind = static_cast<Msg>(kind);
    f.payload.resize(len);
    if (len > 0 && !read_all(fd, f.payload.data(), len))
        throw Error(Err::ProtocolError, "connection closed mid-frame");
    return f;
}

std::vector<uint8_t> encode_hello() {
    ByteWriter w;
    w.u16(kProtocolVersion);
    return w.take();
}

uint16_t decode_hello(const std::vector<uint8_t>& payload) {
    ByteReader r(payload, Err::ProtocolError);
    uint16_t v = r.u16();
    if (!r.at_end()) r.fail("trailing bytes in hello");
    return v;
}

std::vector<uint8_t> encode_build(const BuildRequest& req) {
    ByteWriter w;
    w.str(req.package_dir);
    w.u32(static_cast<uint32_t>(req.options.size()));
    for (const auto& o : req.options) w.str(o);
    return w.take();
}

BuildRequest decode_build(const std::vector<uint8_t>& payload) {
    ByteReader r(payload, Err::ProtocolError);
    BuildRequest req;
    req.package_dir = r.str();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; i++) req.options.push_back(r.str());
    if (!r.at_end()) r.fail("trailing bytes in build request");
    return req;
}

namespace {

// Seconds travel as their IEEE-754 bit pattern; both ends are 8-byte doubles.
uint64_t bits_of(double d) {
    uint64_t u;
    std::memcpy(&u, &d, sizeof u);
    return u;
}

double double_of(uint64_t u) {
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
}

} // namespace

std::vector<uint8_t> encode_report(const PhaseReport& r) {
    ByteWriter w;
    w.u64(bits_of(r.smart_recomp));
    w.u64(bits_of(r.frontend));
    w.u64(bits_of(r.codegen));
    w.u64(bits_of(r.link));
    w.u64(bits_of(r.other));
    w.u64(bits_of(r.total));
    w.u64(bits_of(r.queue_wait));
    w.u64(r.interfaces_parsed);
    w.u64(r.interfaces_reused);
    w.u64(r.units_compiled);
    w.u8(r.failed ? 1 : 0);
    w.str(r.error);
    return w.take();
}

PhaseReport decode_report(const std::vector<uint8_t>& payload) {
    ByteReader r(payload, Err::ProtocolError);
    PhaseReport rep;
    rep.smart_recomp = double_of(r.u64());
    rep.frontend = double_of(r.u64());
    rep.codegen = double_of(r.u64());
    rep.link = double_of(r.u64());
    rep.other = double_of(r.u64());
    rep.total = double_of(r.u64());
    rep.queue_wait = double_of(r.u64());
    rep.interfaces_parsed = r.u64();
    rep.interfaces_reused = r.u64();
    rep.units_compiled = r.u64();
    rep.failed = r.u8() != 0;
    rep.error = r.str();
    if (!r.at_end()) r.fail("trailing bytes in report");
    return rep;
}

std::vector<uint8_t> encode_done(int32_t status) {
    ByteWriter w;
    w.i32(status);
    return w.take();
}

int32_t decode_done(const std::vector<uint8_t>& payload) {
    ByteReader r(payload, Err::ProtocolError);
    int32_t s = r.i32();
    if (!r.at_end()) r.fail("trailing bytes in done");
    return s;
}

std::string default_socket_path() {
    if (const char* env = ::getenv("M3SERVER_SOCKET"); env && *env) return env;
    return "/tmp/m3server-" + std::to_string(::getuid()) + ".sock";
}

} // namespace m3
