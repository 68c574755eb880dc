#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "m3/phase.hpp"

namespace m3 {

// Wire protocol between the build client and the compilation server, over a
// Unix-domain stream socket. Each frame is
//
//     u32 payload length (little-endian) | u8 kind | payload
//
// A session: client sends Hello, server answers Hello; the client then sends
// one Build (or Shutdown) request, the server streams Text frames while the
// build runs, then one Report, then Done, and closes.
inline constexpr uint16_t kProtocolVersion = 1;

// Frames larger than this are rejected as corrupt rather than buffered.
inline constexpr uint32_t kMaxFrameBytes = 16u << 20;

enum class Msg : uint8_t {
    Hello = 1,
    Build = 2,
    Text = 3,
    Report = 4,
    Done = 5,
    Shutdown = 6,
};

struct Frame {
    Msg kind = Msg::Hello;
    std::vector<uint8_t> payload;
};

// Blocking frame I/O on a connected socket. send_frame raises ProtocolError
// on a broken connection; recv_frame returns nullopt on a clean close before
// a frame starts and raises ProtocolError on a close mid-frame.
void send_frame(int fd, Msg kind, const std::vector<uint8_t>& payload);
std::optional<Frame> recv_frame(int fd);

struct BuildRequest {
    std::string package_dir;
    std::vector<std::string> options;
};

std::vector<uint8_t> encode_hello();
uint16_t decode_hello(const std::vector<uint8_t>& payload); // the peer's version

std::vector<uint8_t> encode_build(const BuildRequest& req);
BuildRequest decode_build(const std::vector<uint8_t>& payload);

std::vector<uint8_t> encode_report(const PhaseReport& r);
PhaseReport decode_report(const std::vector<uint8_t>& payload);

std::vector<uint8_t> encode_done(int32_t status);
int32_t decode_done(const std::vector<uint8_t>& payload);

// $M3SERVER_SOCKET when set, otherwise a per-user path under /tmp.
std::string default_socket_path();

} // namespace m3
