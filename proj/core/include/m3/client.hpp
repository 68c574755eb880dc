#pragma once

#include <string>
#include <vector>

#include "m3/phase.hpp"
#include "m3/pipeline.hpp"

namespace m3 {

struct ClientResult {
    int exit_code = 2;
    PhaseReport report;
    bool got_report = false;
};

// Submits one build to the server at socket_path: hello exchange, request,
// then streams Text frames into `sink` until Done. The package directory is
// absolutized before sending — the server runs elsewhere. Raises
// ConnectFailed when nothing listens at the path, ProtocolVersionMismatch
// when the server speaks another version, ProtocolError when the connection
// dies mid-build.
ClientResult client_request(const std::string& socket_path, const std::string& package_dir,
                            const std::vector<std::string>& options, const TextSink& sink);

// Asks the server to drain its queue and exit; blocks until acknowledged.
// Returns 0 on acknowledgment, 2 when no server was reachable.
int request_shutdown(const std::string& socket_path);

} // namespace m3
