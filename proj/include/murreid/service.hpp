#pragma once

#include <string>
#include <string_view>

#include "murreid/models.hpp"

namespace httplib {
class Server;
}

namespace murreid {

// Registers GET /healthz and POST /classify on the server. The bundle must
// outlive the server; handlers never mutate it, so concurrent requests are
// safe.
void setup_routes(httplib::Server& server, const ModelBundle& bundle);

// Blocking listen loop.
void run_server(const ModelBundle& bundle, const std::string& host, int port);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view encoded);  // throws on invalid input

} // namespace murreid
