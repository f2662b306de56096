#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace diarist {

// "http[s]://host[:port][/path]" split for cpp-httplib, which takes the
// scheme+authority and the path separately.
struct HttpEndpoint {
    std::string scheme_host_port;
    std::string path;
    bool tls = false;
};

std::optional<HttpEndpoint> parse_http_endpoint(std::string_view url);

}  // namespace diarist
