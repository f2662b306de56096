#include "diarist/http_endpoint.hpp"

namespace diarist {

std::optional<HttpEndpoint> parse_http_endpoint(std::string_view url) {
    HttpEndpoint ep;
    std::string_view rest;
    if (url.starts_with("http://")) {
        rest = url.substr(7);
    } else if (url.starts_with("https://")) {
        rest = url.substr(8);
        ep.tls = true;
    } else {
        return std::nullopt;
    }
    const auto slash = rest.find('/');
    const auto authority = rest.substr(0, slash);
    if (authority.empty()) return std::nullopt;
    ep.scheme_host_port = std::string(url.substr(0, url.size() - rest.size())) + std::string(authority);
    ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    return ep;
}

}  // namespace diarist
