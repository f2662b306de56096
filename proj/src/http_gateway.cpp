#include "diarist/http_endpoint.hpp"
#include "diarist/llm_gateway.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <thread>

namespace diarist {

HttpGateway::HttpGateway(Options options) : options_(std::move(options)) {
    if (!parse_http_endpoint(options_.endpoint)) {
        throw Error(ErrorCode::invalid_argument,
                    "LLM endpoint must be an http(s) URL: '" + options_.endpoint + "'");
    }
    if (options_.timeout.count() <= 0) {
        throw Error(ErrorCode::invalid_argument, "LLM request timeout must be positive");
    }
    if (options_.max_retries < 0) options_.max_retries = 0;
}

std::string HttpGateway::complete(const CompletionRequest& request) {
    request.validate();
    auto backoff = options_.initial_backoff;
    for (int attempt_no = 0;; ++attempt_no) {
        try {
            return attempt(request);
        } catch (const GatewayError& e) {
            if (!e.transient() || attempt_no >= options_.max_retries) throw;
            spdlog::warn("LLM call failed ({}), retry {}/{} in {} ms", e.what(), attempt_no + 1,
                         options_.max_retries, backoff.count());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

std::string HttpGateway::attempt(const CompletionRequest& request) const {
    const auto ep = *parse_http_endpoint(options_.endpoint);
    httplib::Client client(ep.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    nlohmann::json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }

    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                               err == httplib::Error::ConnectionTimeout;
        throw GatewayError(timed_out ? GatewayFailure::timeout : GatewayFailure::network,
                           "LLM request failed: " + httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403) {
        throw GatewayError(GatewayFailure::auth, "LLM endpoint rejected credentials (HTTP " +
                                                     std::to_string(res->status) + ")");
    }
    if (res->status == 429) throw GatewayError(GatewayFailure::rate_limited, "LLM endpoint rate limited");
    if (res->status == 408 || res->status == 504) {
        throw GatewayError(GatewayFailure::timeout, "LLM endpoint timed out (HTTP " +
                                                        std::to_string(res->status) + ")");
    }
    if (res->status >= 500) {
        throw GatewayError(GatewayFailure::server, "LLM endpoint error (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw GatewayError(GatewayFailure::bad_response, "LLM endpoint returned HTTP " +
                                                             std::to_string(res->status));
    }
    try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw GatewayError(GatewayFailure::bad_response, "LLM reply content is not text");
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(GatewayFailure::bad_response, std::string("malformed LLM reply: ") + e.what());
    }
}

}  // namespace diarist
