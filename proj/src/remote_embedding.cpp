#include "diarist/embedding.hpp"
#include "diarist/http_endpoint.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>

namespace diarist {

RemoteEmbeddingProvider::RemoteEmbeddingProvider(Options options) : options_(std::move(options)) {
    if (!parse_http_endpoint(options_.endpoint)) {
        throw Error(ErrorCode::invalid_argument,
                    "embedding endpoint must be an http(s) URL: '" + options_.endpoint + "'");
    }
    if (options_.dim == 0) throw Error(ErrorCode::invalid_argument, "embedding dim must be positive");
    if (options_.batch_size == 0) options_.batch_size = 1;
}

Embedding RemoteEmbeddingProvider::embed(std::string_view text) const {
    if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
        throw Error(ErrorCode::invalid_argument, "cannot embed blank text");
    }
    const std::string owned(text);
    return request(std::span<const std::string>(&owned, 1)).front();
}

std::vector<Embedding> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += options_.batch_size) {
        const auto n = std::min(options_.batch_size, texts.size() - i);
        try {
            auto part = request(texts.subspan(i, n));
            std::move(part.begin(), part.end(), std::back_inserter(out));
        } catch (const ProviderError& e) {
            throw ProviderError(e.what(), e.retryable(), out.size());
        }
    }
    return out;
}

std::vector<Embedding> RemoteEmbeddingProvider::request(std::span<const std::string> texts) const {
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
    body["model"] = options_.model_id;
    body["input"] = nlohmann::json::array();
    for (const auto& t : texts) {
        if (t.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "cannot embed blank text");
        }
        body["input"].push_back(t);
    }

    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("embedding request failed: " + httplib::to_string(res.error()) +
                                " (retry later)",
                            true);
    }
    if (res->status == 401 || res->status == 403) {
        throw ProviderError("embedding service rejected credentials (HTTP " +
                                std::to_string(res->status) + "); check EMBED_API_KEY",
                            false);
    }
    if (res->status == 429 || res->status >= 500) {
        throw ProviderError("embedding service unavailable (HTTP " + std::to_string(res->status) +
                                "); retry later",
                            true);
    }
    if (res->status != 200) {
        throw ProviderError("embedding service returned HTTP " + std::to_string(res->status), false);
    }

    std::vector<Embedding> out;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& data = reply.at("data");
        if (!data.is_array() || data.size() != texts.size()) {
            throw ProviderError("embedding response has " + std::to_string(data.size()) +
                                    " vectors for " + std::to_string(texts.size()) + " inputs",
                                false);
        }
        for (const auto& item : data) {
            auto v = item.at("embedding").get<std::vector<double>>();
            if (v.size() != options_.dim) {
                throw ProviderError("embedding dim " + std::to_string(v.size()) + " != configured " +
                                        std::to_string(options_.dim),
                                    false);
            }
            for (double x : v) {
                if (!std::isfinite(x)) throw ProviderError("embedding has non-finite component", false);
            }
            if (!normalize_l2(v)) throw ProviderError("embedding service returned a zero vector", false);
            out.push_back(Embedding{std::move(v), options_.model_id});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what(), false);
    }
    return out;
}

}  // namespace diarist
