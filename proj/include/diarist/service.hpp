#pragma once

#include "diarist/corpus.hpp"
#include "diarist/fusion.hpp"
#include "diarist/knowledge_base.hpp"
#include "diarist/llm_gateway.hpp"
#include "diarist/orchestrator.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace diarist {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    // Citation links point at <base_url>/entry/{id}.
    std::string base_url = "http://localhost:8080";
    // Empty keeps everything in memory.
    std::filesystem::path data_dir = "diarist-data";

    // Empty endpoint selects the scripted stub.
    std::string llm_endpoint;
    std::string llm_api_key;
    int llm_timeout_ms = 60000;
    ModelIds models;
    // Stub replay source, and an optional transcript of every live call.
    std::optional<std::filesystem::path> llm_transcript;
    std::optional<std::filesystem::path> llm_record;

    // "hashing" (local, deterministic) or "remote".
    std::string embedding_provider = "hashing";
    std::string embed_endpoint;
    std::string embed_model = "text-embedding-3-small";
    std::size_t embed_dim = 64;

    FusionParams fusion;
    std::size_t history_window = 10;
    bool sql_filter = true;

    std::string url_template() const;
    // Throws invalid_argument naming the offending setting.
    void validate() const;

    // Overlays the keys present in a config file object.
    void apply_json(const nlohmann::json& j);
    // LLM_API_KEY, LLM_ENDPOINT, EMBED_ENDPOINT. A non-empty EMBED_ENDPOINT
    // switches the embedding provider to "remote".
    void apply_env(const std::function<const char*(const char*)>& getenv);
};

// Defaults, then the file (when given), then the environment. Flags are the
// caller's to apply last.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<const char*(const char*)>& getenv);

nlohmann::json to_json(const FusionParams& params);
// Keys absent from `j` keep their value from `base`. Throws invalid_argument.
FusionParams fusion_params_from_json(const nlohmann::json& j, const FusionParams& base);

nlohmann::json to_json(const Entry& entry);
nlohmann::json to_json(const Author& author);

std::unique_ptr<LlmGateway> make_gateway(const ServiceConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ServiceConfig& config);

// Binds the stores, the retrieval snapshot, the gateway and the sessions.
class Service {
public:
    explicit Service(ServiceConfig config);
    Service(ServiceConfig config, std::unique_ptr<LlmGateway> gateway,
            std::unique_ptr<EmbeddingProvider> provider);
    ~Service();

    const ServiceConfig& config() const { return config_; }
    KnowledgeBase& kb() { return kb_; }
    const KnowledgeBase& kb() const { return kb_; }
    const EmbeddingProvider& provider() const { return *provider_; }
    std::shared_ptr<const CorpusSnapshot> snapshot() const;

    // Rebuilds every index from the knowledge base and swaps it in; turns
    // already running keep the snapshot they started with.
    void reindex();
    IngestCounts ingest(std::istream& source, CorpusFormat format);

    std::vector<ScoredCandidate> search(std::string_view query, const FusionParams& params) const;

    Session create_session();
    // Throws not_found for an unknown session.
    Turn post_message(const std::string& session_id, std::string_view text, const FusionParams& params);
    std::optional<Session> session(const std::string& session_id) const;

    nlohmann::json health() const;

    void mount(httplib::Server& server);
    // Blocks until the server stops.
    void listen();

private:
    void init();
    void persist(const CorpusSnapshot& snapshot) const;
    OrchestratorConfig orchestrator_config() const;

    ServiceConfig config_;
    KnowledgeBase kb_;
    std::unique_ptr<LlmGateway> base_gateway_;
    std::unique_ptr<TranscriptWriter> recorder_;
    std::unique_ptr<RecordingGateway> recording_gateway_;
    LlmGateway* gateway_ = nullptr;
    std::unique_ptr<EmbeddingProvider> provider_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const CorpusSnapshot> snapshot_;
    std::mutex ingest_mutex_;
    SessionStore sessions_;
};

}  // namespace diarist
