#pragma once

#include "diarist/fusion.hpp"
#include "diarist/knowledge_base.hpp"
#include "diarist/llm_gateway.hpp"
#include "diarist/sql_bridge.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

struct ModelIds {
    std::string query = "gpt-4o";
    std::string sql = "gpt-4o";
    std::string answer = "gpt-4o";
};

struct OrchestratorConfig {
    ModelIds models;
    std::size_t history_window = 10;
    std::string url_template = "http://localhost:8080/entry/{id}";
    bool sql_filter = true;
    int answer_max_tokens = 1024;
    int query_max_tokens = 64;
};

struct Citation {
    int marker = 0;
    EntryId entry_id = 0;
    std::string url;

    bool operator==(const Citation&) const = default;
};

struct Turn {
    std::string user_text;
    std::string generated_query;
    bool query_fallback = false;
    std::optional<std::string> sql;
    std::optional<EntryIdSet> sql_filter;
    std::vector<ScoredCandidate> candidates;
    std::string answer_raw;
    std::string answer_rendered;
    std::vector<Citation> citations;
    int repairs = 0;
    bool degraded = false;
    std::vector<std::string> warnings;
};

struct Session {
    std::string id;
    std::chrono::system_clock::time_point created_at;
    std::vector<Turn> turns;
};

// 32 lowercase hex digits drawn from std::random_device.
std::string new_session_id();

struct Fragment {
    Entry entry;
    std::string author;
};

struct LinkedAnswer {
    std::string rendered;
    std::vector<Citation> citations;
    int repairs = 0;
};

// Turns each in-range "[n]" into "[n](url)" for candidates[n-1] and strips
// the rest along with the space in front of them. One citation per distinct
// marker, in order of first use.
// `source_urls` overrides the template for the entries it lists.
LinkedAnswer insert_hyperlinks(std::string_view answer_raw, std::span<const ScoredCandidate> candidates,
                               std::string_view url_template,
                               const std::map<EntryId, std::string>& source_urls = {});

struct QueryGeneration {
    std::string query;
    bool fallback = false;
    std::optional<std::string> warning;
};

struct AnswerGeneration {
    std::string raw;
    bool degraded = false;
    std::optional<std::string> warning;
};

std::string render_fragments(std::span<const Fragment> fragments);

// The chat messages handed to the query rewriter: the system prompt followed
// by at most `window` trailing messages of `history`.
CompletionRequest query_generation_request(std::span<const ChatMessage> history, std::size_t window,
                                           const std::string& model_id, int max_tokens);
CompletionRequest answer_request(std::string_view question, std::span<const Fragment> fragments,
                                 const std::string& model_id, int max_tokens);

// Messages a session contributes to the next query: every turn's user text
// and raw answer.
std::vector<ChatMessage> session_history(const Session& session);

// One corpus snapshot plus the LLM client. Stateless between calls; the
// session passed in carries the dialog.
class Orchestrator {
public:
    Orchestrator(const KnowledgeBase& kb, const HybridSearcher& searcher, LlmGateway& gateway,
                 OrchestratorConfig config);

    QueryGeneration generate_search_query(std::span<const ChatMessage> history) const;
    AnswerGeneration generate_answer(std::string_view question, std::span<const Fragment> fragments) const;
    std::vector<Fragment> fragments_for(std::span<const ScoredCandidate> candidates) const;

    // Appends the turn to `session` and returns a copy. Throws
    // invalid_argument for blank text before any model is consulted.
    Turn handle_turn(Session& session, std::string_view user_text, const FusionParams& params) const;

    const OrchestratorConfig& config() const { return config_; }

private:
    const KnowledgeBase& kb_;
    const HybridSearcher& searcher_;
    LlmGateway& gateway_;
    OrchestratorConfig config_;
    SqlBridge sql_;
};

// Sessions keyed by id. Turns within a session run one at a time; different
// sessions proceed in parallel.
class SessionStore {
public:
    Session create();
    std::optional<Session> snapshot(const std::string& id) const;
    bool contains(const std::string& id) const;
    std::size_t size() const;

    // Runs fn with the session locked. Throws not_found for unknown ids.
    template <typename Fn>
    auto with_session(const std::string& id, Fn&& fn) {
        auto slot = find(id);
        std::lock_guard lock(slot->mutex);
        return fn(slot->session);
    }

private:
    struct Slot {
        std::mutex mutex;
        Session session;
    };
    std::shared_ptr<Slot> find(const std::string& id) const;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

nlohmann::json to_json(const ScoredCandidate& c);
nlohmann::json to_json(const Citation& c);
nlohmann::json to_json(const Turn& turn);
nlohmann::json to_json(const Session& session);

}  // namespace diarist
