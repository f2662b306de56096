#include "diarist/orchestrator.hpp"

#include "diarist/prompts.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <random>

namespace diarist {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string iso_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string new_session_id() {
    static std::mutex mutex;
    static std::random_device device;
    std::lock_guard lock(mutex);
    std::string id;
    for (int i = 0; i < 4; ++i) {
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(device()));
        id += buf;
    }
    return id;
}

LinkedAnswer insert_hyperlinks(std::string_view raw, std::span<const ScoredCandidate> candidates,
                               std::string_view url_template,
                               const std::map<EntryId, std::string>& source_urls) {
    LinkedAnswer out;
    out.rendered.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] != '[') {
            out.rendered.push_back(raw[i++]);
            continue;
        }
        std::size_t j = i + 1;
        while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
        if (j == i + 1 || j >= raw.size() || raw[j] != ']') {
            out.rendered.push_back(raw[i++]);
            continue;
        }
        const auto digits = raw.substr(i + 1, j - i - 1);
        const long long n = digits.size() > 9 ? 0 : std::stoll(std::string(digits));
        if (n < 1 || n > static_cast<long long>(candidates.size())) {
            ++out.repairs;
            i = j + 1;
            if (!out.rendered.empty() && out.rendered.back() == ' ') {
                out.rendered.pop_back();
            } else if (i < raw.size() && raw[i] == ' ' && (out.rendered.empty() || out.rendered.back() == '\n')) {
                ++i;
            }
            continue;
        }
        const EntryId id = candidates[n - 1].entry_id;
        std::string url;
        if (auto it = source_urls.find(id); it != source_urls.end() && !it->second.empty()) {
            url = it->second;
        } else {
            Entry e;
            e.id = id;
            url = resolve_entry_url(e, url_template);
        }
        const bool seen = std::any_of(out.citations.begin(), out.citations.end(),
                                      [&](const Citation& c) { return c.marker == n; });
        if (!seen) out.citations.push_back({static_cast<int>(n), id, url});
        out.rendered += "[" + std::string(digits) + "](" + url + ")";
        i = j + 1;
    }
    return out;
}

std::string render_fragments(std::span<const Fragment> fragments) {
    std::string out;
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        const auto& f = fragments[i];
        if (i) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] " + f.author + ", " + f.entry.date.str() + "\n";
        out += f.entry.text;
    }
    return out;
}

CompletionRequest query_generation_request(std::span<const ChatMessage> history, std::size_t window,
                                           const std::string& model_id, int max_tokens) {
    CompletionRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = max_tokens;
    req.messages.push_back({Role::system, query_generation_prompt().body});
    const std::size_t first = history.size() > window ? history.size() - window : 0;
    for (std::size_t i = first; i < history.size(); ++i) req.messages.push_back(history[i]);
    return req;
}

CompletionRequest answer_request(std::string_view question, std::span<const Fragment> fragments,
                                 const std::string& model_id, int max_tokens) {
    CompletionRequest req;
    req.model_id = model_id;
    req.temperature = 0.0;
    req.max_tokens = max_tokens;
    req.messages.push_back({Role::system, answer_prompt().body});
    req.messages.push_back({Role::user, "Question: " + std::string(trim(question)) +
                                            "\n\nDiary fragments:\n\n" + render_fragments(fragments)});
    return req;
}

std::vector<ChatMessage> session_history(const Session& session) {
    std::vector<ChatMessage> out;
    for (const auto& t : session.turns) {
        out.push_back({Role::user, t.user_text});
        if (!trim(t.answer_raw).empty()) out.push_back({Role::assistant, t.answer_raw});
    }
    return out;
}

Orchestrator::Orchestrator(const KnowledgeBase& kb, const HybridSearcher& searcher, LlmGateway& gateway,
                           OrchestratorConfig config)
    : kb_(kb), searcher_(searcher), gateway_(gateway), config_(std::move(config)),
      sql_(kb, gateway, config_.models.sql) {
    if (config_.history_window == 0) {
        throw Error(ErrorCode::invalid_argument, "history window must hold at least one message");
    }
}

QueryGeneration Orchestrator::generate_search_query(std::span<const ChatMessage> history) const {
    if (history.empty() || history.back().role != Role::user) {
        throw Error(ErrorCode::invalid_argument, "history must end with a user message");
    }
    QueryGeneration out;
    auto fallback = [&](std::string why) {
        spdlog::warn("query generation fell back to the user message: {}", why);
        out.query = std::string(trim(history.back().content));
        out.fallback = true;
        out.warning = std::move(why);
        return out;
    };
    std::string reply;
    try {
        reply = gateway_.complete(query_generation_request(history, config_.history_window,
                                                           config_.models.query, config_.query_max_tokens));
    } catch (const GatewayError& e) {
        return fallback(std::string("gateway ") + std::string(to_string(e.failure())) + ": " + e.what());
    }
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find('\n', start);
        if (end == std::string::npos) end = reply.size();
        const auto line = trim(std::string_view(reply).substr(start, end - start));
        if (!line.empty()) {
            out.query = std::string(line);
            return out;
        }
        start = end + 1;
    }
    return fallback("query model returned an empty reply");
}

AnswerGeneration Orchestrator::generate_answer(std::string_view question,
                                               std::span<const Fragment> fragments) const {
    AnswerGeneration out;
    if (fragments.empty()) {
        out.raw = no_sources_message().body;
        return out;
    }
    try {
        out.raw = gateway_.complete(answer_request(question, fragments, config_.models.answer,
                                                   config_.answer_max_tokens));
        return out;
    } catch (const GatewayError& e) {
        spdlog::warn("answer generation failed: {}", e.what());
        out.degraded = true;
        out.warning = std::string("gateway ") + std::string(to_string(e.failure())) + ": " + e.what();
    }
    out.raw = degraded_message().body + "\n";
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        out.raw += "\n[" + std::to_string(i + 1) + "] " + fragments[i].author + ", " +
                   fragments[i].entry.date.str();
    }
    return out;
}

std::vector<Fragment> Orchestrator::fragments_for(std::span<const ScoredCandidate> candidates) const {
    std::vector<Fragment> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        auto entry = kb_.get_entry(c.entry_id);
        if (!entry) {
            throw Error(ErrorCode::integrity,
                        "indexed entry " + std::to_string(c.entry_id) + " is missing from the knowledge base");
        }
        auto author = kb_.get_author(entry->author_id);
        out.push_back({std::move(*entry), author ? author->name : std::string()});
    }
    return out;
}

Turn Orchestrator::handle_turn(Session& session, std::string_view user_text, const FusionParams& params) const {
    if (trim(user_text).empty()) throw Error(ErrorCode::invalid_argument, "message text is empty");
    params.validate();

    Turn turn;
    turn.user_text = std::string(user_text);

    auto history = session_history(session);
    history.push_back({Role::user, turn.user_text});
    auto query = generate_search_query(history);
    turn.generated_query = query.query;
    turn.query_fallback = query.fallback;
    if (query.warning) turn.warnings.push_back("query: " + *query.warning);

    if (config_.sql_filter) {
        auto filter = sql_.filter(turn.generated_query);
        turn.sql = filter.sql;
        turn.sql_filter = filter.filter;
        if (filter.warning) turn.warnings.push_back("sql: " + *filter.warning);
    }

    turn.candidates = searcher_.search(turn.generated_query, params,
                                       turn.sql_filter ? &*turn.sql_filter : nullptr);

    const auto fragments = fragments_for(turn.candidates);
    auto answer = generate_answer(turn.user_text, fragments);
    turn.answer_raw = answer.raw;
    turn.degraded = answer.degraded;
    if (answer.warning) turn.warnings.push_back("answer: " + *answer.warning);

    std::map<EntryId, std::string> source_urls;
    for (const auto& f : fragments) {
        if (f.entry.source_url) source_urls.emplace(f.entry.id, *f.entry.source_url);
    }
    auto linked = insert_hyperlinks(turn.answer_raw, turn.candidates, config_.url_template, source_urls);
    turn.answer_rendered = std::move(linked.rendered);
    turn.citations = std::move(linked.citations);
    turn.repairs = linked.repairs;

    session.turns.push_back(turn);
    return turn;
}

// ---- sessions -------------------------------------------------------------------

Session SessionStore::create() {
    auto slot = std::make_shared<Slot>();
    slot->session.created_at = std::chrono::system_clock::now();
    std::lock_guard lock(mutex_);
    do {
        slot->session.id = new_session_id();
    } while (sessions_.count(slot->session.id));
    sessions_.emplace(slot->session.id, slot);
    return slot->session;
}

std::shared_ptr<SessionStore::Slot> SessionStore::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'");
    return it->second;
}

std::optional<Session> SessionStore::snapshot(const std::string& id) const {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return std::nullopt;
        slot = it->second;
    }
    std::lock_guard lock(slot->mutex);
    return slot->session;
}

bool SessionStore::contains(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return sessions_.count(id) > 0;
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

// ---- JSON -----------------------------------------------------------------------

nlohmann::json to_json(const ScoredCandidate& c) {
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& [name, score] : c.field_scores) fields[name] = score;
    return {{"entry_id", c.entry_id}, {"s_sem_raw", c.s_sem_raw}, {"s_ft_raw", c.s_ft_raw},
            {"s_sem", c.s_sem},       {"s_ft", c.s_ft},           {"field_scores", fields},
            {"s_eq1", c.s_eq1},       {"s_final", c.s_final}};
}

nlohmann::json to_json(const Citation& c) {
    return {{"marker", c.marker}, {"entry_id", c.entry_id}, {"url", c.url}};
}

nlohmann::json to_json(const Turn& t) {
    nlohmann::json j;
    j["user_text"] = t.user_text;
    j["generated_query"] = t.generated_query;
    j["query_fallback"] = t.query_fallback;
    j["sql"] = t.sql ? nlohmann::json(*t.sql) : nlohmann::json(nullptr);
    j["sql_filter"] = t.sql_filter ? nlohmann::json(*t.sql_filter) : nlohmann::json(nullptr);
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : t.candidates) j["candidates"].push_back(to_json(c));
    j["answer_raw"] = t.answer_raw;
    j["answer_rendered"] = t.answer_rendered;
    j["citations"] = nlohmann::json::array();
    for (const auto& c : t.citations) j["citations"].push_back(to_json(c));
    j["repairs"] = t.repairs;
    j["degraded"] = t.degraded;
    j["warnings"] = t.warnings;
    return j;
}

nlohmann::json to_json(const Session& s) {
    nlohmann::json j{{"id", s.id}, {"created_at", iso_timestamp(s.created_at)}};
    j["turns"] = nlohmann::json::array();
    for (const auto& t : s.turns) j["turns"].push_back(to_json(t));
    return j;
}

}  // namespace diarist
