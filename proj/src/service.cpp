#include "diarist/service.hpp"

#include "diarist/http_endpoint.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace diarist {
namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration --------------------------------------------------------------

std::string ServiceConfig::url_template() const {
    std::string base = base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/entry/{id}";
}

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::invalid_argument, "port must be within 0..65535");
    if (!parse_http_endpoint(base_url)) {
        throw Error(ErrorCode::invalid_argument, "base_url must be an http(s) URL: '" + base_url + "'");
    }
    if (!llm_endpoint.empty() && !parse_http_endpoint(llm_endpoint)) {
        throw Error(ErrorCode::invalid_argument, "LLM endpoint must be an http(s) URL: '" + llm_endpoint + "'");
    }
    if (llm_timeout_ms <= 0) throw Error(ErrorCode::invalid_argument, "LLM timeout must be positive");
    if (embedding_provider != "hashing" && embedding_provider != "remote") {
        throw Error(ErrorCode::invalid_argument,
                    "embedding provider must be 'hashing' or 'remote', not '" + embedding_provider + "'");
    }
    if (embedding_provider == "remote" && !parse_http_endpoint(embed_endpoint)) {
        throw Error(ErrorCode::invalid_argument, "remote embeddings need an http(s) EMBED_ENDPOINT");
    }
    if (embed_dim == 0) throw Error(ErrorCode::invalid_argument, "embedding dimension must be positive");
    if (history_window == 0) throw Error(ErrorCode::invalid_argument, "history window must be at least 1");
    fusion.validate();
}

void ServiceConfig::apply_json(const json& j) {
    try {
        if (j.contains("host")) host = j.at("host").get<std::string>();
        if (j.contains("port")) port = j.at("port").get<int>();
        if (j.contains("base_url")) base_url = j.at("base_url").get<std::string>();
        if (j.contains("data_dir")) data_dir = j.at("data_dir").get<std::string>();
        if (j.contains("history_window")) history_window = j.at("history_window").get<std::size_t>();
        if (j.contains("sql_filter")) sql_filter = j.at("sql_filter").get<bool>();
        if (j.contains("llm")) {
            const auto& l = j.at("llm");
            if (l.contains("endpoint")) llm_endpoint = l.at("endpoint").get<std::string>();
            if (l.contains("timeout_ms")) llm_timeout_ms = l.at("timeout_ms").get<int>();
            if (l.contains("transcript")) llm_transcript = l.at("transcript").get<std::string>();
            if (l.contains("record")) llm_record = l.at("record").get<std::string>();
            if (l.contains("models")) {
                const auto& m = l.at("models");
                if (m.contains("query")) models.query = m.at("query").get<std::string>();
                if (m.contains("sql")) models.sql = m.at("sql").get<std::string>();
                if (m.contains("answer")) models.answer = m.at("answer").get<std::string>();
            }
        }
        if (j.contains("embedding")) {
            const auto& e = j.at("embedding");
            if (e.contains("provider")) embedding_provider = e.at("provider").get<std::string>();
            if (e.contains("endpoint")) embed_endpoint = e.at("endpoint").get<std::string>();
            if (e.contains("model")) embed_model = e.at("model").get<std::string>();
            if (e.contains("dim")) embed_dim = e.at("dim").get<std::size_t>();
        }
        if (j.contains("fusion")) fusion = fusion_params_from_json(j.at("fusion"), fusion);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
}

void ServiceConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
    if (const char* v = getenv("LLM_API_KEY"); v && *v) llm_api_key = v;
    if (const char* v = getenv("LLM_ENDPOINT"); v && *v) llm_endpoint = v;
    if (const char* v = getenv("EMBED_ENDPOINT"); v && *v) {
        embed_endpoint = v;
        embedding_provider = "remote";
    }
}

ServiceConfig load_service_config(const std::optional<fs::path>& file,
                                  const std::function<const char*(const char*)>& getenv) {
    ServiceConfig config;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorCode::io, "cannot read config '" + file->string() + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse, "config '" + file->string() + "': " + e.what());
        }
        config.apply_json(j);
    }
    config.apply_env(getenv);
    return config;
}

json to_json(const FusionParams& p) {
    json fields = json::array();
    for (const auto& f : p.fields) fields.push_back(f.qualified());
    return {{"alpha", p.alpha}, {"gamma", p.gamma}, {"k", p.k},
            {"scorer", to_string(p.scorer)}, {"fields", fields}};
}

FusionParams fusion_params_from_json(const json& j, const FusionParams& base) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "params must be a JSON object");
    FusionParams p = base;
    auto number = [&](const char* key) {
        const auto& v = j.at(key);
        if (!v.is_number()) throw Error(ErrorCode::invalid_argument, std::string(key) + " must be a number");
        return v.get<double>();
    };
    if (j.contains("alpha")) p.alpha = number("alpha");
    if (j.contains("gamma")) p.gamma = number("gamma");
    if (j.contains("k")) {
        if (!j.at("k").is_number_integer()) throw Error(ErrorCode::invalid_argument, "k must be an integer");
        p.k = j.at("k").get<int>();
    }
    if (j.contains("scorer")) {
        if (!j.at("scorer").is_string()) throw Error(ErrorCode::invalid_argument, "scorer must be a string");
        auto s = parse_lexical_scorer(j.at("scorer").get<std::string>());
        if (!s) throw Error(ErrorCode::invalid_argument, "scorer must be 'tfidf' or 'bm25'");
        p.scorer = *s;
    }
    if (j.contains("fields")) {
        if (!j.at("fields").is_array()) throw Error(ErrorCode::invalid_argument, "fields must be an array");
        p.fields.clear();
        for (const auto& f : j.at("fields")) {
            if (!f.is_string()) throw Error(ErrorCode::invalid_argument, "fields must hold strings");
            auto ref = parse_field_ref(f.get<std::string>());
            if (!ref) throw Error(ErrorCode::invalid_argument, "field '" + f.get<std::string>() + "' is not table.column");
            p.fields.push_back(*ref);
        }
    }
    p.validate();
    return p;
}

json to_json(const Entry& e) {
    return {{"id", e.id},
            {"author_id", e.author_id},
            {"date", e.date.str()},
            {"text", e.text},
            {"source_url", e.source_url ? json(*e.source_url) : json(nullptr)}};
}

json to_json(const Author& a) {
    return {{"id", a.id},
            {"name", a.name},
            {"birth_date", a.birth_date ? json(a.birth_date->str()) : json(nullptr)},
            {"death_date", a.death_date ? json(a.death_date->str()) : json(nullptr)},
            {"bio", a.bio}};
}

std::unique_ptr<LlmGateway> make_gateway(const ServiceConfig& config) {
    if (!config.llm_endpoint.empty()) {
        HttpGateway::Options o;
        o.endpoint = config.llm_endpoint;
        o.api_key = config.llm_api_key;
        o.timeout = std::chrono::milliseconds(config.llm_timeout_ms);
        return std::make_unique<HttpGateway>(o);
    }
    if (config.llm_transcript) {
        return std::make_unique<ScriptedGateway>(ScriptedGateway::from_transcript_file(*config.llm_transcript));
    }
    return std::make_unique<ScriptedGateway>();
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ServiceConfig& config) {
    if (config.embedding_provider == "remote") {
        RemoteEmbeddingProvider::Options o;
        o.endpoint = config.embed_endpoint;
        o.api_key = config.llm_api_key;
        o.model_id = config.embed_model;
        o.dim = config.embed_dim;
        return std::make_unique<RemoteEmbeddingProvider>(o);
    }
    return std::make_unique<HashingEmbeddingProvider>(config.embed_dim);
}

// ---- service --------------------------------------------------------------------

namespace {

KnowledgeBase open_kb(const ServiceConfig& config) {
    if (config.data_dir.empty()) return KnowledgeBase::open_in_memory();
    fs::create_directories(config.data_dir);
    return KnowledgeBase::open(config.data_dir / kKbFile);
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), kb_((config_.validate(), open_kb(config_))) {
    base_gateway_ = make_gateway(config_);
    provider_ = make_embedding_provider(config_);
    init();
}

Service::Service(ServiceConfig config, std::unique_ptr<LlmGateway> gateway, std::unique_ptr<EmbeddingProvider> provider)
    : config_(std::move(config)), kb_((config_.validate(), open_kb(config_))),
      base_gateway_(std::move(gateway)), provider_(std::move(provider)) {
    if (!base_gateway_ || !provider_) throw Error(ErrorCode::invalid_argument, "service needs a gateway and a provider");
    init();
}

Service::~Service() = default;

void Service::init() {
    gateway_ = base_gateway_.get();
    if (config_.llm_record) {
        recorder_ = std::make_unique<TranscriptWriter>(*config_.llm_record);
        recording_gateway_ = std::make_unique<RecordingGateway>(*base_gateway_, *recorder_);
        gateway_ = recording_gateway_.get();
    }
    std::shared_ptr<const CorpusSnapshot> snap;
    if (!config_.data_dir.empty()) snap = load_snapshot(kb_, *provider_, config_.data_dir);
    if (!snap) {
        snap = build_snapshot(kb_, *provider_, config_.fusion.fields);
        persist(*snap);
    }
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(snap);
}

void Service::persist(const CorpusSnapshot& snapshot) const {
    if (!config_.data_dir.empty()) save_snapshot(snapshot, config_.data_dir, *provider_);
}

std::shared_ptr<const CorpusSnapshot> Service::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void Service::reindex() {
    auto snap = build_snapshot(kb_, *provider_, config_.fusion.fields);
    persist(*snap);
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(snap);
}

IngestCounts Service::ingest(std::istream& source, CorpusFormat format) {
    std::lock_guard lock(ingest_mutex_);
    const auto counts = kb_.ingest(source, format);
    reindex();
    return counts;
}

std::vector<ScoredCandidate> Service::search(std::string_view query, const FusionParams& params) const {
    return snapshot()->searcher().search(query, params);
}

OrchestratorConfig Service::orchestrator_config() const {
    OrchestratorConfig oc;
    oc.models = config_.models;
    oc.history_window = config_.history_window;
    oc.url_template = config_.url_template();
    oc.sql_filter = config_.sql_filter;
    return oc;
}

Session Service::create_session() { return sessions_.create(); }

Turn Service::post_message(const std::string& session_id, std::string_view text, const FusionParams& params) {
    const auto snap = snapshot();
    const Orchestrator orchestrator(kb_, snap->searcher(), *gateway_, orchestrator_config());
    return sessions_.with_session(session_id, [&](Session& s) { return orchestrator.handle_turn(s, text, params); });
}

std::optional<Session> Service::session(const std::string& session_id) const {
    return sessions_.snapshot(session_id);
}

json Service::health() const {
    const auto snap = snapshot();
    const auto kb_entries = kb_.entry_count();
    const bool fresh = snap->kb_hash() == kb_.content_hash();
    const bool stub = config_.llm_endpoint.empty();
    return {{"status", fresh ? "ok" : "degraded"},
            {"knowledge_base", {{"ready", true}, {"entries", kb_entries}}},
            {"indexes", {{"ready", fresh}, {"entries", snap->entry_count()}, {"vectors", snap->vectors().size()}}},
            {"embedding", {{"provider", config_.embedding_provider}, {"model_id", provider_->model_id()}}},
            {"gateway", {{"kind", stub ? "stub" : "http"}, {"configured", gateway_->configured()}}}};
}

// ---- HTTP -----------------------------------------------------------------------

namespace {

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::parse:
    case ErrorCode::version_mismatch: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::integrity: return 409;
    case ErrorCode::gateway:
    case ErrorCode::provider: return 503;
    default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json error_body(std::string_view code, std::string_view message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_json(res, status_for(e.code()), error_body(to_string(e.code()), e.what()));
        } catch (const json::exception& e) {
            send_json(res, 400, error_body("parse", e.what()));
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send_json(res, 500, error_body("internal", e.what()));
        }
    };
}

FusionParams params_from_query(const httplib::Request& req, const FusionParams& base) {
    json j = json::object();
    auto number = [&](const char* key) {
        const auto text = req.get_param_value(key);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != text.size() || text.empty()) {
            throw Error(ErrorCode::invalid_argument, std::string(key) + " must be a number, got '" + text + "'");
        }
        return v;
    };
    if (req.has_param("alpha")) j["alpha"] = number("alpha");
    if (req.has_param("gamma")) j["gamma"] = number("gamma");
    if (req.has_param("k")) {
        const double k = number("k");
        if (k != static_cast<int>(k)) throw Error(ErrorCode::invalid_argument, "k must be an integer");
        j["k"] = static_cast<int>(k);
    }
    if (req.has_param("scorer")) j["scorer"] = req.get_param_value("scorer");
    if (req.has_param("fields")) {
        j["fields"] = json::array();
        std::stringstream ss(req.get_param_value("fields"));
        for (std::string f; std::getline(ss, f, ',');) {
            if (!f.empty()) j["fields"].push_back(f);
        }
    }
    return fusion_params_from_json(j, base);
}

CorpusFormat format_for(const std::string& explicit_format, const std::string& filename) {
    if (!explicit_format.empty()) {
        auto f = parse_corpus_format(explicit_format);
        if (!f) throw Error(ErrorCode::invalid_argument, "format must be 'jsonl' or 'csv'");
        return *f;
    }
    const auto ext = to_lower_ascii(fs::path(filename).extension().string());
    if (ext == ".csv") return CorpusFormat::csv;
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return CorpusFormat::jsonl;
    throw Error(ErrorCode::invalid_argument, "cannot tell the format of '" + filename + "'; pass format=jsonl|csv");
}

}  // namespace

void Service::mount(httplib::Server& server) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
        const auto s = create_session();
        const auto j = to_json(s);
        send_json(res, 201, {{"id", j["id"]}, {"created_at", j["created_at"]}});
    }));

    server.Post(R"(/sessions/([^/]+)/messages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!sessions_.contains(id)) {
            send_json(res, 404, error_body("not_found", "no session '" + id + "'"));
            return;
        }
        const auto body = json::parse(req.body);
        if (!body.is_object() || !body.contains("text") || !body.at("text").is_string()) {
            throw Error(ErrorCode::invalid_argument, "body must be an object with a string 'text'");
        }
        const auto params = body.contains("params") ? fusion_params_from_json(body.at("params"), config_.fusion)
                                                    : config_.fusion;
        const auto turn = post_message(id, body.at("text").get<std::string>(), params);
        if (turn.degraded) {
            auto j = error_body("gateway_degraded", "the answer model is unavailable; sources are listed instead");
            j["turn"] = to_json(turn);
            send_json(res, 503, j);
            return;
        }
        send_json(res, 200, to_json(turn));
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto s = session(id);
        if (!s) {
            send_json(res, 404, error_body("not_found", "no session '" + id + "'"));
            return;
        }
        send_json(res, 200, to_json(*s));
    }));

    server.Get("/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto q = req.get_param_value("q");
        const auto params = params_from_query(req, config_.fusion);
        const auto arm = req.has_param("arm") ? req.get_param_value("arm") : std::string("hybrid");
        const auto snap = snapshot();
        json candidates = json::array();
        if (arm == "hybrid") {
            for (const auto& c : snap->searcher().search(q, params)) candidates.push_back(to_json(c));
        } else if (arm == "semantic") {
            if (q.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw Error(ErrorCode::invalid_argument, "query is empty");
            }
            for (const auto& h : snap->searcher().semantic_arm(q, params.k)) {
                ScoredCandidate c;
                c.entry_id = h.entry;
                c.s_sem_raw = h.cosine;
                candidates.push_back(to_json(c));
            }
        } else if (arm == "lexical") {
            if (q.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw Error(ErrorCode::invalid_argument, "query is empty");
            }
            for (const auto& h : snap->searcher().lexical_arm(q, params)) {
                ScoredCandidate c;
                c.entry_id = h.entry;
                c.s_ft_raw = h.score;
                candidates.push_back(to_json(c));
            }
        } else {
            throw Error(ErrorCode::invalid_argument, "arm must be 'hybrid', 'semantic' or 'lexical'");
        }
        send_json(res, 200, {{"query", q}, {"arm", arm}, {"params", to_json(params)}, {"candidates", candidates}});
    }));

    server.Get(R"(/entries/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string raw = req.matches[1];
        EntryId id = 0;
        std::size_t used = 0;
        try {
            id = std::stoll(raw, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != raw.size()) throw Error(ErrorCode::invalid_argument, "entry id must be an integer");
        auto entry = kb_.get_entry(id);
        if (!entry) {
            send_json(res, 404, error_body("not_found", "no entry " + raw));
            return;
        }
        auto j = to_json(*entry);
        j["url"] = resolve_entry_url(*entry, config_.url_template());
        if (auto author = kb_.get_author(entry->author_id)) j["author"] = to_json(*author);
        send_json(res, 200, j);
    }));

    server.Post("/ingest", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto explicit_format = req.has_param("format") ? req.get_param_value("format") : std::string();
        IngestCounts total;
        std::size_t streams = 0;
        if (req.is_multipart_form_data()) {
            std::string format_field = explicit_format;
            if (req.has_file("format")) format_field = req.get_file_value("format").content;
            for (const auto& [name, file] : req.files) {
                if (name == "format") continue;
                std::istringstream in(file.content);
                const auto counts = ingest(in, format_for(format_field, file.filename.empty() ? name : file.filename));
                total.entries += counts.entries;
                total.authors += counts.authors;
                ++streams;
            }
        } else if (!req.body.empty()) {
            std::string format = explicit_format;
            if (format.empty()) {
                const auto type = req.get_header_value("Content-Type");
                format = type.find("csv") != std::string::npos ? "csv" : "jsonl";
            }
            std::istringstream in(req.body);
            total = ingest(in, format_for(format, ""));
            streams = 1;
        }
        if (streams == 0) throw Error(ErrorCode::invalid_argument, "no corpus supplied");
        send_json(res, 200, {{"authors", total.authors}, {"entries", total.entries},
                             {"indexed_entries", snapshot()->entry_count()}});
    }));

    server.Get("/params", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, to_json(config_.fusion));
    }));

    server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
        const auto h = health();
        send_json(res, h["status"] == "ok" ? 200 : 503, h);
    }));
}

void Service::listen() {
    httplib::Server server;
    mount(server);
    spdlog::info("listening on {}:{}", config_.host, config_.port);
    if (!server.listen(config_.host, config_.port)) {
        throw Error(ErrorCode::io, "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
}

}  // namespace diarist
