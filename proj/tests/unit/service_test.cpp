#include "diarist/service.hpp"

#include "fixtures.hpp"
#include "schema_check.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace diarist;
using diarist::testing::data_dir;
using diarist::testing::read_file;
using nlohmann::json;

namespace {

class CountingGateway : public LlmGateway {
public:
    explicit CountingGateway(std::unique_ptr<LlmGateway> inner) : inner_(std::move(inner)) {}
    std::string complete(const CompletionRequest& r) override {
        ++calls;
        return inner_->complete(r);
    }
    std::atomic<int> calls{0};

private:
    std::unique_ptr<LlmGateway> inner_;
};

ServiceConfig memory_config() {
    ServiceConfig c;
    c.data_dir.clear();
    return c;
}

struct Harness {
    CountingGateway* gateway = nullptr;
    std::unique_ptr<Service> service;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit Harness(std::unique_ptr<LlmGateway> inner = std::make_unique<ScriptedGateway>(),
                     ServiceConfig config = memory_config()) {
        auto counting = std::make_unique<CountingGateway>(std::move(inner));
        gateway = counting.get();
        service = std::make_unique<Service>(config, std::move(counting),
                                            std::make_unique<HashingEmbeddingProvider>(config.embed_dim));
        service->mount(server);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Harness() {
        server.stop();
        thread.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

    void ingest_golden() {
        auto c = client();
        httplib::MultipartFormDataItems items = {
            {"corpus", read_file(data_dir() / "golden" / "corpus.jsonl"), "corpus.jsonl", "application/x-ndjson"}};
        auto res = c.Post("/ingest", items);
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 200) << res->body;
    }
    std::string new_session() {
        auto res = client().Post("/sessions");
        EXPECT_EQ(res->status, 201);
        return json::parse(res->body)["id"];
    }
};

std::unique_ptr<LlmGateway> golden_replay() {
    return std::make_unique<ScriptedGateway>(
        ScriptedGateway::from_transcript_file(data_dir() / "golden" / "transcript.jsonl"));
}

void expect_error(const httplib::Result& res, int status, const std::string& code) {
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, status) << res->body;
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["error"]["code"], code) << res->body;
    EXPECT_TRUE(j["error"]["message"].is_string());
}

}  // namespace

TEST(Service, EndToEndReplayMatchesGoldenTurns) {
    Harness h(golden_replay());
    h.ingest_golden();
    const auto id = h.new_session();
    auto c = h.client();
    auto turns = json::array();
    for (const auto& q : diarist::testing::golden_questions()) {
        auto res = c.Post("/sessions/" + id + "/messages", json{{"text", q}}.dump(), "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 200) << res->body;
        turns.push_back(json::parse(res->body));
    }
    EXPECT_EQ(turns.dump(2) + "\n", read_file(data_dir() / "golden" / "turns.json"));
    EXPECT_EQ(h.gateway->calls, 9);

    auto res = c.Get("/sessions/" + id);
    ASSERT_EQ(res->status, 200);
    const auto session = json::parse(res->body);
    EXPECT_EQ(session["id"], id);
    EXPECT_EQ(session["turns"], turns);
    EXPECT_TRUE(session["created_at"].is_string());
}

TEST(Service, UnknownSessionIs404) {
    Harness h;
    auto c = h.client();
    expect_error(c.Post("/sessions/nope/messages", R"({"text": "hi"})", "application/json"), 404, "not_found");
    expect_error(c.Get("/sessions/nope"), 404, "not_found");
    EXPECT_EQ(h.gateway->calls, 0);
}

TEST(Service, BadMessageBodies) {
    Harness h;
    const auto id = h.new_session();
    auto c = h.client();
    expect_error(c.Post("/sessions/" + id + "/messages", "{", "application/json"), 400, "parse");
    expect_error(c.Post("/sessions/" + id + "/messages", R"({"txt": "x"})", "application/json"), 400,
                 "invalid_argument");
    expect_error(c.Post("/sessions/" + id + "/messages", R"({"text": "  "})", "application/json"), 400,
                 "invalid_argument");
    expect_error(c.Post("/sessions/" + id + "/messages", R"({"text": "x", "params": {"alpha": 3}})",
                        "application/json"),
                 400, "invalid_argument");
    EXPECT_EQ(h.gateway->calls, 0);
}

TEST(Service, DegradedAnswerIs503WithTurn) {
    Harness h(std::make_unique<CallbackGateway>([](const CompletionRequest& r) -> std::string {
        if (r.messages.front().role == Role::system && r.messages.front().content.find("diaries") != std::string::npos &&
            r.messages.size() == 2 && r.messages[1].content.rfind("Question:", 0) == 0) {
            throw GatewayError(GatewayFailure::server, "down");
        }
        return "NO_FILTER";
    }));
    h.ingest_golden();
    const auto id = h.new_session();
    auto res = h.client().Post("/sessions/" + id + "/messages", R"({"text": "snow"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["error"]["code"], "gateway_degraded");
    EXPECT_TRUE(j["turn"]["degraded"].get<bool>());
    EXPECT_FALSE(j["turn"]["citations"].empty());
}

TEST(Service, SearchWithAlphaOneFollowsSemanticOrder) {
    Harness h;
    h.ingest_golden();
    auto c = h.client();
    for (const char* q : {"frost", "harvest rye", "theatre evening", "snow river winter"}) {
        auto hybrid = c.Get(std::string("/search?alpha=1&k=5&q=") + httplib::detail::encode_url(q));
        auto semantic = c.Get(std::string("/search?arm=semantic&k=5&q=") + httplib::detail::encode_url(q));
        ASSERT_EQ(hybrid->status, 200) << hybrid->body;
        ASSERT_EQ(semantic->status, 200) << semantic->body;
        std::vector<EntryId> a, b;
        for (const auto& x : json::parse(hybrid->body)["candidates"]) a.push_back(x["entry_id"]);
        for (const auto& x : json::parse(semantic->body)["candidates"]) b.push_back(x["entry_id"]);
        EXPECT_EQ(a, b) << q;
        EXPECT_EQ(json::parse(hybrid->body)["params"]["alpha"], 1.0);
    }
    EXPECT_EQ(h.gateway->calls, 0);
}

TEST(Service, SearchMatchesInProcessSearcher) {
    Harness h;
    h.ingest_golden();
    auto res = h.client().Get("/search?q=frost%20snow&scorer=bm25&alpha=0.4");
    ASSERT_EQ(res->status, 200);
    FusionParams p;
    p.alpha = 0.4;
    p.scorer = LexicalScorer::bm25;
    const auto want = h.service->search("frost snow", p);
    const auto got = json::parse(res->body)["candidates"];
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(got[i]["entry_id"], want[i].entry_id);
        EXPECT_EQ(got[i]["s_final"].get<double>(), want[i].s_final);
    }
}

TEST(Service, SearchRejectsBadParameters) {
    Harness h;
    h.ingest_golden();
    auto c = h.client();
    expect_error(c.Get("/search?q=frost&alpha=x"), 400, "invalid_argument");
    expect_error(c.Get("/search?q=frost&k=0"), 400, "invalid_argument");
    expect_error(c.Get("/search?q=frost&k=2.5"), 400, "invalid_argument");
    expect_error(c.Get("/search?q=frost&arm=other"), 400, "invalid_argument");
    expect_error(c.Get("/search?q=%20"), 400, "invalid_argument");
    expect_error(c.Get("/search?q=frost&fields=bio"), 400, "invalid_argument");
}

TEST(Service, EntriesEndpoint) {
    Harness h;
    h.ingest_golden();
    auto c = h.client();
    auto res = c.Get("/entries/4");
    ASSERT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["id"], 4);
    EXPECT_EQ(j["url"], "https://archive.example.org/diary/4");
    EXPECT_EQ(j["author"]["name"], "Anna Petrova");
    EXPECT_EQ(json::parse(c.Get("/entries/1")->body)["url"], "http://localhost:8080/entry/1");
    expect_error(c.Get("/entries/999"), 404, "not_found");
    expect_error(c.Get("/entries/abc"), 400, "invalid_argument");
}

TEST(Service, IngestReportsCountsAndRejectsBadBatches) {
    Harness h;
    auto c = h.client();
    auto res = c.Post("/ingest", read_file(data_dir() / "golden" / "corpus.jsonl"), "application/x-ndjson");
    ASSERT_EQ(res->status, 200) << res->body;
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["entries"], 12);
    EXPECT_EQ(j["authors"], 3);
    EXPECT_EQ(j["indexed_entries"], 12);

    const auto before = h.service->kb().content_hash();
    expect_error(c.Post("/ingest", R"({"id": 50, "author_id": 77, "date": "1901-01-01", "text": "x"})",
                        "application/x-ndjson"),
                 409, "integrity");
    expect_error(c.Post("/ingest", "not json\n", "application/x-ndjson"), 400, "parse");
    expect_error(c.Post("/ingest", "", "application/x-ndjson"), 400, "invalid_argument");
    httplib::MultipartFormDataItems odd = {{"corpus", "x", "corpus.xml", "text/xml"}};
    expect_error(c.Post("/ingest", odd), 400, "invalid_argument");
    EXPECT_EQ(h.service->kb().content_hash(), before);
}

TEST(Service, IngestCsvMultipart) {
    Harness h;
    auto c = h.client();
    httplib::MultipartFormDataItems items = {
        {"authors", "id,name,birth_date,death_date,bio\n1,Ivan,1850-01-01,,Clerk\n", "authors.csv", "text/csv"}};
    ASSERT_EQ(c.Post("/ingest", items)->status, 200);
    httplib::MultipartFormDataItems entries = {
        {"entries", "id,author_id,date,text,source_url\n5,1,1890-03-04,\"Rain, then frost\",\n", "entries.csv",
         "text/csv"}};
    auto res = c.Post("/ingest", entries);
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(json::parse(res->body)["indexed_entries"], 1);
    EXPECT_EQ(json::parse(c.Get("/entries/5")->body)["text"], "Rain, then frost");
}

TEST(Service, HealthAndParams) {
    Harness h;
    auto c = h.client();
    auto res = c.Get("/healthz");
    ASSERT_EQ(res->status, 200) << res->body;
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["gateway"]["kind"], "stub");
    EXPECT_EQ(j["embedding"]["model_id"], "hashing-64-0000000000005eed");
    h.ingest_golden();
    EXPECT_EQ(json::parse(c.Get("/healthz")->body)["indexes"]["entries"], 12);

    const auto p = json::parse(c.Get("/params")->body);
    EXPECT_EQ(p["alpha"], 0.9);
    EXPECT_EQ(p["gamma"], 1.0);
    EXPECT_EQ(p["k"], 5);
    EXPECT_EQ(p["scorer"], "tfidf");
    EXPECT_EQ(c.Get("/healthz")->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Service, SessionsAreIndependent) {
    Harness h(golden_replay());
    h.ingest_golden();
    const auto a = h.new_session();
    const auto b = h.new_session();
    EXPECT_NE(a, b);
    auto c = h.client();
    const std::string q = diarist::testing::golden_questions()[0];
    ASSERT_EQ(c.Post("/sessions/" + a + "/messages", json{{"text", q}}.dump(), "application/json")->status, 200);
    EXPECT_EQ(json::parse(c.Get("/sessions/" + a)->body)["turns"].size(), 1u);
    EXPECT_EQ(json::parse(c.Get("/sessions/" + b)->body)["turns"].size(), 0u);
}

TEST(Service, PersistedSnapshotIsReused) {
    const auto dir = std::filesystem::temp_directory_path() / "diarist-service-test";
    std::filesystem::remove_all(dir);
    ServiceConfig config;
    config.data_dir = dir;
    {
        Service s(config, std::make_unique<ScriptedGateway>(), std::make_unique<HashingEmbeddingProvider>());
        std::istringstream in(read_file(data_dir() / "golden" / "corpus.jsonl"));
        s.ingest(in, CorpusFormat::jsonl);
    }
    EXPECT_TRUE(std::filesystem::exists(dir / kLexicalFile));
    EXPECT_TRUE(std::filesystem::exists(dir / kVectorsFile));
    Service again(config, std::make_unique<ScriptedGateway>(), std::make_unique<HashingEmbeddingProvider>());
    EXPECT_EQ(again.snapshot()->entry_count(), 12u);
    EXPECT_EQ(again.health()["status"], "ok");
    std::filesystem::remove_all(dir);
}

namespace {

void expect_conforms(const json& doc, const std::string& schema) {
    const auto problems = diarist::testing::api_schemas().check(doc, schema);
    EXPECT_TRUE(problems.empty()) << schema << ":\n" << [&] {
        std::string all;
        for (const auto& p : problems) all += "  " + p + "\n";
        return all;
    }();
}

json body_of(const httplib::Result& res) {
    EXPECT_TRUE(res);
    return json::parse(res->body);
}

}  // namespace

TEST(ApiSchemas, EveryRefResolves) {
    const auto& set = diarist::testing::api_schemas();
    EXPECT_EQ(set.files().size(), 9u);
    for (const auto& f : set.files()) EXPECT_NO_THROW(set.check(json::object(), f)) << f;
}

TEST(ApiSchemas, CheckerRejectsNonconformingTurns) {
    const auto golden = json::parse(read_file(data_dir() / "golden" / "turns.json"));
    auto turn = golden[1];
    EXPECT_TRUE(diarist::testing::api_schemas().check(turn, "turn.json").empty());
    turn.erase("warnings");
    EXPECT_FALSE(diarist::testing::api_schemas().check(turn, "turn.json").empty());
    turn = golden[1];
    turn["sql_filter"] = "1,2";
    EXPECT_FALSE(diarist::testing::api_schemas().check(turn, "turn.json").empty());
    turn = golden[1];
    turn["candidates"][0]["s_final"] = 1.5;
    EXPECT_FALSE(diarist::testing::api_schemas().check(turn, "turn.json").empty());
    turn = golden[1];
    turn["extra"] = true;
    EXPECT_FALSE(diarist::testing::api_schemas().check(turn, "turn.json").empty());
    EXPECT_FALSE(diarist::testing::api_schemas().check(json{{"text", "  "}}, "message-request.json").empty());
}

TEST(ApiSchemas, GoldenTurnsConform) {
    for (const auto& t : json::parse(read_file(data_dir() / "golden" / "turns.json"))) expect_conforms(t, "turn.json");
}

TEST(ApiSchemas, EveryRouteConforms) {
    Harness h(golden_replay());
    auto c = h.client();
    expect_conforms(body_of(c.Get("/healthz")), "healthz.json");
    expect_conforms(body_of(c.Get("/params")), "params.json");

    auto ingested = c.Post("/ingest", read_file(data_dir() / "golden" / "corpus.jsonl"), "application/x-ndjson");
    expect_conforms(body_of(ingested), "ingest.json");

    auto created = c.Post("/sessions");
    expect_conforms(body_of(created), "session.json");
    const std::string id = body_of(created)["id"];
    for (const auto& q : diarist::testing::golden_questions()) {
        const json request = {{"text", q}};
        expect_conforms(request, "message-request.json");
        expect_conforms(body_of(c.Post("/sessions/" + id + "/messages", request.dump(), "application/json")),
                        "turn.json");
    }
    expect_conforms(body_of(c.Get("/sessions/" + id)), "session.json");

    for (const char* arm : {"hybrid", "semantic", "lexical"}) {
        expect_conforms(body_of(c.Get(std::string("/search?q=frost%20snow&arm=") + arm)), "search.json");
    }
    expect_conforms(body_of(c.Get("/search?q=frost&alpha=0.5&gamma=0.5&fields=authors.bio&scorer=bm25&k=3")),
                    "search.json");
    expect_conforms(body_of(c.Get("/entries/4")), "entry.json");
    expect_conforms(body_of(c.Get("/entries/1")), "entry.json");

    expect_conforms(body_of(c.Get("/entries/999")), "error.json");
    expect_conforms(body_of(c.Get("/search?q=frost&k=0")), "error.json");
    expect_conforms(body_of(c.Post("/ingest", "{", "application/x-ndjson")), "error.json");
    expect_conforms(body_of(c.Post("/sessions/nope/messages", R"({"text": "x"})", "application/json")), "error.json");
}

TEST(ApiSchemas, DegradedTurnConforms) {
    Harness h(std::make_unique<CallbackGateway>([](const CompletionRequest&) -> std::string {
        throw GatewayError(GatewayFailure::server, "down");
    }));
    h.ingest_golden();
    const auto id = h.new_session();
    auto res = h.client().Post("/sessions/" + id + "/messages", R"({"text": "snow"})", "application/json");
    ASSERT_EQ(res->status, 503);
    const auto j = json::parse(res->body);
    expect_conforms(j, "error.json");
    ASSERT_TRUE(j.contains("turn"));
    EXPECT_TRUE(j["turn"]["query_fallback"].get<bool>());
}
