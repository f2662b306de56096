#include "fixtures.hpp"

#include "diarist/corpus.hpp"
#include "diarist/prompts.hpp"

#include <fstream>
#include <sstream>

namespace diarist::testing {

std::filesystem::path data_dir() { return DIARIST_TEST_DATA_DIR; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

KnowledgeBase kb_from_jsonl(std::string_view jsonl) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream in{std::string(jsonl)};
    kb.ingest(in, CorpusFormat::jsonl);
    return kb;
}

KnowledgeBase golden_kb() { return kb_from_jsonl(read_file(data_dir() / "golden" / "corpus.jsonl")); }

KnowledgeBase kb_from_benchmark(const Benchmark& bench) {
    std::ostringstream out;
    write_corpus_jsonl(out, bench);
    return kb_from_jsonl(out.str());
}

const BenchmarkWorld& benchmark_world() {
    static const BenchmarkWorld* world = [] {
        auto bench = generate_benchmark();
        auto kb = kb_from_benchmark(bench);
        auto* w = new BenchmarkWorld{std::move(bench), std::move(kb), HashingEmbeddingProvider{}, nullptr};
        const std::vector<FieldRef> fields = {{"authors", "bio"}};
        w->snapshot = build_snapshot(w->kb, w->provider, fields);
        return w;
    }();
    return *world;
}

const std::vector<std::string>& golden_questions() {
    static const std::vector<std::string> questions = {
        "What did the diarists write about the weather?",
        "And in winter 1905?",
        "What did Anna Petrova write about the harvest?",
    };
    return questions;
}

std::unique_ptr<LlmGateway> make_golden_author_gateway() {
    struct Counters {
        int query = 0;
        int sql = 0;
        int answer = 0;
    };
    auto n = std::make_shared<Counters>();
    return std::make_unique<CallbackGateway>([n](const CompletionRequest& req) -> std::string {
        const auto& first = req.messages.front();
        if (first.role == Role::system && first.content == query_generation_prompt().body) {
            switch (n->query++) {
            case 0: return "weather frost snow rain";
            case 1: return "winter 1905 frost snow cold\n";
            default: throw GatewayError(GatewayFailure::timeout, "request timed out");
            }
        }
        if (first.role == Role::system && first.content == answer_prompt().body) {
            switch (n->answer++) {
            case 0:
                return "The diarists describe a hard frost [1] and heavy snow [2]. "
                       "One of them also mentions a summer downpour [9].";
            case 1:
                return "In winter 1905 the river froze [1], snow kept a family indoors [2] "
                       "and the trams stopped before Christmas [3].";
            default:
                return "Anna Petrova found the rye harvest poor [1] and later brought the oats "
                       "in after long days of work [2][1].";
            }
        }
        switch (n->sql++) {
        case 0: return "The question has no date, author or place constraint.\nNO_FILTER";
        case 1:
            return "Winter 1905 means January, February and December of 1905.\n"
                   "```sql\n"
                   "SELECT entries.id FROM entries\n"
                   "WHERE entries.date BETWEEN '1905-01-01' AND '1905-02-28'\n"
                   "   OR entries.date BETWEEN '1905-12-01' AND '1905-12-31';\n"
                   "```";
        default:
            return "The question names an author.\n"
                   "```sql\n"
                   "SELECT e.id FROM entries e JOIN authors a ON a.id = e.author_id "
                   "WHERE a.name = 'Anna Petrova';\n"
                   "```";
        }
    });
}

std::vector<Turn> run_golden_session(LlmGateway& gateway) {
    auto kb = golden_kb();
    HashingEmbeddingProvider provider;
    auto snapshot = build_snapshot(kb, provider, {});
    Orchestrator orchestrator(kb, snapshot->searcher(), gateway, OrchestratorConfig{});
    Session session;
    for (const auto& q : golden_questions()) orchestrator.handle_turn(session, q, FusionParams{});
    return session.turns;
}

std::string turns_to_golden_text(const std::vector<Turn>& turns) {
    auto arr = nlohmann::json::array();
    for (const auto& t : turns) arr.push_back(to_json(t));
    return arr.dump(2) + "\n";
}

void regenerate_golden(const std::filesystem::path& dir) {
    auto author = make_golden_author_gateway();
    std::ostringstream transcript;
    std::vector<Turn> turns;
    {
        TranscriptWriter writer(transcript);
        RecordingGateway recorder(*author, writer);
        turns = run_golden_session(recorder);
    }
    std::ofstream(dir / "transcript.jsonl", std::ios::binary | std::ios::trunc) << transcript.str();
    std::ofstream(dir / "turns.json", std::ios::binary | std::ios::trunc) << turns_to_golden_text(turns);
}

std::string replay_golden(std::size_t* gateway_calls) {
    auto stub = ScriptedGateway::from_transcript_file(data_dir() / "golden" / "transcript.jsonl");
    auto text = turns_to_golden_text(run_golden_session(stub));
    if (gateway_calls) *gateway_calls = stub.calls();
    return text;
}

}  // namespace diarist::testing
