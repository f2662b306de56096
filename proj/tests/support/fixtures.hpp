#pragma once

#include "diarist/benchmark.hpp"
#include "diarist/corpus.hpp"
#include "diarist/knowledge_base.hpp"
#include "diarist/llm_gateway.hpp"
#include "diarist/orchestrator.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace diarist::testing {

std::filesystem::path data_dir();
std::string read_file(const std::filesystem::path& path);

// In-memory store loaded from a JSONL string.
KnowledgeBase kb_from_jsonl(std::string_view jsonl);
KnowledgeBase golden_kb();

// The default synthetic benchmark loaded into a store and indexed with the
// hashing provider, author bios included. Built once per process.
struct BenchmarkWorld {
    Benchmark bench;
    KnowledgeBase kb;
    HashingEmbeddingProvider provider;
    std::shared_ptr<const CorpusSnapshot> snapshot;
};
const BenchmarkWorld& benchmark_world();
KnowledgeBase kb_from_benchmark(const Benchmark& bench);

// The three user messages of the golden session.
const std::vector<std::string>& golden_questions();

// Produces the canned replies the golden transcript was recorded from. The
// third query-generation call fails with a timeout so that turn falls back
// to the user's text.
std::unique_ptr<LlmGateway> make_golden_author_gateway();

std::vector<Turn> run_golden_session(LlmGateway& gateway);
// Pretty-printed JSON array of the turns, newline-terminated.
std::string turns_to_golden_text(const std::vector<Turn>& turns);

// Re-records transcript.jsonl and turns.json under `dir`.
void regenerate_golden(const std::filesystem::path& dir);

// Replays the checked-in transcript; returns the serialised turns.
std::string replay_golden(std::size_t* gateway_calls = nullptr);

}  // namespace diarist::testing
