#include "diarist/corpus.hpp"

#include "diarist/hash.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>

namespace diarist {
namespace fs = std::filesystem;

CorpusSnapshot::CorpusSnapshot(std::uint64_t kb_hash, std::optional<InvertedIndex> lexical, VectorStore vectors,
                               std::unordered_map<EntryId, AuthorId> entry_authors,
                               const EmbeddingProvider& provider)
    : kb_hash_(kb_hash), lexical_(std::move(lexical)), vectors_(std::move(vectors)),
      entry_authors_(std::move(entry_authors)),
      searcher_(lexical_ ? &*lexical_ : nullptr, vectors_, provider, entry_authors_) {}

std::shared_ptr<const CorpusSnapshot> build_snapshot(const KnowledgeBase& kb, const EmbeddingProvider& provider,
                                                     std::span<const FieldRef> fields,
                                                     const AnalyzerConfig& analyzer) {
    const auto hash = kb.content_hash();
    const auto entries = kb.entries();
    std::unordered_map<EntryId, AuthorId> entry_authors;
    for (const auto& e : entries) entry_authors.emplace(e.id, e.author_id);

    std::optional<InvertedIndex> lexical;
    VectorStore vectors;
    if (!entries.empty()) {
        lexical = InvertedIndex::build(std::span<const Entry>(entries), analyzer);
        index_entries(provider, entries, vectors);
    }
    if (!fields.empty()) {
        const auto authors = kb.authors();
        index_fields(provider, authors, fields, vectors);
    }
    spdlog::info("indexed {} entries ({} vectors, model {})", entries.size(), vectors.size(), provider.model_id());
    return std::make_shared<const CorpusSnapshot>(hash, std::move(lexical), std::move(vectors),
                                                  std::move(entry_authors), provider);
}

void save_snapshot(const CorpusSnapshot& snapshot, const fs::path& dir, const EmbeddingProvider& provider) {
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write '" + (dir / name).string() + "'");
        return out;
    };
    if (snapshot.lexical()) {
        auto out = open(kLexicalFile);
        snapshot.lexical()->save(out);
    } else {
        fs::remove(dir / kLexicalFile);
    }
    {
        auto out = open(kVectorsFile);
        snapshot.vectors().save(out);
    }
    auto out = open(kIndexMetaFile);
    out << nlohmann::json{{"kb_hash", to_hex(snapshot.kb_hash())},
                          {"model_id", provider.model_id()},
                          {"entries", snapshot.entry_count()}}
               .dump(2)
        << '\n';
    if (!out) throw Error(ErrorCode::io, "failed to write index metadata");
}

std::shared_ptr<const CorpusSnapshot> load_snapshot(const KnowledgeBase& kb, const EmbeddingProvider& provider,
                                                    const fs::path& dir) {
    std::ifstream meta_in(dir / kIndexMetaFile);
    if (!meta_in) return nullptr;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        spdlog::warn("ignoring unreadable index metadata: {}", e.what());
        return nullptr;
    }
    const auto hash = kb.content_hash();
    if (meta.value("kb_hash", "") != to_hex(hash)) {
        spdlog::info("persisted indexes are stale; the knowledge base changed since they were built");
        return nullptr;
    }
    if (meta.value("model_id", "") != provider.model_id()) {
        spdlog::info("persisted vectors use model '{}', not '{}'", meta.value("model_id", ""), provider.model_id());
        return nullptr;
    }

    std::optional<InvertedIndex> lexical;
    if (std::ifstream in(dir / kLexicalFile, std::ios::binary); in) lexical = InvertedIndex::load(in);
    std::ifstream vin(dir / kVectorsFile, std::ios::binary);
    if (!vin) return nullptr;
    auto vectors = VectorStore::load(vin);

    const auto entries = kb.entries();
    if (!entries.empty() && !lexical) return nullptr;
    std::unordered_map<EntryId, AuthorId> entry_authors;
    for (const auto& e : entries) entry_authors.emplace(e.id, e.author_id);
    return std::make_shared<const CorpusSnapshot>(hash, std::move(lexical), std::move(vectors),
                                                  std::move(entry_authors), provider);
}

}  // namespace diarist
