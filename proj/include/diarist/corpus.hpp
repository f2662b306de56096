#pragma once

#include "diarist/analyzer.hpp"
#include "diarist/embedding.hpp"
#include "diarist/fusion.hpp"
#include "diarist/knowledge_base.hpp"
#include "diarist/lexical_index.hpp"
#include "diarist/vector_index.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>

namespace diarist {

// Everything retrieval needs, derived from one knowledge-base state.
// Immutable once built; the service swaps whole snapshots on reindex.
class CorpusSnapshot {
public:
    CorpusSnapshot(std::uint64_t kb_hash, std::optional<InvertedIndex> lexical, VectorStore vectors,
                   std::unordered_map<EntryId, AuthorId> entry_authors, const EmbeddingProvider& provider);
    CorpusSnapshot(const CorpusSnapshot&) = delete;
    CorpusSnapshot& operator=(const CorpusSnapshot&) = delete;

    std::uint64_t kb_hash() const { return kb_hash_; }
    const InvertedIndex* lexical() const { return lexical_ ? &*lexical_ : nullptr; }
    const VectorStore& vectors() const { return vectors_; }
    const HybridSearcher& searcher() const { return searcher_; }
    std::size_t entry_count() const { return entry_authors_.size(); }

private:
    std::uint64_t kb_hash_;
    std::optional<InvertedIndex> lexical_;
    VectorStore vectors_;
    std::unordered_map<EntryId, AuthorId> entry_authors_;
    HybridSearcher searcher_;
};

inline constexpr const char* kKbFile = "kb.sqlite";
inline constexpr const char* kLexicalFile = "lexical.idx";
inline constexpr const char* kVectorsFile = "vectors.bin";
inline constexpr const char* kIndexMetaFile = "index.json";

// Indexes every entry (and the requested author fields) from scratch.
std::shared_ptr<const CorpusSnapshot> build_snapshot(const KnowledgeBase& kb, const EmbeddingProvider& provider,
                                                     std::span<const FieldRef> fields,
                                                     const AnalyzerConfig& analyzer = AnalyzerConfig::english());

void save_snapshot(const CorpusSnapshot& snapshot, const std::filesystem::path& dir,
                   const EmbeddingProvider& provider);

// The persisted snapshot in `dir`, or nullptr when it is missing, was built
// from a different knowledge-base state, or used another embedding model.
std::shared_ptr<const CorpusSnapshot> load_snapshot(const KnowledgeBase& kb, const EmbeddingProvider& provider,
                                                    const std::filesystem::path& dir);

}  // namespace diarist
