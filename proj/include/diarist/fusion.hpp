#pragma once

#include "diarist/embedding.hpp"
#include "diarist/lexical_index.hpp"
#include "diarist/vector_index.hpp"

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace diarist {

struct FusionParams {
    // Weight of the semantic arm against the lexical arm.
    double alpha = 0.9;
    // Weight of the fused arm score against the mean semantic field score.
    double gamma = 1.0;
    // Depth taken from each arm, and length of the final ranking.
    int k = 5;
    // Semantically indexed metadata fields blended in when gamma < 1.
    std::vector<FieldRef> fields;
    LexicalScorer scorer = LexicalScorer::tfidf;
    Bm25Params bm25;

    // Throws invalid_argument when alpha or gamma leave [0, 1] or k < 1.
    void validate() const;
};

struct ScoredCandidate {
    EntryId entry_id = 0;
    double s_sem_raw = 0.0;
    double s_ft_raw = 0.0;
    double s_sem = 0.0;
    double s_ft = 0.0;
    std::map<std::string, double> field_scores;
    double s_eq1 = 0.0;
    double s_final = 0.0;

    bool operator==(const ScoredCandidate&) const = default;
};

// (x - min) / (max - min); every output is 1.0 when all inputs are equal.
// Throws invalid_argument for an empty or non-finite list.
std::vector<double> normalize_minmax(std::span<const double> raw);

// alpha * s_sem + (1 - alpha) * s_ft. Arguments must lie in [0, 1].
double fuse_arms(double s_sem, double s_ft, double alpha);

// gamma * s_arms + (1 - gamma) * mean(field_scores); s_arms itself when there
// are no field scores. Arguments must lie in [0, 1].
double fuse_with_fields(double s_arms, const std::map<std::string, double>& field_scores,
                        double gamma);

// Both retrieval arms over one corpus snapshot. Holds references; the
// indexes must outlive the searcher.
class HybridSearcher {
public:
    HybridSearcher(const InvertedIndex* lexical, const VectorStore& vectors,
                   const EmbeddingProvider& provider,
                   std::unordered_map<EntryId, AuthorId> entry_authors);

    // 1. top-k from each arm, honouring `filter`;
    // 2. union of both lists;
    // 3. exact score from the other arm for every member that only one arm found;
    // 4. min-max normalisation of each arm within the union;
    // 5. arm fusion, then field blending;
    // 6. descending final score, ties by ascending id, truncated to k.
    std::vector<ScoredCandidate> search(std::string_view query, const FusionParams& params,
                                        const EntryIdSet* filter = nullptr) const;

    std::vector<LexicalHit> lexical_arm(std::string_view query, const FusionParams& params,
                                        const EntryIdSet* filter = nullptr) const;
    std::vector<SemanticHit> semantic_arm(std::string_view query, int k,
                                          const EntryIdSet* filter = nullptr) const;

    const EmbeddingProvider& provider() const { return provider_; }
    const InvertedIndex* lexical() const { return lexical_; }
    const VectorStore& vectors() const { return vectors_; }
    std::optional<AuthorId> author_of(EntryId entry) const;

private:
    const InvertedIndex* lexical_;
    const VectorStore& vectors_;
    const EmbeddingProvider& provider_;
    std::unordered_map<EntryId, AuthorId> entry_authors_;
};

}  // namespace diarist
