#pragma once

#include "diarist/analyzer.hpp"
#include "diarist/knowledge_base.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace diarist {

struct Posting {
    EntryId entry = 0;
    std::uint32_t tf = 0;
};

struct Document {
    EntryId id = 0;
    std::string_view text;
};

// Immutable term -> postings map. Postings are sorted by entry id; documents
// are kept in ascending id order.
class InvertedIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    // Throws Error(empty_corpus) when `docs` is empty.
    static InvertedIndex build(std::span<const Document> docs, AnalyzerConfig analyzer);
    static InvertedIndex build(std::span<const Entry> entries, AnalyzerConfig analyzer);

    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

    const AnalyzerConfig& analyzer() const { return analyzer_; }
    std::size_t doc_count() const { return docs_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    std::size_t term_count() const { return postings_.size(); }

    std::size_t df(std::string_view term) const;
    // Empty span when the term is not indexed.
    std::span<const Posting> postings(std::string_view term) const;
    std::uint32_t tf(std::string_view term, EntryId entry) const;
    bool contains(EntryId entry) const { return slot_.contains(entry); }
    // Throws Error(not_found) for unknown entries.
    std::uint32_t doc_length(EntryId entry) const;
    std::vector<EntryId> doc_ids() const;

    // ln((1 + N) / (1 + df)); zero for a term present in every document.
    double tfidf_idf(std::string_view term) const;
    // Euclidean norm of the entry's tf-idf vector.
    double tfidf_norm(EntryId entry) const;

    // Visits every term of the dictionary; used by invariant checks.
    template <typename Fn>
    void for_each_term(Fn&& fn) const {
        for (const auto& [term, list] : postings_) fn(term, std::span<const Posting>(list));
    }

private:
    struct DocInfo {
        EntryId id = 0;
        std::uint32_t length = 0;
        double tfidf_norm = 0.0;
    };

    std::size_t slot_of(EntryId entry) const;
    void finalize();

    AnalyzerConfig analyzer_;
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::unordered_map<std::string, std::vector<Posting>, StringHash, std::equal_to<>> postings_;
    std::vector<DocInfo> docs_;
    std::unordered_map<EntryId, std::size_t> slot_;
    double avg_doc_len_ = 0.0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

enum class LexicalScorer { tfidf, bm25 };

std::string_view to_string(LexicalScorer scorer);
std::optional<LexicalScorer> parse_lexical_scorer(std::string_view name);

// Cosine between the query's and the entry's tf-idf vectors, weights
// (1 + ln tf) * ln((1 + N) / (1 + df)). Query terms missing from the index
// take df = 0. Returns 0 when either vector is zero.
double score_tfidf(std::span<const std::string> query_tokens, EntryId entry,
                   const InvertedIndex& index);

// Okapi BM25 with idf ln(1 + (N - df + 0.5) / (df + 0.5)). Each distinct
// query term counts once.
double score_bm25(std::span<const std::string> query_tokens, EntryId entry,
                  const InvertedIndex& index, Bm25Params params = {});

double score_lexical(LexicalScorer scorer, std::span<const std::string> query_tokens,
                     EntryId entry, const InvertedIndex& index, Bm25Params params = {});

struct LexicalHit {
    EntryId entry = 0;
    double score = 0.0;

    bool operator==(const LexicalHit&) const = default;
};

// Top-k by descending score, ties by ascending id. Zero-score entries and
// entries outside `filter` are never returned. Throws invalid_argument for k <= 0.
std::vector<LexicalHit> search_lexical(const InvertedIndex& index, std::string_view query, int k,
                                       LexicalScorer scorer, const EntryIdSet* filter = nullptr,
                                       Bm25Params params = {});

std::vector<LexicalHit> search_lexical_tokens(const InvertedIndex& index,
                                              std::span<const std::string> query_tokens, int k,
                                              LexicalScorer scorer,
                                              const EntryIdSet* filter = nullptr,
                                              Bm25Params params = {});

}  // namespace diarist
