#pragma once

// Reference implementations written directly from the formulas, sharing no
// code with the library beyond its public types.

#include "diarist/eval.hpp"
#include "diarist/fusion.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace diarist::testing {

using IdVector = std::pair<EntryId, std::vector<double>>;

// Cosine against every row, descending, ties by ascending id.
std::vector<std::pair<EntryId, double>> brute_force_top_k(const std::vector<IdVector>& rows,
                                                          const std::vector<double>& query, std::size_t k);

// TF-IDF cosine and BM25 over whitespace-separated documents.
class LexicalOracle {
public:
    explicit LexicalOracle(const std::map<EntryId, std::string>& docs);

    double tfidf(const std::vector<std::string>& query, EntryId doc) const;
    double bm25(const std::vector<std::string>& query, EntryId doc, double k1 = 1.2, double b = 0.75) const;

private:
    double idf(const std::string& term) const;

    std::map<EntryId, std::map<std::string, int>> tf_;
    std::map<std::string, int> df_;
    std::map<EntryId, int> len_;
    double n_ = 0;
    double avg_len_ = 0;
};

std::vector<std::string> split_words(const std::string& text);

struct OracleCandidate {
    EntryId id = 0;
    double s_sem = 0;
    double s_ft = 0;
    double s_final = 0;
};

// Union of both arms' top-k, raw scores fetched per member, min-max within
// the union, then both fusion formulas. Truncated to k.
std::vector<OracleCandidate> recompute_hybrid(const HybridSearcher& searcher, const std::string& query,
                                              const FusionParams& params);

// Pairwise form of 1 - D_o / D_e, without a coincidence matrix.
double krippendorff_pairwise(const std::vector<std::vector<std::optional<int>>>& cells, KrippendorffMetric metric);

}  // namespace diarist::testing
