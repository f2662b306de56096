#include "diarist/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace diarist {
namespace {

void require_unit_interval(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + " must lie in [0, 1], got " + std::to_string(x));
    }
}

}  // namespace

void FusionParams::validate() const {
    require_unit_interval(alpha, "alpha");
    require_unit_interval(gamma, "gamma");
    if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be at least 1");
    if (bm25.k1 < 0.0 || !std::isfinite(bm25.k1)) {
        throw Error(ErrorCode::invalid_argument, "bm25 k1 must be non-negative");
    }
    require_unit_interval(bm25.b, "bm25 b");
}

std::vector<double> normalize_minmax(std::span<const double> raw) {
    if (raw.empty()) throw Error(ErrorCode::invalid_argument, "cannot normalise an empty score list");
    for (double x : raw) {
        if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "non-finite score");
    }
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double min = *lo;
    const double range = *hi - *lo;
    std::vector<double> out(raw.size(), 1.0);
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::clamp((raw[i] - min) / range, 0.0, 1.0);
    }
    return out;
}

double fuse_arms(double s_sem, double s_ft, double alpha) {
    require_unit_interval(s_sem, "semantic score");
    require_unit_interval(s_ft, "lexical score");
    require_unit_interval(alpha, "alpha");
    return alpha * s_sem + (1.0 - alpha) * s_ft;
}

double fuse_with_fields(double s_arms, const std::map<std::string, double>& field_scores,
                        double gamma) {
    require_unit_interval(s_arms, "fused arm score");
    require_unit_interval(gamma, "gamma");
    if (field_scores.empty()) return s_arms;
    double sum = 0.0;
    for (const auto& [field, score] : field_scores) {
        require_unit_interval(score, "field score");
        sum += score;
    }
    const double mean = sum / static_cast<double>(field_scores.size());
    return gamma * s_arms + (1.0 - gamma) * mean;
}

HybridSearcher::HybridSearcher(const InvertedIndex* lexical, const VectorStore& vectors,
                               const EmbeddingProvider& provider,
                               std::unordered_map<EntryId, AuthorId> entry_authors)
    : lexical_(lexical),
      vectors_(vectors),
      provider_(provider),
      entry_authors_(std::move(entry_authors)) {}

std::optional<AuthorId> HybridSearcher::author_of(EntryId entry) const {
    auto it = entry_authors_.find(entry);
    if (it == entry_authors_.end()) return std::nullopt;
    return it->second;
}

std::vector<LexicalHit> HybridSearcher::lexical_arm(std::string_view query,
                                                    const FusionParams& params,
                                                    const EntryIdSet* filter) const {
    if (lexical_ == nullptr) return {};
    return search_lexical(*lexical_, query, params.k, params.scorer, filter, params.bm25);
}

std::vector<SemanticHit> HybridSearcher::semantic_arm(std::string_view query, int k,
                                                      const EntryIdSet* filter) const {
    if (vectors_.count(OwnerKind::entry) == 0) return {};
    return vectors_.search_semantic(provider_.embed(query), k, filter);
}

std::vector<ScoredCandidate> HybridSearcher::search(std::string_view query,
                                                    const FusionParams& params,
                                                    const EntryIdSet* filter) const {
    params.validate();
    if (query.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
        throw Error(ErrorCode::invalid_argument, "query is empty");
    }
    if (lexical_ == nullptr && vectors_.count(OwnerKind::entry) == 0) return {};

    const Embedding query_embedding = provider_.embed(query);
    std::vector<std::string> query_tokens;
    std::vector<LexicalHit> lexical_hits;
    if (lexical_ != nullptr) {
        query_tokens = analyze(query, lexical_->analyzer());
        lexical_hits = search_lexical_tokens(*lexical_, query_tokens, params.k, params.scorer,
                                             filter, params.bm25);
    }
    std::vector<SemanticHit> semantic_hits;
    if (vectors_.count(OwnerKind::entry) != 0) {
        semantic_hits = vectors_.search_semantic(query_embedding, params.k, filter);
    }

    std::map<EntryId, ScoredCandidate> pool;
    for (const auto& h : lexical_hits) {
        auto& c = pool[h.entry];
        c.entry_id = h.entry;
        c.s_ft_raw = h.score;
    }
    for (const auto& h : semantic_hits) {
        auto& c = pool[h.entry];
        c.entry_id = h.entry;
        c.s_sem_raw = h.cosine;
    }
    if (pool.empty()) return {};

    std::set<EntryId> from_lexical;
    for (const auto& h : lexical_hits) from_lexical.insert(h.entry);
    std::set<EntryId> from_semantic;
    for (const auto& h : semantic_hits) from_semantic.insert(h.entry);

    std::vector<ScoredCandidate> candidates;
    candidates.reserve(pool.size());
    for (auto& [id, c] : pool) {
        if (!from_lexical.contains(id)) {
            c.s_ft_raw = lexical_ != nullptr && lexical_->contains(id)
                             ? score_lexical(params.scorer, query_tokens, id, *lexical_, params.bm25)
                             : 0.0;
        }
        if (!from_semantic.contains(id)) {
            auto cos = vectors_.entry_cosine(query_embedding, id);
            if (!cos) {
                throw Error(ErrorCode::integrity,
                            "entry " + std::to_string(id) + " has no embedding for model " +
                                query_embedding.model_id);
            }
            c.s_sem_raw = *cos;
        }
        candidates.push_back(std::move(c));
    }

    std::vector<double> sem_raw;
    std::vector<double> ft_raw;
    for (const auto& c : candidates) {
        sem_raw.push_back(c.s_sem_raw);
        ft_raw.push_back(c.s_ft_raw);
    }
    const auto sem = normalize_minmax(sem_raw);
    const auto ft = normalize_minmax(ft_raw);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& c = candidates[i];
        c.s_sem = sem[i];
        c.s_ft = ft[i];
        c.s_eq1 = fuse_arms(c.s_sem, c.s_ft, params.alpha);
        if (!params.fields.empty()) {
            if (auto author = author_of(c.entry_id)) {
                c.field_scores = field_scores(query_embedding, *author, params.fields, vectors_);
            }
        }
        c.s_final = fuse_with_fields(c.s_eq1, c.field_scores, params.gamma);
    }

    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.s_final != b.s_final ? a.s_final > b.s_final : a.entry_id < b.entry_id;
    });
    if (candidates.size() > static_cast<std::size_t>(params.k)) {
        candidates.resize(static_cast<std::size_t>(params.k));
    }
    return candidates;
}

}  // namespace diarist
