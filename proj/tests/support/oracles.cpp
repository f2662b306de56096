#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace diarist::testing {

std::vector<std::pair<EntryId, double>> brute_force_top_k(const std::vector<IdVector>& rows,
                                                          const std::vector<double>& query, std::size_t k) {
    std::vector<std::pair<EntryId, double>> scored;
    scored.reserve(rows.size());
    for (const auto& [id, v] : rows) {
        double dot = 0, a = 0, b = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            dot += v[i] * query[i];
            a += v[i] * v[i];
            b += query[i] * query[i];
        }
        scored.emplace_back(id, dot / std::sqrt(a * b));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    scored.resize(std::min(k, scored.size()));
    return scored;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

LexicalOracle::LexicalOracle(const std::map<EntryId, std::string>& docs) {
    for (const auto& [id, text] : docs) {
        const auto words = split_words(text);
        for (const auto& w : words) ++tf_[id][w];
        len_[id] = static_cast<int>(words.size());
        avg_len_ += len_[id];
        for (const auto& [w, c] : tf_[id]) ++df_[w];
    }
    n_ = static_cast<double>(docs.size());
    avg_len_ /= n_;
}

double LexicalOracle::idf(const std::string& term) const {
    auto it = df_.find(term);
    const double d = it == df_.end() ? 0.0 : it->second;
    return std::log((1.0 + n_) / (1.0 + d));
}

double LexicalOracle::tfidf(const std::vector<std::string>& query, EntryId doc) const {
    std::map<std::string, int> qtf;
    for (const auto& w : query) ++qtf[w];
    const auto& dtf = tf_.at(doc);
    double dot = 0, qn = 0, dn = 0;
    for (const auto& [w, c] : dtf) {
        const double x = (1 + std::log(c)) * idf(w);
        dn += x * x;
    }
    for (const auto& [w, c] : qtf) {
        const double wq = (1 + std::log(c)) * idf(w);
        qn += wq * wq;
        if (auto it = dtf.find(w); it != dtf.end()) dot += wq * (1 + std::log(it->second)) * idf(w);
    }
    if (dot == 0 || qn == 0 || dn == 0) return 0;
    return dot / (std::sqrt(qn) * std::sqrt(dn));
}

double LexicalOracle::bm25(const std::vector<std::string>& query, EntryId doc, double k1, double b) const {
    const std::set<std::string> distinct(query.begin(), query.end());
    const auto& dtf = tf_.at(doc);
    double s = 0;
    for (const auto& w : distinct) {
        auto it = dtf.find(w);
        if (it == dtf.end()) continue;
        const double f = it->second;
        const double d = df_.at(w);
        const double idf = std::log(1 + (n_ - d + 0.5) / (d + 0.5));
        s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * len_.at(doc) / avg_len_));
    }
    return s;
}

namespace {

std::vector<double> minmax(const std::vector<double>& raw) {
    const double lo = *std::min_element(raw.begin(), raw.end());
    const double hi = *std::max_element(raw.begin(), raw.end());
    std::vector<double> out;
    for (double x : raw) out.push_back(hi == lo ? 1.0 : (x - lo) / (hi - lo));
    return out;
}

template <typename T>
void top_k(std::vector<std::pair<EntryId, T>>& v, std::size_t k) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (v.size() > k) v.resize(k);
}

}  // namespace

std::vector<OracleCandidate> recompute_hybrid(const HybridSearcher& searcher, const std::string& query,
                                              const FusionParams& params) {
    const auto k = static_cast<std::size_t>(params.k);
    const auto q_emb = searcher.provider().embed(query);
    const auto tokens = analyze(query, searcher.lexical()->analyzer());

    std::vector<std::pair<EntryId, double>> lex, sem;
    for (EntryId id : searcher.lexical()->doc_ids()) {
        const double s = score_lexical(params.scorer, tokens, id, *searcher.lexical(), params.bm25);
        if (s > 0) lex.emplace_back(id, s);
    }
    searcher.vectors().for_each([&](const VectorRecord& r) {
        if (r.kind == OwnerKind::entry && r.embedding.model_id == q_emb.model_id) {
            sem.emplace_back(r.owner, cosine(q_emb.vector, r.embedding.vector));
        }
    });
    top_k(lex, k);
    top_k(sem, k);

    std::set<EntryId> ids;
    for (const auto& [id, s] : lex) ids.insert(id);
    for (const auto& [id, s] : sem) ids.insert(id);

    std::vector<EntryId> order(ids.begin(), ids.end());
    std::vector<double> sem_raw, ft_raw;
    for (EntryId id : order) {
        ft_raw.push_back(score_lexical(params.scorer, tokens, id, *searcher.lexical(), params.bm25));
        const auto* rec = searcher.vectors().find(OwnerKind::entry, id, "", q_emb.model_id);
        sem_raw.push_back(cosine(q_emb.vector, rec->embedding.vector));
    }
    const auto sem_n = minmax(sem_raw), ft_n = minmax(ft_raw);

    std::vector<OracleCandidate> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        OracleCandidate c{order[i], sem_n[i], ft_n[i], 0};
        const double arms = params.alpha * c.s_sem + (1 - params.alpha) * c.s_ft;
        double field_sum = 0;
        int field_n = 0;
        if (auto author = searcher.author_of(c.id)) {
            for (const auto& f : params.fields) {
                const auto* rec = searcher.vectors().find(OwnerKind::field, *author, f.qualified(), q_emb.model_id);
                if (!rec) continue;
                field_sum += (1 + cosine(q_emb.vector, rec->embedding.vector)) / 2;
                ++field_n;
            }
        }
        c.s_final = field_n == 0 ? arms : params.gamma * arms + (1 - params.gamma) * field_sum / field_n;
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.s_final != b.s_final ? a.s_final > b.s_final : a.id < b.id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

namespace {

double delta2(int c, int k, KrippendorffMetric metric, const std::map<int, int>& n_g) {
    switch (metric) {
    case KrippendorffMetric::nominal: return c == k ? 0.0 : 1.0;
    case KrippendorffMetric::interval: return static_cast<double>((c - k) * (c - k));
    case KrippendorffMetric::ordinal: {
        const int lo = std::min(c, k), hi = std::max(c, k);
        double s = 0;
        for (int g = lo; g <= hi; ++g) {
            auto it = n_g.find(g);
            s += it == n_g.end() ? 0 : it->second;
        }
        auto count = [&](int g) {
            auto it = n_g.find(g);
            return it == n_g.end() ? 0.0 : static_cast<double>(it->second);
        };
        s -= (count(c) + count(k)) / 2.0;
        return s * s;
    }
    }
    return 0;
}

}  // namespace

double krippendorff_pairwise(const std::vector<std::vector<std::optional<int>>>& cells, KrippendorffMetric metric) {
    std::vector<std::vector<int>> units;
    for (const auto& row : cells) {
        std::vector<int> vals;
        for (const auto& c : row) {
            if (c) vals.push_back(*c);
        }
        if (vals.size() >= 2) units.push_back(vals);
    }
    std::vector<int> all;
    std::map<int, int> n_g;
    for (const auto& u : units) {
        for (int v : u) {
            all.push_back(v);
            ++n_g[v];
        }
    }
    const double n = static_cast<double>(all.size());
    double d_o = 0;
    for (const auto& u : units) {
        double s = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (std::size_t j = 0; j < u.size(); ++j) {
                if (i != j) s += delta2(u[i], u[j], metric, n_g);
            }
        }
        d_o += s / static_cast<double>(u.size() - 1);
    }
    d_o /= n;
    double d_e = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = 0; j < all.size(); ++j) {
            if (i != j) d_e += delta2(all[i], all[j], metric, n_g);
        }
    }
    d_e /= n * (n - 1);
    return 1.0 - d_o / d_e;
}

}  // namespace diarist::testing
