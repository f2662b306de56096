#include "diarist/lexical_index.hpp"

#include "diarist/binary_io.hpp"
#include "diarist/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace diarist {
namespace {

constexpr char kMagic[5] = "DRLX";

std::map<std::string_view, std::uint32_t> count_terms(std::span<const std::string> tokens) {
    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

double log_tf(std::uint32_t tf) { return 1.0 + std::log(static_cast<double>(tf)); }

}  // namespace

InvertedIndex InvertedIndex::build(std::span<const Document> docs, AnalyzerConfig analyzer) {
    if (docs.empty()) throw Error(ErrorCode::empty_corpus, "cannot build an index over zero documents");

    InvertedIndex index;
    index.analyzer_ = std::move(analyzer);

    std::vector<const Document*> ordered;
    ordered.reserve(docs.size());
    for (const auto& d : docs) ordered.push_back(&d);
    std::sort(ordered.begin(), ordered.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });

    index.docs_.reserve(docs.size());
    for (const Document* doc : ordered) {
        if (!index.docs_.empty() && index.docs_.back().id == doc->id) {
            throw Error(ErrorCode::invalid_argument,
                        "duplicate document id " + std::to_string(doc->id));
        }
        const auto tokens = analyze(doc->text, index.analyzer_);
        index.docs_.push_back(DocInfo{doc->id, static_cast<std::uint32_t>(tokens.size()), 0.0});
        for (const auto& [term, tf] : count_terms(tokens)) {
            auto it = index.postings_.find(term);
            if (it == index.postings_.end()) {
                it = index.postings_.emplace(std::string(term), std::vector<Posting>{}).first;
            }
            it->second.push_back(Posting{doc->id, tf});
        }
    }
    index.finalize();
    return index;
}

InvertedIndex InvertedIndex::build(std::span<const Entry> entries, AnalyzerConfig analyzer) {
    std::vector<Document> docs;
    docs.reserve(entries.size());
    for (const auto& e : entries) docs.push_back(Document{e.id, e.text});
    return build(docs, std::move(analyzer));
}

void InvertedIndex::finalize() {
    slot_.clear();
    slot_.reserve(docs_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        slot_.emplace(docs_[i].id, i);
        total += docs_[i].length;
        docs_[i].tfidf_norm = 0.0;
    }
    avg_doc_len_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());

    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, list] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* term : terms) {
        const double idf = tfidf_idf(*term);
        for (const auto& p : postings_.find(*term)->second) {
            const double w = log_tf(p.tf) * idf;
            docs_[slot_.at(p.entry)].tfidf_norm += w * w;
        }
    }
    for (auto& d : docs_) d.tfidf_norm = std::sqrt(d.tfidf_norm);
}

std::size_t InvertedIndex::slot_of(EntryId entry) const {
    auto it = slot_.find(entry);
    if (it == slot_.end()) {
        throw Error(ErrorCode::not_found, "entry " + std::to_string(entry) + " is not indexed");
    }
    return it->second;
}

std::size_t InvertedIndex::df(std::string_view term) const { return postings(term).size(); }

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

std::uint32_t InvertedIndex::tf(std::string_view term, EntryId entry) const {
    const auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), entry,
                               [](const Posting& p, EntryId id) { return p.entry < id; });
    return it != list.end() && it->entry == entry ? it->tf : 0;
}

std::uint32_t InvertedIndex::doc_length(EntryId entry) const { return docs_[slot_of(entry)].length; }

std::vector<EntryId> InvertedIndex::doc_ids() const {
    std::vector<EntryId> ids;
    ids.reserve(docs_.size());
    for (const auto& d : docs_) ids.push_back(d.id);
    return ids;
}

double InvertedIndex::tfidf_idf(std::string_view term) const {
    const double n = static_cast<double>(docs_.size());
    return std::log((1.0 + n) / (1.0 + static_cast<double>(df(term))));
}

double InvertedIndex::tfidf_norm(EntryId entry) const { return docs_[slot_of(entry)].tfidf_norm; }

void InvertedIndex::save(std::ostream& out) const {
    binio::write_header(out, kMagic, kFormatVersion);
    binio::write<std::uint8_t>(out, analyzer_.lowercase ? 1 : 0);
    binio::write<std::uint8_t>(out, static_cast<std::uint8_t>(analyzer_.stemmer));
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(analyzer_.stopwords.size()));
    for (const auto& w : analyzer_.stopwords) binio::write_string(out, w);

    binio::write<std::uint64_t>(out, docs_.size());
    for (const auto& d : docs_) {
        binio::write<std::int64_t>(out, d.id);
        binio::write<std::uint32_t>(out, d.length);
    }
    // Sorted dictionary keeps the file byte-stable across runs.
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, list] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    binio::write<std::uint64_t>(out, terms.size());
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        binio::write_string(out, *term);
        binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            binio::write<std::int64_t>(out, p.entry);
            binio::write<std::uint32_t>(out, p.tf);
        }
    }
    if (!out) throw Error(ErrorCode::io, "failed to write lexical index");
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    binio::expect_header(in, kMagic, kFormatVersion);
    InvertedIndex index;
    index.analyzer_.lowercase = binio::read<std::uint8_t>(in) != 0;
    const auto stemmer = binio::read<std::uint8_t>(in);
    if (stemmer > static_cast<std::uint8_t>(Stemmer::light_suffix)) {
        throw Error(ErrorCode::io, "corrupt lexical index: unknown stemmer");
    }
    index.analyzer_.stemmer = static_cast<Stemmer>(stemmer);
    const auto nstop = binio::read<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nstop; ++i) index.analyzer_.stopwords.insert(binio::read_string(in));

    const auto ndocs = binio::read<std::uint64_t>(in);
    index.docs_.reserve(ndocs);
    for (std::uint64_t i = 0; i < ndocs; ++i) {
        DocInfo d;
        d.id = binio::read<std::int64_t>(in);
        d.length = binio::read<std::uint32_t>(in);
        index.docs_.push_back(d);
    }
    const auto nterms = binio::read<std::uint64_t>(in);
    index.postings_.reserve(nterms);
    for (std::uint64_t i = 0; i < nterms; ++i) {
        auto term = binio::read_string(in);
        const auto n = binio::read<std::uint32_t>(in);
        std::vector<Posting> list;
        list.reserve(n);
        for (std::uint32_t j = 0; j < n; ++j) {
            Posting p;
            p.entry = binio::read<std::int64_t>(in);
            p.tf = binio::read<std::uint32_t>(in);
            list.push_back(p);
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    index.finalize();
    for (const auto& [term, list] : index.postings_) {
        for (const auto& p : list) {
            if (!index.slot_.contains(p.entry)) {
                throw Error(ErrorCode::io, "corrupt lexical index: posting for unknown entry");
            }
        }
    }
    return index;
}

std::string_view to_string(LexicalScorer scorer) {
    return scorer == LexicalScorer::tfidf ? "tfidf" : "bm25";
}

std::optional<LexicalScorer> parse_lexical_scorer(std::string_view name) {
    if (name == "tfidf" || name == "tf-idf") return LexicalScorer::tfidf;
    if (name == "bm25") return LexicalScorer::bm25;
    return std::nullopt;
}

double score_tfidf(std::span<const std::string> query_tokens, EntryId entry,
                   const InvertedIndex& index) {
    const double doc_norm = index.tfidf_norm(entry);
    double dot = 0.0;
    double query_norm = 0.0;
    for (const auto& [term, qtf] : count_terms(query_tokens)) {
        const double idf = index.tfidf_idf(term);
        const double wq = log_tf(qtf) * idf;
        query_norm += wq * wq;
        const auto dtf = index.tf(term, entry);
        if (dtf != 0) dot += wq * log_tf(dtf) * idf;
    }
    if (dot == 0.0 || doc_norm == 0.0 || query_norm == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(query_norm) * doc_norm), 0.0, 1.0);
}

double score_bm25(std::span<const std::string> query_tokens, EntryId entry,
                  const InvertedIndex& index, Bm25Params params) {
    const double n = static_cast<double>(index.doc_count());
    const double len_ratio = index.avg_doc_len() > 0.0
                                 ? static_cast<double>(index.doc_length(entry)) / index.avg_doc_len()
                                 : 0.0;
    const double norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
    double score = 0.0;
    for (const auto& [term, qtf] : count_terms(query_tokens)) {
        const auto tf = index.tf(term, entry);
        if (tf == 0) continue;
        const double df = static_cast<double>(index.df(term));
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
    }
    return score;
}

double score_lexical(LexicalScorer scorer, std::span<const std::string> query_tokens, EntryId entry,
                     const InvertedIndex& index, Bm25Params params) {
    return scorer == LexicalScorer::tfidf ? score_tfidf(query_tokens, entry, index)
                                          : score_bm25(query_tokens, entry, index, params);
}

std::vector<LexicalHit> search_lexical_tokens(const InvertedIndex& index,
                                              std::span<const std::string> query_tokens, int k,
                                              LexicalScorer scorer, const EntryIdSet* filter,
                                              Bm25Params params) {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be positive");

    // Only documents sharing a term with the query can score above zero.
    std::vector<EntryId> candidates;
    for (const auto& [term, qtf] : count_terms(query_tokens)) {
        for (const auto& p : index.postings(term)) {
            if (filter == nullptr || filter->contains(p.entry)) candidates.push_back(p.entry);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<LexicalHit> hits;
    hits.reserve(candidates.size());
    for (EntryId id : candidates) {
        const double s = score_lexical(scorer, query_tokens, id, index, params);
        if (s > 0.0) hits.push_back(LexicalHit{id, s});
    }
    const auto cmp = [](const LexicalHit& a, const LexicalHit& b) {
        return a.score != b.score ? a.score > b.score : a.entry < b.entry;
    };
    const auto keep = std::min(hits.size(), static_cast<std::size_t>(k));
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), cmp);
    hits.resize(keep);
    return hits;
}

std::vector<LexicalHit> search_lexical(const InvertedIndex& index, std::string_view query, int k,
                                       LexicalScorer scorer, const EntryIdSet* filter,
                                       Bm25Params params) {
    const auto tokens = analyze(query, index.analyzer());
    return search_lexical_tokens(index, tokens, k, scorer, filter, params);
}

}  // namespace diarist
