#include "diarist/vector_index.hpp"

#include "diarist/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace diarist {
namespace {

constexpr char kMagic[5] = "DRVS";
constexpr double kUnitTolerance = 1e-6;

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

}  // namespace

std::optional<FieldRef> parse_field_ref(std::string_view qualified) {
    const auto dot = qualified.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == qualified.size()) return std::nullopt;
    return FieldRef{to_lower_ascii(qualified.substr(0, dot)), to_lower_ascii(qualified.substr(dot + 1))};
}

void VectorStore::upsert(VectorRecord record) {
    const auto& v = record.embedding.vector;
    if (v.empty()) throw Error(ErrorCode::invalid_argument, "empty embedding");
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "non-finite embedding component");
        sq += x * x;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitTolerance) {
        throw Error(ErrorCode::invalid_argument, "embedding is not unit-normalised");
    }
    if (record.kind == OwnerKind::entry) record.field.clear();

    Key key{record.kind, record.owner, record.field, record.embedding.model_id};
    auto it = slots_.find(key);
    if (it != slots_.end()) {
        records_[it->second] = std::move(record);
        return;
    }
    slots_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(record));
}

const VectorRecord* VectorStore::find(OwnerKind kind, std::int64_t owner, std::string_view field,
                                      std::string_view model_id) const {
    auto it = slots_.find(std::make_tuple(kind, owner, field, model_id));
    return it == slots_.end() ? nullptr : &records_[it->second];
}

std::size_t VectorStore::count(OwnerKind kind) const {
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                  [&](const VectorRecord& r) { return r.kind == kind; }));
}

std::vector<SemanticHit> VectorStore::search_semantic(const Embedding& query, int k,
                                                      const EntryIdSet* filter) const {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
    std::vector<SemanticHit> hits;
    for (const auto& r : records_) {
        if (r.kind != OwnerKind::entry || r.embedding.model_id != query.model_id) continue;
        if (filter != nullptr && !filter->contains(r.owner)) continue;
        hits.push_back(SemanticHit{r.owner, cosine(query.vector, r.embedding.vector)});
    }
    const auto cmp = [](const SemanticHit& a, const SemanticHit& b) {
        return a.cosine != b.cosine ? a.cosine > b.cosine : a.entry < b.entry;
    };
    const auto keep = std::min(hits.size(), static_cast<std::size_t>(k));
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), cmp);
    hits.resize(keep);
    return hits;
}

std::optional<double> VectorStore::entry_cosine(const Embedding& query, EntryId entry) const {
    const auto* r = find(OwnerKind::entry, entry, "", query.model_id);
    if (r == nullptr) return std::nullopt;
    return cosine(query.vector, r->embedding.vector);
}

void VectorStore::save(std::ostream& out) const {
    binio::write_header(out, kMagic, kFormatVersion);
    binio::write<std::uint64_t>(out, records_.size());
    // Key order keeps the file byte-stable regardless of insertion order.
    for (const auto& [key, slot] : slots_) {
        const auto& r = records_[slot];
        binio::write<std::uint8_t>(out, static_cast<std::uint8_t>(r.kind));
        binio::write<std::int64_t>(out, r.owner);
        binio::write_string(out, r.field);
        binio::write_string(out, r.embedding.model_id);
        binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(r.embedding.dim()));
        for (double x : r.embedding.vector) binio::write<double>(out, x);
    }
    if (!out) throw Error(ErrorCode::io, "failed to write vector store");
}

VectorStore VectorStore::load(std::istream& in) {
    binio::expect_header(in, kMagic, kFormatVersion);
    VectorStore store;
    const auto n = binio::read<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n; ++i) {
        VectorRecord r;
        const auto kind = binio::read<std::uint8_t>(in);
        if (kind > 1) throw Error(ErrorCode::io, "corrupt vector store: unknown owner kind");
        r.kind = static_cast<OwnerKind>(kind);
        r.owner = binio::read<std::int64_t>(in);
        r.field = binio::read_string(in);
        r.embedding.model_id = binio::read_string(in);
        const auto dim = binio::read<std::uint32_t>(in);
        if (dim == 0 || dim > (1u << 16)) throw Error(ErrorCode::io, "corrupt vector store: bad dim");
        r.embedding.vector.resize(dim);
        for (auto& x : r.embedding.vector) x = binio::read<double>(in);
        store.upsert(std::move(r));
    }
    return store;
}

IndexCounts index_entries(const EmbeddingProvider& provider, std::span<const Entry> entries,
                          VectorStore& store, bool resume) {
    IndexCounts counts;
    std::vector<const Entry*> todo;
    for (const auto& e : entries) {
        if (is_blank(e.text)) {
            ++counts.skipped;
        } else if (resume && store.find(OwnerKind::entry, e.id, "", provider.model_id()) != nullptr) {
            ++counts.stored;
        } else {
            todo.push_back(&e);
        }
    }
    constexpr std::size_t kChunk = 256;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < todo.size(); i += kChunk) {
        const auto n = std::min(kChunk, todo.size() - i);
        texts.clear();
        for (std::size_t j = 0; j < n; ++j) texts.push_back(todo[i + j]->text);
        std::vector<Embedding> vectors;
        try {
            vectors = provider.embed_batch(texts);
        } catch (const ProviderError& e) {
            // Only whole chunks count as stored; partial provider output is discarded.
            throw ProviderError(e.what(), e.retryable(), counts.stored);
        }
        for (std::size_t j = 0; j < n; ++j) {
            store.upsert(VectorRecord{OwnerKind::entry, todo[i + j]->id, "", std::move(vectors[j])});
            ++counts.stored;
        }
    }
    return counts;
}

IndexCounts index_fields(const EmbeddingProvider& provider, std::span<const Author> authors,
                         std::span<const FieldRef> fields, VectorStore& store, bool resume) {
    for (const auto& f : fields) {
        if (f.table != "authors" || (f.column != "bio" && f.column != "name")) {
            throw Error(ErrorCode::invalid_argument,
                        "field '" + f.qualified() + "' is not a semantically indexable text column");
        }
    }
    IndexCounts counts;
    for (const auto& a : authors) {
        for (const auto& f : fields) {
            const std::string& value = f.column == "bio" ? a.bio : a.name;
            if (is_blank(value)) {
                ++counts.skipped;
                continue;
            }
            if (resume && store.find(OwnerKind::field, a.id, f.qualified(), provider.model_id())) {
                ++counts.stored;
                continue;
            }
            Embedding emb;
            try {
                emb = provider.embed(value);
            } catch (const ProviderError& e) {
                throw ProviderError(e.what(), e.retryable(), counts.stored);
            }
            store.upsert(VectorRecord{OwnerKind::field, a.id, f.qualified(), std::move(emb)});
            ++counts.stored;
        }
    }
    return counts;
}

std::map<std::string, double> field_scores(const Embedding& query, const Entry& entry,
                                           std::span<const FieldRef> fields,
                                           const VectorStore& store) {
    return field_scores(query, entry.author_id, fields, store);
}

std::map<std::string, double> field_scores(const Embedding& query, AuthorId author,
                                           std::span<const FieldRef> fields,
                                           const VectorStore& store) {
    std::map<std::string, double> scores;
    for (const auto& f : fields) {
        const auto name = f.qualified();
        const auto* r = store.find(OwnerKind::field, author, name, query.model_id);
        if (r == nullptr) continue;
        scores.emplace(name, (1.0 + cosine(query.vector, r->embedding.vector)) / 2.0);
    }
    return scores;
}

}  // namespace diarist
