#pragma once

#include "diarist/embedding.hpp"
#include "diarist/knowledge_base.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace diarist {

enum class OwnerKind : std::uint8_t { entry = 0, field = 1 };

// A semantically indexed metadata column, e.g. authors.bio.
struct FieldRef {
    std::string table;
    std::string column;

    std::string qualified() const { return table + "." + column; }
    auto operator<=>(const FieldRef&) const = default;
};

std::optional<FieldRef> parse_field_ref(std::string_view qualified);

struct VectorRecord {
    OwnerKind kind = OwnerKind::entry;
    std::int64_t owner = 0;
    // Qualified column name for field records, empty for entries.
    std::string field;
    Embedding embedding;
};

struct SemanticHit {
    EntryId entry = 0;
    double cosine = 0.0;

    bool operator==(const SemanticHit&) const = default;
};

// Holds at most one record per (kind, owner, field, model). A store value is
// not internally synchronised; publish a new one to swap snapshots.
class VectorStore {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    // Inserts or replaces. Throws invalid_argument for a non-finite or
    // non-unit vector.
    void upsert(VectorRecord record);

    const VectorRecord* find(OwnerKind kind, std::int64_t owner, std::string_view field,
                             std::string_view model_id) const;
    std::size_t size() const { return records_.size(); }
    std::size_t count(OwnerKind kind) const;

    // Exact scan over entry records of the query's model. Descending cosine,
    // ties by ascending id. Throws invalid_argument for k <= 0 or a dimension
    // mismatch.
    std::vector<SemanticHit> search_semantic(const Embedding& query, int k,
                                             const EntryIdSet* filter = nullptr) const;

    // Cosine between the query and the stored embedding of one entry, or
    // nullopt when the entry has no record for the query's model.
    std::optional<double> entry_cosine(const Embedding& query, EntryId entry) const;

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& r : records_) fn(r);
    }

    void save(std::ostream& out) const;
    static VectorStore load(std::istream& in);

private:
    using Key = std::tuple<OwnerKind, std::int64_t, std::string, std::string>;
    std::vector<VectorRecord> records_;
    std::map<Key, std::size_t, std::less<>> slots_;
};

struct IndexCounts {
    std::size_t stored = 0;
    std::size_t skipped = 0;

    bool operator==(const IndexCounts&) const = default;
};

// Embeds and upserts every entry's text. On provider failure throws
// ProviderError whose completed() is the number of entries stored by this
// call; with `resume` set, entries that already have a record are skipped.
IndexCounts index_entries(const EmbeddingProvider& provider, std::span<const Entry> entries,
                          VectorStore& store, bool resume = false);

// Embeds author metadata columns in `fields` (only the authors table carries
// free-text fields). Empty values are skipped and counted.
IndexCounts index_fields(const EmbeddingProvider& provider, std::span<const Author> authors,
                         std::span<const FieldRef> fields, VectorStore& store, bool resume = false);

// S_c = (1 + cos) / 2 for every field in `fields` that has a record for the
// entry's author. Fields without a record are omitted.
std::map<std::string, double> field_scores(const Embedding& query, const Entry& entry,
                                           std::span<const FieldRef> fields,
                                           const VectorStore& store);
std::map<std::string, double> field_scores(const Embedding& query, AuthorId author,
                                           std::span<const FieldRef> fields,
                                           const VectorStore& store);

}  // namespace diarist
