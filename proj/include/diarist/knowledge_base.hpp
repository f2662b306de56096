#pragma once

#include "diarist/schema.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace diarist {

class ValidatedSql;

using EntryId = std::int64_t;
using AuthorId = std::int64_t;
using EntryIdSet = std::set<EntryId>;

// ISO-8601 calendar date, "YYYY-MM-DD". Ordering is chronological.
class IsoDate {
public:
    static std::optional<IsoDate> parse(std::string_view text);

    const std::string& str() const { return text_; }
    int year() const;

    auto operator<=>(const IsoDate&) const = default;

private:
    explicit IsoDate(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

struct Author {
    AuthorId id = 0;
    std::string name;
    std::optional<IsoDate> birth_date;
    std::optional<IsoDate> death_date;
    std::string bio;

    bool operator==(const Author&) const = default;
};

struct Entry {
    EntryId id = 0;
    AuthorId author_id = 0;
    IsoDate date = *IsoDate::parse("1900-01-01");
    std::string text;
    std::optional<std::string> source_url;

    bool operator==(const Entry&) const = default;
};

enum class CorpusFormat { jsonl, csv };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

struct IngestCounts {
    std::size_t entries = 0;
    std::size_t authors = 0;

    bool operator==(const IngestCounts&) const = default;
};

using SqlValue = std::variant<std::monostate, std::int64_t, double, std::string>;

struct ResultColumn {
    std::string name;
    // Origin in the base schema when the column is a plain column reference.
    std::string origin_table;
    std::string origin_column;
};

struct RowSet {
    std::vector<ResultColumn> columns;
    std::vector<std::vector<SqlValue>> rows;

    // Values of the first projected column that originates from entries.id, or
    // nullopt when no such column is projected.
    std::optional<EntryIdSet> entry_ids() const;
};

// "<base_url>/entry/{id}" with {id} substituted; a stored source_url wins.
std::string resolve_entry_url(const Entry& entry, std::string_view url_template);

// Relational store of authors and entries on an embedded SQLite database.
// Readers share a lock; ingestion takes it exclusively.
class KnowledgeBase {
public:
    static KnowledgeBase open(const std::filesystem::path& path);
    static KnowledgeBase open_in_memory();

    KnowledgeBase(KnowledgeBase&&) noexcept;
    KnowledgeBase& operator=(KnowledgeBase&&) noexcept;
    ~KnowledgeBase();

    // All-or-nothing: a malformed record or a dangling author_id rejects the
    // whole batch. Records are upserted by id, so re-ingesting is idempotent.
    IngestCounts ingest(std::istream& source, CorpusFormat format);

    std::optional<Entry> get_entry(EntryId id) const;
    std::optional<Author> get_author(AuthorId id) const;
    std::vector<Entry> entries() const;
    std::vector<Author> authors() const;
    std::size_t entry_count() const;

    // Only guard-accepted SQL reaches the engine. Writes are additionally
    // refused by an authorizer installed for the duration of the statement.
    RowSet execute_select(const ValidatedSql& sql) const;

    const SchemaDescription& schema() const { return schema_; }
    std::string render_schema_description() const;

    // Hash over a canonical dump of every row, ordered by primary key.
    std::uint64_t content_hash() const;

private:
    explicit KnowledgeBase(sqlite3* db);
    void create_schema();

    struct Handle;
    std::unique_ptr<Handle> handle_;
    std::unique_ptr<std::shared_mutex> mutex_;
    SchemaDescription schema_;
};

}  // namespace diarist
