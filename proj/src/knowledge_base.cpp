#define SQLITE_ENABLE_COLUMN_METADATA 1
#include "diarist/knowledge_base.hpp"

#include "diarist/csv.hpp"
#include "diarist/error.hpp"
#include "diarist/hash.hpp"
#include "diarist/sql_guard.hpp"

#include <json.hpp>
#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <map>
#include <mutex>
#include <sstream>

namespace diarist {
namespace {

using nlohmann::json;

// Upper bound on VM steps for a single read query; cross joins over a large
// corpus are aborted rather than allowed to stall the turn.
constexpr int kProgressOpsPerCheck = 10000;
constexpr int kMaxProgressChecks = 20000;

constexpr std::string_view kCreateSchema = R"sql(
CREATE TABLE IF NOT EXISTS authors (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    birth_date TEXT,
    death_date TEXT,
    bio TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS entries (
    id INTEGER PRIMARY KEY,
    author_id INTEGER NOT NULL REFERENCES authors(id),
    date TEXT NOT NULL,
    text TEXT NOT NULL,
    source_url TEXT
);
CREATE INDEX IF NOT EXISTS entries_author ON entries(author_id);
CREATE INDEX IF NOT EXISTS entries_date ON entries(date);
)sql";

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n\f\v");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(begin, end - begin + 1));
}

class Statement {
public:
    Statement(sqlite3* db, std::string_view sql) {
        if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) !=
            SQLITE_OK) {
            throw Error(ErrorCode::execution_failed, sqlite3_errmsg(db));
        }
    }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;
    ~Statement() { sqlite3_finalize(stmt_); }

    sqlite3_stmt* get() const { return stmt_; }

    void bind(int index, std::int64_t value) { sqlite3_bind_int64(stmt_, index, value); }
    void bind(int index, const std::string& value) {
        sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                          SQLITE_TRANSIENT);
    }
    void bind(int index, const std::optional<std::string>& value) {
        if (value) {
            bind(index, *value);
        } else {
            sqlite3_bind_null(stmt_, index);
        }
    }
    void bind(int index, const std::optional<IsoDate>& value) {
        if (value) {
            bind(index, value->str());
        } else {
            sqlite3_bind_null(stmt_, index);
        }
    }

    int step() { return sqlite3_step(stmt_); }
    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    std::int64_t int_at(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::string text_at(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p),
                               static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    std::optional<std::string> opt_text_at(int col) const {
        if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
        return text_at(col);
    }

private:
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, std::string_view sql) {
    char* message = nullptr;
    if (sqlite3_exec(db, std::string(sql).c_str(), nullptr, nullptr, &message) != SQLITE_OK) {
        std::string text = message ? message : "unknown sqlite error";
        sqlite3_free(message);
        throw Error(ErrorCode::execution_failed, text);
    }
}

Author read_author(const Statement& st) {
    Author a;
    a.id = st.int_at(0);
    a.name = st.text_at(1);
    if (auto v = st.opt_text_at(2)) a.birth_date = IsoDate::parse(*v);
    if (auto v = st.opt_text_at(3)) a.death_date = IsoDate::parse(*v);
    a.bio = st.text_at(4);
    return a;
}

Entry read_entry(const Statement& st) {
    Entry e;
    e.id = st.int_at(0);
    e.author_id = st.int_at(1);
    e.date = *IsoDate::parse(st.text_at(2));
    e.text = st.text_at(3);
    e.source_url = st.opt_text_at(4);
    return e;
}

constexpr std::string_view kSelectAuthor =
    "SELECT id, name, birth_date, death_date, bio FROM authors";
constexpr std::string_view kSelectEntry =
    "SELECT id, author_id, date, text, source_url FROM entries";

// ---- record parsing -------------------------------------------------------

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + what);
}

IsoDate require_date(std::size_t line, std::string_view field, std::string_view value) {
    auto d = IsoDate::parse(value);
    if (!d) malformed(line, std::string(field) + " is not an ISO-8601 date: '" +
                                std::string(value) + "'");
    return *d;
}

std::optional<IsoDate> optional_date(std::size_t line, std::string_view field,
                                     std::string_view value) {
    if (value.empty()) return std::nullopt;
    return require_date(line, field, value);
}

std::int64_t require_int(std::size_t line, std::string_view field, std::string_view value) {
    std::int64_t out = 0;
    std::size_t consumed = 0;
    try {
        out = std::stoll(std::string(value), &consumed);
    } catch (const std::exception&) {
        malformed(line, std::string(field) + " is not an integer: '" + std::string(value) + "'");
    }
    if (consumed != value.size()) {
        malformed(line, std::string(field) + " is not an integer: '" + std::string(value) + "'");
    }
    return out;
}

void check_author(std::size_t line, const Author& a) {
    if (trim(a.name).empty()) malformed(line, "author name is empty");
    if (a.birth_date && a.death_date && *a.death_date < *a.birth_date) {
        malformed(line, "author " + std::to_string(a.id) + " has death_date before birth_date");
    }
}

void check_entry(std::size_t line, const Entry& e) {
    if (trim(e.text).empty()) malformed(line, "entry " + std::to_string(e.id) + " has empty text");
}

struct Batch {
    std::vector<std::pair<std::size_t, Author>> authors;
    std::vector<std::pair<std::size_t, Entry>> entries;
};

std::string json_string(std::size_t line, const json& obj, const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) malformed(line, std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) malformed(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::int64_t json_int(std::size_t line, const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) malformed(line, std::string("missing field '") + key + "'");
    if (!it->is_number_integer()) {
        malformed(line, std::string("field '") + key + "' must be an integer");
    }
    return it->get<std::int64_t>();
}

Batch parse_jsonl(std::istream& in) {
    Batch batch;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (trim(raw).empty()) continue;
        json obj;
        try {
            obj = json::parse(raw);
        } catch (const json::parse_error& e) {
            malformed(line, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) malformed(line, "record is not a JSON object");

        std::string kind = json_string(line, obj, "kind", false);
        if (kind.empty()) kind = obj.contains("author_id") ? "entry" : "author";
        if (kind == "author") {
            Author a;
            a.id = json_int(line, obj, "id");
            a.name = json_string(line, obj, "name", true);
            a.birth_date = optional_date(line, "birth_date", json_string(line, obj, "birth_date", false));
            a.death_date = optional_date(line, "death_date", json_string(line, obj, "death_date", false));
            a.bio = json_string(line, obj, "bio", false);
            check_author(line, a);
            batch.authors.emplace_back(line, std::move(a));
        } else if (kind == "entry") {
            Entry e;
            e.id = json_int(line, obj, "id");
            e.author_id = json_int(line, obj, "author_id");
            e.date = require_date(line, "date", json_string(line, obj, "date", true));
            e.text = json_string(line, obj, "text", true);
            std::string url = json_string(line, obj, "source_url", false);
            if (!url.empty()) e.source_url = std::move(url);
            check_entry(line, e);
            batch.entries.emplace_back(line, std::move(e));
        } else {
            malformed(line, "unknown record kind '" + kind + "'");
        }
    }
    return batch;
}

const std::vector<std::string> kAuthorHeader = {"id", "name", "birth_date", "death_date", "bio"};
const std::vector<std::string> kEntryHeader = {"id", "author_id", "date", "text", "source_url"};

Batch parse_csv(std::istream& in) {
    Batch batch;
    CsvReader reader(in);
    CsvRecord header;
    if (!reader.next(header)) return batch;
    for (auto& h : header.fields) h = trim(h);
    const bool authors = header.fields == kAuthorHeader;
    const bool entries = header.fields == kEntryHeader;
    if (!authors && !entries) {
        malformed(header.line, "unrecognised CSV header; expected 'id,name,birth_date,death_date,bio' "
                               "or 'id,author_id,date,text,source_url'");
    }
    CsvRecord rec;
    while (reader.next(rec)) {
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;
        if (rec.fields.size() != 5) {
            malformed(rec.line, "expected 5 fields, got " + std::to_string(rec.fields.size()));
        }
        const auto& f = rec.fields;
        if (authors) {
            Author a;
            a.id = require_int(rec.line, "id", f[0]);
            a.name = f[1];
            a.birth_date = optional_date(rec.line, "birth_date", f[2]);
            a.death_date = optional_date(rec.line, "death_date", f[3]);
            a.bio = f[4];
            check_author(rec.line, a);
            batch.authors.emplace_back(rec.line, std::move(a));
        } else {
            Entry e;
            e.id = require_int(rec.line, "id", f[0]);
            e.author_id = require_int(rec.line, "author_id", f[1]);
            e.date = require_date(rec.line, "date", f[2]);
            e.text = f[3];
            if (!f[4].empty()) e.source_url = f[4];
            check_entry(rec.line, e);
            batch.entries.emplace_back(rec.line, std::move(e));
        }
    }
    return batch;
}

struct ProgressBudget {
    int checks = 0;
};

int progress_guard(void* arg) {
    auto* budget = static_cast<ProgressBudget*>(arg);
    return ++budget->checks > kMaxProgressChecks ? 1 : 0;
}

int read_only_authorizer(void*, int action, const char*, const char*, const char*, const char*) {
    switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_FUNCTION:
        return SQLITE_OK;
    default:
        return SQLITE_DENY;
    }
}

}  // namespace

// ---- IsoDate ----------------------------------------------------------------

std::optional<IsoDate> IsoDate::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
        return v;
    };
    const int year = num(0, 4);
    const int month = num(5, 2);
    const int day = num(8, 2);
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12 || day < 1) return std::nullopt;
    int max_day = kDays[static_cast<std::size_t>(month - 1)];
    if (month == 2 && is_leap(year)) max_day = 29;
    if (day > max_day) return std::nullopt;
    return IsoDate(std::string(text));
}

int IsoDate::year() const { return std::stoi(text_.substr(0, 4)); }

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
    if (iequals(name, "jsonl")) return CorpusFormat::jsonl;
    if (iequals(name, "csv")) return CorpusFormat::csv;
    return std::nullopt;
}

std::optional<EntryIdSet> RowSet::entry_ids() const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (iequals(columns[c].origin_table, "entries") && iequals(columns[c].origin_column, "id")) {
            EntryIdSet ids;
            for (const auto& row : rows) {
                if (const auto* v = std::get_if<std::int64_t>(&row[c])) ids.insert(*v);
            }
            return ids;
        }
    }
    return std::nullopt;
}

std::string resolve_entry_url(const Entry& entry, std::string_view url_template) {
    if (entry.source_url && !entry.source_url->empty()) return *entry.source_url;
    std::string out(url_template);
    const std::string id = std::to_string(entry.id);
    for (auto pos = out.find("{id}"); pos != std::string::npos; pos = out.find("{id}", pos)) {
        out.replace(pos, 4, id);
        pos += id.size();
    }
    return out;
}

// ---- KnowledgeBase ------------------------------------------------------------

struct KnowledgeBase::Handle {
    sqlite3* db = nullptr;
    ~Handle() {
        if (db) sqlite3_close(db);
    }
};

KnowledgeBase::KnowledgeBase(sqlite3* db)
    : handle_(std::make_unique<Handle>()),
      mutex_(std::make_unique<std::shared_mutex>()),
      schema_(diary_schema()) {
    handle_->db = db;
    create_schema();
}

KnowledgeBase::KnowledgeBase(KnowledgeBase&&) noexcept = default;
KnowledgeBase& KnowledgeBase::operator=(KnowledgeBase&&) noexcept = default;
KnowledgeBase::~KnowledgeBase() = default;

KnowledgeBase KnowledgeBase::open(const std::filesystem::path& path) {
    sqlite3* db = nullptr;
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.string().c_str(), &db, flags, nullptr) != SQLITE_OK) {
        std::string message = db ? sqlite3_errmsg(db) : "out of memory";
        sqlite3_close(db);
        throw Error(ErrorCode::io, "cannot open knowledge base '" + path.string() + "': " + message);
    }
    sqlite3_busy_timeout(db, 5000);
    return KnowledgeBase(db);
}

KnowledgeBase KnowledgeBase::open_in_memory() {
    sqlite3* db = nullptr;
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX |
                      SQLITE_OPEN_MEMORY;
    if (sqlite3_open_v2(":memory:", &db, flags, nullptr) != SQLITE_OK) {
        sqlite3_close(db);
        throw Error(ErrorCode::io, "cannot open in-memory knowledge base");
    }
    return KnowledgeBase(db);
}

void KnowledgeBase::create_schema() { exec(handle_->db, kCreateSchema); }

IngestCounts KnowledgeBase::ingest(std::istream& source, CorpusFormat format) {
    Batch batch = format == CorpusFormat::jsonl ? parse_jsonl(source) : parse_csv(source);

    std::unique_lock lock(*mutex_);
    sqlite3* db = handle_->db;

    std::map<AuthorId, std::size_t> batch_authors;
    for (const auto& [line, a] : batch.authors) batch_authors.emplace(a.id, line);
    {
        Statement exists(db, "SELECT 1 FROM authors WHERE id = ?1");
        for (const auto& [line, e] : batch.entries) {
            if (batch_authors.count(e.author_id)) continue;
            exists.bind(1, e.author_id);
            const bool found = exists.step() == SQLITE_ROW;
            exists.reset();
            if (!found) {
                throw Error(ErrorCode::integrity,
                            "line " + std::to_string(line) + ": entry " + std::to_string(e.id) +
                                " references unknown author_id " + std::to_string(e.author_id));
            }
        }
    }

    exec(db, "BEGIN IMMEDIATE");
    try {
        Statement put_author(db, R"sql(
            INSERT INTO authors (id, name, birth_date, death_date, bio) VALUES (?1, ?2, ?3, ?4, ?5)
            ON CONFLICT(id) DO UPDATE SET name = excluded.name, birth_date = excluded.birth_date,
                death_date = excluded.death_date, bio = excluded.bio)sql");
        for (const auto& [line, a] : batch.authors) {
            put_author.bind(1, a.id);
            put_author.bind(2, a.name);
            put_author.bind(3, a.birth_date);
            put_author.bind(4, a.death_date);
            put_author.bind(5, a.bio);
            if (put_author.step() != SQLITE_DONE) {
                throw Error(ErrorCode::execution_failed, sqlite3_errmsg(db));
            }
            put_author.reset();
        }
        Statement put_entry(db, R"sql(
            INSERT INTO entries (id, author_id, date, text, source_url) VALUES (?1, ?2, ?3, ?4, ?5)
            ON CONFLICT(id) DO UPDATE SET author_id = excluded.author_id, date = excluded.date,
                text = excluded.text, source_url = excluded.source_url)sql");
        for (const auto& [line, e] : batch.entries) {
            put_entry.bind(1, e.id);
            put_entry.bind(2, e.author_id);
            put_entry.bind(3, e.date.str());
            put_entry.bind(4, e.text);
            put_entry.bind(5, e.source_url);
            if (put_entry.step() != SQLITE_DONE) {
                throw Error(ErrorCode::execution_failed, sqlite3_errmsg(db));
            }
            put_entry.reset();
        }
        exec(db, "COMMIT");
    } catch (...) {
        sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
    return IngestCounts{batch.entries.size(), batch.authors.size()};
}

std::optional<Entry> KnowledgeBase::get_entry(EntryId id) const {
    std::shared_lock lock(*mutex_);
    Statement st(handle_->db, std::string(kSelectEntry) + " WHERE id = ?1");
    st.bind(1, id);
    if (st.step() != SQLITE_ROW) return std::nullopt;
    return read_entry(st);
}

std::optional<Author> KnowledgeBase::get_author(AuthorId id) const {
    std::shared_lock lock(*mutex_);
    Statement st(handle_->db, std::string(kSelectAuthor) + " WHERE id = ?1");
    st.bind(1, id);
    if (st.step() != SQLITE_ROW) return std::nullopt;
    return read_author(st);
}

std::vector<Entry> KnowledgeBase::entries() const {
    std::shared_lock lock(*mutex_);
    Statement st(handle_->db, std::string(kSelectEntry) + " ORDER BY id");
    std::vector<Entry> out;
    while (st.step() == SQLITE_ROW) out.push_back(read_entry(st));
    return out;
}

std::vector<Author> KnowledgeBase::authors() const {
    std::shared_lock lock(*mutex_);
    Statement st(handle_->db, std::string(kSelectAuthor) + " ORDER BY id");
    std::vector<Author> out;
    while (st.step() == SQLITE_ROW) out.push_back(read_author(st));
    return out;
}

std::size_t KnowledgeBase::entry_count() const {
    std::shared_lock lock(*mutex_);
    Statement st(handle_->db, "SELECT COUNT(*) FROM entries");
    st.step();
    return static_cast<std::size_t>(st.int_at(0));
}

RowSet KnowledgeBase::execute_select(const ValidatedSql& sql) const {
    // Exclusive: the authorizer and progress handler are per-connection state.
    std::unique_lock lock(*mutex_);
    sqlite3* db = handle_->db;

    // The authorizer is consulted at prepare time, so it must be active then.
    sqlite3_set_authorizer(db, read_only_authorizer, nullptr);
    ProgressBudget budget;
    sqlite3_progress_handler(db, kProgressOpsPerCheck, progress_guard, &budget);
    struct Restore {
        sqlite3* db;
        ~Restore() {
            sqlite3_set_authorizer(db, nullptr, nullptr);
            sqlite3_progress_handler(db, 0, nullptr, nullptr);
        }
    } restore{db};

    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    const auto& text = sql.text();
    if (sqlite3_prepare_v2(db, text.c_str(), static_cast<int>(text.size()), &raw, &tail) !=
        SQLITE_OK) {
        throw Error(ErrorCode::execution_failed, sqlite3_errmsg(db));
    }
    std::unique_ptr<sqlite3_stmt, int (*)(sqlite3_stmt*)> stmt(raw, sqlite3_finalize);
    if (!stmt || !sqlite3_stmt_readonly(stmt.get()) || trim(tail ? tail : "").size() != 0) {
        throw Error(ErrorCode::execution_failed, "statement is not a single read-only query");
    }

    RowSet rows;
    const int ncols = sqlite3_column_count(stmt.get());
    for (int c = 0; c < ncols; ++c) {
        ResultColumn col;
        col.name = sqlite3_column_name(stmt.get(), c);
        if (const char* t = sqlite3_column_table_name(stmt.get(), c)) col.origin_table = t;
        if (const char* o = sqlite3_column_origin_name(stmt.get(), c)) col.origin_column = o;
        rows.columns.push_back(std::move(col));
    }
    for (;;) {
        const int rc = sqlite3_step(stmt.get());
        if (rc == SQLITE_DONE) break;
        if (rc != SQLITE_ROW) {
            throw Error(ErrorCode::execution_failed,
                        rc == SQLITE_INTERRUPT ? "query exceeded the execution budget"
                                               : sqlite3_errmsg(db));
        }
        std::vector<SqlValue> row;
        row.reserve(static_cast<std::size_t>(ncols));
        for (int c = 0; c < ncols; ++c) {
            switch (sqlite3_column_type(stmt.get(), c)) {
            case SQLITE_INTEGER: row.emplace_back(sqlite3_column_int64(stmt.get(), c)); break;
            case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt.get(), c)); break;
            case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
            default: {
                const auto* p = sqlite3_column_text(stmt.get(), c);
                row.emplace_back(std::string(reinterpret_cast<const char*>(p),
                                             static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c))));
            }
            }
        }
        rows.rows.push_back(std::move(row));
    }
    return rows;
}

std::string KnowledgeBase::render_schema_description() const {
    return diarist::render_schema_description(schema_);
}

std::uint64_t KnowledgeBase::content_hash() const {
    Fnv1a h;
    auto field = [&](std::string_view s) {
        h.update(s);
        h.update_byte(0x1f);
    };
    {
        std::shared_lock lock(*mutex_);
        Statement st(handle_->db, "SELECT type, name, sql FROM sqlite_master ORDER BY type, name");
        while (st.step() == SQLITE_ROW) {
            field("S");
            field(st.text_at(0));
            field(st.text_at(1));
            field(st.text_at(2));
        }
    }
    for (const auto& a : authors()) {
        field("A");
        field(std::to_string(a.id));
        field(a.name);
        field(a.birth_date ? a.birth_date->str() : "\x01");
        field(a.death_date ? a.death_date->str() : "\x01");
        field(a.bio);
    }
    for (const auto& e : entries()) {
        field("E");
        field(std::to_string(e.id));
        field(std::to_string(e.author_id));
        field(e.date.str());
        field(e.text);
        field(e.source_url ? *e.source_url : "\x01");
    }
    return h.digest();
}

}  // namespace diarist
