#include "diarist/csv.hpp"
#include "diarist/knowledge_base.hpp"
#include "diarist/sql_guard.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace diarist;
using diarist::testing::kb_from_jsonl;

namespace {

const char* kSmall = R"({"kind": "author", "id": 1, "name": "Anna", "birth_date": "1868-04-02"}
{"kind": "author", "id": 2, "name": "Boris", "bio": "Clerk"}
{"kind": "entry", "id": 7, "author_id": 1, "date": "1904-06-01", "text": "Hay in the meadow."}
{"kind": "entry", "id": 8, "author_id": 2, "date": "1905-03-12", "text": "Ice on the Neva.", "source_url": "https://example.org/8"}
{"kind": "entry", "id": 9, "author_id": 2, "date": "1906-11-30", "text": "First snow."}
)";

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no diarist::Error thrown";
    return ErrorCode::io;
}

RowSet run(const KnowledgeBase& kb, const std::string& sql) {
    auto q = SqlQuery::check(sql, SqlOrigin::user, kb.schema());
    auto v = q.validated();
    EXPECT_TRUE(v.has_value()) << q.verdict().detail;
    return kb.execute_select(*v);
}

}  // namespace

TEST(IsoDate, AcceptsCalendarDates) {
    EXPECT_TRUE(IsoDate::parse("1900-01-01"));
    EXPECT_TRUE(IsoDate::parse("1904-02-29"));
    EXPECT_FALSE(IsoDate::parse("1905-02-29"));
    EXPECT_FALSE(IsoDate::parse("1900-02-29"));
    EXPECT_FALSE(IsoDate::parse("1905-13-01"));
    EXPECT_FALSE(IsoDate::parse("1905-1-01"));
    EXPECT_FALSE(IsoDate::parse("01.01.1905"));
    EXPECT_EQ(IsoDate::parse("1916-12-31")->year(), 1916);
    EXPECT_LT(*IsoDate::parse("1905-01-31"), *IsoDate::parse("1905-02-01"));
}

TEST(KnowledgeBase, IngestCountsAuthorsAndEntries) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream in(kSmall);
    EXPECT_EQ(kb.ingest(in, CorpusFormat::jsonl), (IngestCounts{3, 2}));
    EXPECT_EQ(kb.entry_count(), 3u);
}

TEST(KnowledgeBase, TwoAuthorsThreeEntries) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream in(R"({"kind":"author","id":1,"name":"A"}
{"kind":"author","id":2,"name":"B"}
{"kind":"entry","id":1,"author_id":1,"date":"1901-01-01","text":"one"}
{"kind":"entry","id":2,"author_id":2,"date":"1901-01-02","text":"two"}
{"kind":"entry","id":3,"author_id":2,"date":"1901-01-03","text":"three"}
)");
    EXPECT_EQ(kb.ingest(in, CorpusFormat::jsonl), (IngestCounts{3, 2}));
}

TEST(KnowledgeBase, DanglingAuthorRejectsWholeBatch) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream in(R"({"kind":"author","id":1,"name":"A"}
{"kind":"entry","id":1,"author_id":1,"date":"1901-01-01","text":"fine"}
{"kind":"entry","id":2,"author_id":42,"date":"1901-01-02","text":"orphan"}
)");
    try {
        kb.ingest(in, CorpusFormat::jsonl);
        FAIL() << "expected integrity error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::integrity);
        EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
    }
    EXPECT_EQ(kb.entry_count(), 0u);
    EXPECT_TRUE(kb.authors().empty());
}

TEST(KnowledgeBase, AuthorFromEarlierBatchSatisfiesIntegrity) {
    auto kb = kb_from_jsonl(R"({"kind":"author","id":5,"name":"E"})");
    std::istringstream in(R"({"kind":"entry","id":1,"author_id":5,"date":"1901-01-01","text":"later"})");
    EXPECT_EQ(kb.ingest(in, CorpusFormat::jsonl), (IngestCounts{1, 0}));
}

TEST(KnowledgeBase, MalformedRecordsAreParseErrors) {
    for (const char* bad : {
             R"({"kind":"entry","id":1,"author_id":1,"date":"1901-13-01","text":"x"})",
             R"({"kind":"entry","id":1,"author_id":1,"text":"x"})",
             R"({"kind":"entry","id":"1","author_id":1,"date":"1901-01-01","text":"x"})",
             R"({"kind":"entry","id":1,"author_id":1,"date":"1901-01-01","text":"   "})",
             R"({"kind":"letter","id":1})",
             R"({"kind":"author","id":1,"name":""})",
             R"({"kind":"author","id":1,"name":"A","birth_date":"1900-01-01","death_date":"1899-01-01"})",
             R"([1, 2])",
             R"({"kind":"author", "id":)",
         }) {
        auto kb = KnowledgeBase::open_in_memory();
        std::istringstream in(bad);
        EXPECT_EQ(code_of([&] { kb.ingest(in, CorpusFormat::jsonl); }), ErrorCode::parse) << bad;
    }
}

TEST(KnowledgeBase, KindInferredFromFields) {
    auto kb = kb_from_jsonl(R"({"id":1,"name":"A"}
{"id":3,"author_id":1,"date":"1901-01-01","text":"t"})");
    EXPECT_TRUE(kb.get_author(1));
    EXPECT_TRUE(kb.get_entry(3));
}

TEST(KnowledgeBase, GetEntryRoundTripsEveryField) {
    auto kb = kb_from_jsonl(kSmall);
    auto e = kb.get_entry(8);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->id, 8);
    EXPECT_EQ(e->author_id, 2);
    EXPECT_EQ(e->date.str(), "1905-03-12");
    EXPECT_EQ(e->text, "Ice on the Neva.");
    EXPECT_EQ(e->source_url, "https://example.org/8");
    EXPECT_FALSE(kb.get_entry(9)->source_url);

    auto a = kb.get_author(1);
    ASSERT_TRUE(a);
    EXPECT_EQ(a->birth_date->str(), "1868-04-02");
    EXPECT_FALSE(a->death_date);
    EXPECT_EQ(a->bio, "");
    EXPECT_EQ(kb.get_author(2)->bio, "Clerk");
}

TEST(KnowledgeBase, MissingIdIsAbsent) {
    auto kb = kb_from_jsonl(kSmall);
    EXPECT_FALSE(kb.get_entry(1));
    EXPECT_FALSE(kb.get_author(99));
}

TEST(KnowledgeBase, AllIngestedIdsRetrievable) {
    std::string jsonl = R"({"kind":"author","id":1,"name":"A"})"
                        "\n";
    for (int i = 1; i <= 200; ++i) {
        jsonl += R"({"kind":"entry","id":)" + std::to_string(i * 3) +
                 R"(,"author_id":1,"date":"1910-05-05","text":"entry )" + std::to_string(i) + "\"}\n";
    }
    auto kb = kb_from_jsonl(jsonl);
    for (int i = 1; i <= 200; ++i) {
        auto e = kb.get_entry(i * 3);
        ASSERT_TRUE(e) << i;
        EXPECT_EQ(e->text, "entry " + std::to_string(i));
    }
    EXPECT_EQ(kb.entries().size(), 200u);
}

TEST(KnowledgeBase, UnicodeTextSurvivesByteExactly) {
    const std::string text = "Мороз и солнце; день чудесный! \xE2\x80\x94 \"quoted\" \\ back\nslash";
    nlohmann::json rec{{"kind", "entry"}, {"id", 1}, {"author_id", 1}, {"date", "1901-01-01"}, {"text", text}};
    auto kb = kb_from_jsonl(std::string(R"({"kind":"author","id":1,"name":"Пушкин"})") + "\n" + rec.dump());
    EXPECT_EQ(kb.get_entry(1)->text, text);
    EXPECT_EQ(kb.get_author(1)->name, "Пушкин");
}

TEST(KnowledgeBase, ReingestIsIdempotentAndUpserts) {
    auto kb = kb_from_jsonl(kSmall);
    const auto h = kb.content_hash();
    std::istringstream again(kSmall);
    kb.ingest(again, CorpusFormat::jsonl);
    EXPECT_EQ(kb.content_hash(), h);
    EXPECT_EQ(kb.entry_count(), 3u);

    std::istringstream edit(R"({"kind":"entry","id":9,"author_id":1,"date":"1906-11-30","text":"Second snow."})");
    kb.ingest(edit, CorpusFormat::jsonl);
    EXPECT_EQ(kb.get_entry(9)->text, "Second snow.");
    EXPECT_EQ(kb.get_entry(9)->author_id, 1);
    EXPECT_NE(kb.content_hash(), h);
}

TEST(KnowledgeBase, ContentHashIgnoresIngestOrder) {
    std::istringstream a(kSmall);
    std::string reversed;
    {
        std::vector<std::string> lines;
        std::istringstream s(kSmall);
        for (std::string l; std::getline(s, l);) lines.push_back(l);
        for (auto it = lines.rbegin(); it != lines.rend(); ++it) reversed += *it + "\n";
    }
    EXPECT_EQ(kb_from_jsonl(kSmall).content_hash(), kb_from_jsonl(reversed).content_hash());
}

TEST(KnowledgeBase, CsvIngest) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream authors("id,name,birth_date,death_date,bio\r\n1,\"Orlov, Mikhail\",1855-09-17,,\"Teacher\nof history\"\r\n");
    EXPECT_EQ(kb.ingest(authors, CorpusFormat::csv), (IngestCounts{0, 1}));
    std::istringstream entries("id,author_id,date,text,source_url\n"
                               "1,1,1905-01-14,\"He said \"\"cold\"\", and left.\",\n"
                               "2,1,1905-01-15,Plain text,https://example.org/2\n");
    EXPECT_EQ(kb.ingest(entries, CorpusFormat::csv), (IngestCounts{2, 0}));
    EXPECT_EQ(kb.get_author(1)->name, "Orlov, Mikhail");
    EXPECT_EQ(kb.get_author(1)->bio, "Teacher\nof history");
    EXPECT_EQ(kb.get_entry(1)->text, "He said \"cold\", and left.");
    EXPECT_FALSE(kb.get_entry(1)->source_url);
    EXPECT_EQ(kb.get_entry(2)->source_url, "https://example.org/2");
}

TEST(KnowledgeBase, CsvRejectsUnknownHeaderAndShortRows) {
    auto kb = KnowledgeBase::open_in_memory();
    std::istringstream bad_header("id,title\n1,x\n");
    EXPECT_EQ(code_of([&] { kb.ingest(bad_header, CorpusFormat::csv); }), ErrorCode::parse);
    std::istringstream short_row("id,name,birth_date,death_date,bio\n1,A\n");
    EXPECT_EQ(code_of([&] { kb.ingest(short_row, CorpusFormat::csv); }), ErrorCode::parse);
}

TEST(KnowledgeBase, ExecuteSelectOnDates) {
    auto kb = kb_from_jsonl(kSmall);
    auto rows = run(kb, "SELECT id FROM entries WHERE date < '1905-01-01'");
    ASSERT_EQ(rows.rows.size(), 1u);
    EXPECT_EQ(std::get<std::int64_t>(rows.rows[0][0]), 7);
    EXPECT_EQ(rows.entry_ids(), (EntryIdSet{7}));
}

TEST(KnowledgeBase, EmptyResultIsNotAnError) {
    auto kb = kb_from_jsonl(kSmall);
    auto rows = run(kb, "SELECT id FROM entries WHERE date > '2000-01-01'");
    EXPECT_TRUE(rows.rows.empty());
    EXPECT_EQ(rows.entry_ids(), EntryIdSet{});
}

TEST(KnowledgeBase, EntryIdsFollowColumnOrigin) {
    auto kb = kb_from_jsonl(kSmall);
    auto joined = run(kb, "SELECT a.name, e.id FROM entries e JOIN authors a ON a.id = e.author_id WHERE a.name = 'Boris'");
    EXPECT_EQ(joined.entry_ids(), (EntryIdSet{8, 9}));
    auto authors_only = run(kb, "SELECT id FROM authors");
    EXPECT_FALSE(authors_only.entry_ids());
}

TEST(KnowledgeBase, RejectedVerdictHasNoValidatedSql) {
    auto kb = kb_from_jsonl(kSmall);
    auto q = SqlQuery::check("DELETE FROM entries", SqlOrigin::llm, kb.schema());
    EXPECT_FALSE(q.verdict().accepted);
    EXPECT_FALSE(q.validated());
    EXPECT_EQ(kb.entry_count(), 3u);
}

TEST(KnowledgeBase, SelectLeavesContentHashUnchanged) {
    auto kb = kb_from_jsonl(kSmall);
    const auto h = kb.content_hash();
    run(kb, "SELECT e.id, a.name FROM entries e LEFT JOIN authors a ON a.id = e.author_id ORDER BY e.date");
    run(kb, "SELECT count(*) FROM entries GROUP BY author_id");
    EXPECT_EQ(kb.content_hash(), h);
}

TEST(KnowledgeBase, PersistsToFile) {
    const auto path = std::filesystem::temp_directory_path() / "diarist-kb-test.sqlite";
    std::filesystem::remove(path);
    std::uint64_t h = 0;
    {
        auto kb = KnowledgeBase::open(path);
        std::istringstream in(kSmall);
        kb.ingest(in, CorpusFormat::jsonl);
        h = kb.content_hash();
    }
    auto kb = KnowledgeBase::open(path);
    EXPECT_EQ(kb.entry_count(), 3u);
    EXPECT_EQ(kb.content_hash(), h);
    std::filesystem::remove(path);
}

TEST(KnowledgeBase, ResolveEntryUrl) {
    Entry e;
    e.id = 42;
    EXPECT_EQ(resolve_entry_url(e, "http://localhost:8080/entry/{id}"), "http://localhost:8080/entry/42");
    e.source_url = "https://archive.example.org/42";
    EXPECT_EQ(resolve_entry_url(e, "http://localhost:8080/entry/{id}"), "https://archive.example.org/42");
}

TEST(SchemaDescription, MentionsTablesAndRelation) {
    const auto text = render_schema_description(diary_schema());
    EXPECT_NE(text.find("authors"), std::string::npos);
    EXPECT_NE(text.find("entries"), std::string::npos);
    EXPECT_NE(text.find("entries.author_id"), std::string::npos);
    EXPECT_NE(text.find("authors.id"), std::string::npos);
    EXPECT_EQ(text, render_schema_description(diary_schema()));
}

TEST(SchemaDescription, AddedColumnChangesExactlyOneLine) {
    auto schema = diary_schema();
    const auto before = render_schema_description(schema);
    auto it = std::find_if(schema.tables.begin(), schema.tables.end(),
                           [](const TableDescription& t) { return t.name == "entries"; });
    ASSERT_NE(it, schema.tables.end());
    it->columns.push_back({"mood", "TEXT", "Mood of the writer."});
    const auto after = render_schema_description(schema);

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream in(s);
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    };
    const auto a = split(before), b = split(after);
    ASSERT_EQ(b.size(), a.size() + 1);
    std::size_t i = 0;
    while (i < a.size() && a[i] == b[i]) ++i;
    EXPECT_NE(b[i].find("mood"), std::string::npos);
    for (std::size_t j = i; j < a.size(); ++j) EXPECT_EQ(a[j], b[j + 1]);
}

TEST(Csv, QuotedFieldsSpanLines) {
    std::istringstream in("a,\"b\nc\",d\r\n\"x\"\"y\",,\n");
    CsvReader reader(in);
    CsvRecord r;
    ASSERT_TRUE(reader.next(r));
    EXPECT_EQ(r.fields, (std::vector<std::string>{"a", "b\nc", "d"}));
    EXPECT_EQ(r.line, 1u);
    ASSERT_TRUE(reader.next(r));
    EXPECT_EQ(r.fields, (std::vector<std::string>{"x\"y", "", ""}));
    EXPECT_EQ(r.line, 3u);
    EXPECT_FALSE(reader.next(r));
}
