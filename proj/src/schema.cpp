#include "diarist/schema.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace diarist {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const ColumnDescription* TableDescription::find_column(std::string_view column) const {
    auto it = std::find_if(columns.begin(), columns.end(),
                           [&](const ColumnDescription& c) { return iequals(c.name, column); });
    return it == columns.end() ? nullptr : &*it;
}

const TableDescription* SchemaDescription::find_table(std::string_view table) const {
    auto it = std::find_if(tables.begin(), tables.end(),
                           [&](const TableDescription& t) { return iequals(t.name, table); });
    return it == tables.end() ? nullptr : &*it;
}

bool SchemaDescription::has_column(std::string_view table, std::string_view column) const {
    const auto* t = find_table(table);
    return t != nullptr && t->find_column(column) != nullptr;
}

SchemaDescription diary_schema() {
    SchemaDescription schema;
    schema.tables.push_back(TableDescription{
        "authors",
        "Diary authors. One row per person.",
        {
            {"id", "INTEGER", "Primary key of the author."},
            {"name", "TEXT", "Full name of the author."},
            {"birth_date", "TEXT", "Date of birth as ISO-8601 'YYYY-MM-DD'; NULL when unknown."},
            {"death_date", "TEXT", "Date of death as ISO-8601 'YYYY-MM-DD'; NULL when unknown."},
            {"bio", "TEXT", "Short free-text biography; may be empty."},
        }});
    schema.tables.push_back(TableDescription{
        "entries",
        "Diary entries. One row per dated entry written by one author.",
        {
            {"id", "INTEGER", "Primary key of the entry."},
            {"author_id", "INTEGER", "Author who wrote the entry; references authors.id."},
            {"date", "TEXT", "Date the entry was written, ISO-8601 'YYYY-MM-DD'."},
            {"text", "TEXT", "Full text of the entry."},
            {"source_url", "TEXT", "Link to the entry in the original archive; NULL when absent."},
        }});
    schema.relations.push_back(Relation{"entries", "author_id", "authors", "id",
                                        "each author has many entries"});
    return schema;
}

std::string render_schema_description(const SchemaDescription& schema) {
    std::ostringstream out;
    for (const auto& table : schema.tables) {
        out << "TABLE " << table.name << ": " << table.description << "\n";
        for (const auto& column : table.columns) {
            out << "  - " << table.name << "." << column.name << " " << column.type << ": "
                << column.description << "\n";
        }
    }
    if (!schema.relations.empty()) {
        out << "RELATIONS:\n";
        for (const auto& rel : schema.relations) {
            out << "  - " << rel.from_table << "." << rel.from_column << " -> " << rel.to_table
                << "." << rel.to_column << " (" << rel.description << ")\n";
        }
    }
    return out.str();
}

}  // namespace diarist
