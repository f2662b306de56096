#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

struct ColumnDescription {
    std::string name;
    std::string type;
    std::string description;
};

struct TableDescription {
    std::string name;
    std::string description;
    std::vector<ColumnDescription> columns;

    const ColumnDescription* find_column(std::string_view column) const;
};

struct Relation {
    std::string from_table;
    std::string from_column;
    std::string to_table;
    std::string to_column;
    std::string description;
};

// Tables, columns and relations exposed to the Text-to-SQL stage. Lookups are
// ASCII case-insensitive, matching SQL identifier rules.
struct SchemaDescription {
    std::vector<TableDescription> tables;
    std::vector<Relation> relations;

    const TableDescription* find_table(std::string_view table) const;
    bool has_column(std::string_view table, std::string_view column) const;
};

// Schema of the diary knowledge base: authors 1..n entries.
SchemaDescription diary_schema();

// Deterministic prompt block. One line per column, so a schema change shows up
// as a single-line diff.
std::string render_schema_description(const SchemaDescription& schema);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower_ascii(std::string_view s);

}  // namespace diarist
