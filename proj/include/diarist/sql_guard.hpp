#pragma once

#include "diarist/schema.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace diarist {

enum class GuardReason {
    none,
    not_single_statement,
    not_select,
    forbidden_construct,
    unknown_identifier,
    parse_error,
};

std::string_view to_string(GuardReason reason);

struct GuardVerdict {
    bool accepted = false;
    GuardReason reason = GuardReason::parse_error;
    std::string detail;
    // Lower-cased. Columns are qualified as "table.column".
    std::set<std::string> referenced_tables;
    std::set<std::string> referenced_columns;
};

// Parses `sql` against the SELECT-only subset published in
// docs/sql-subset.ebnf and resolves every identifier against `schema`.
// Rejection is reported through the verdict, never thrown.
GuardVerdict validate_select_only(std::string_view sql, const SchemaDescription& schema);

class SqlQuery;

// Proof that a statement passed the guard. Only SqlQuery can mint one, so
// KnowledgeBase::execute_select cannot be handed unchecked text.
class ValidatedSql {
public:
    const std::string& text() const { return text_; }

private:
    friend class SqlQuery;
    explicit ValidatedSql(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

enum class SqlOrigin { llm, user };

class SqlQuery {
public:
    static SqlQuery check(std::string text, SqlOrigin origin, const SchemaDescription& schema);

    const std::string& text() const { return text_; }
    SqlOrigin origin() const { return origin_; }
    const GuardVerdict& verdict() const { return verdict_; }

    // Present iff the verdict accepted the statement.
    std::optional<ValidatedSql> validated() const;

private:
    SqlQuery(std::string text, SqlOrigin origin, GuardVerdict verdict)
        : text_(std::move(text)), origin_(origin), verdict_(std::move(verdict)) {}

    std::string text_;
    SqlOrigin origin_;
    GuardVerdict verdict_;
};

}  // namespace diarist
