#include "diarist/sql_guard.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

namespace diarist {
namespace {

// ---- lexer ----------------------------------------------------------------

enum class Tok { ident, quoted_ident, string, number, op, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;  // identifiers are kept verbatim; compare with iequals
    std::size_t offset = 0;
};

struct GuardFailure {
    GuardReason reason;
    std::string detail;
};

[[noreturn]] void fail(GuardReason reason, std::string detail) {
    throw GuardFailure{reason, std::move(detail)};
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view sql) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        const char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if ((c == '-' && i + 1 < n && sql[i + 1] == '-') || (c == '/' && i + 1 < n && sql[i + 1] == '*')) {
            fail(GuardReason::forbidden_construct, "comments are not allowed");
        }
        if (static_cast<unsigned char>(c) >= 0x80) {
            fail(GuardReason::parse_error, "non-ASCII character outside a string literal at offset " +
                                               std::to_string(i));
        }
        if (ident_start(c)) {
            while (i < n && ident_char(sql[i])) ++i;
            out.push_back({Tok::ident, std::string(sql.substr(start, i - start)), start});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            if (i < n && sql[i] == '.') {
                ++i;
                while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            }
            if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
                if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
                    i = j;
                    while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                }
            }
            if (i < n && ident_char(sql[i])) {
                fail(GuardReason::parse_error, "malformed number at offset " + std::to_string(start));
            }
            out.push_back({Tok::number, std::string(sql.substr(start, i - start)), start});
            continue;
        }
        if (c == '\'') {
            std::string value;
            ++i;
            for (;;) {
                if (i >= n) fail(GuardReason::parse_error, "unterminated string literal");
                if (sql[i] == '\'') {
                    if (i + 1 < n && sql[i + 1] == '\'') {
                        value.push_back('\'');
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                value.push_back(sql[i++]);
            }
            out.push_back({Tok::string, std::move(value), start});
            continue;
        }
        if (c == '"' || c == '`' || c == '[') {
            const char close = c == '[' ? ']' : c;
            std::string value;
            ++i;
            for (;;) {
                if (i >= n) fail(GuardReason::parse_error, "unterminated quoted identifier");
                if (sql[i] == close) {
                    if (close != ']' && i + 1 < n && sql[i + 1] == close) {
                        value.push_back(close);
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                value.push_back(sql[i++]);
            }
            out.push_back({Tok::quoted_ident, std::move(value), start});
            continue;
        }
        if (c == '?' || c == ':' || c == '@' || c == '$') {
            fail(GuardReason::forbidden_construct, "bound parameters are not allowed");
        }
        static constexpr std::array<std::string_view, 8> kTwoChar = {"<=", ">=", "<>", "!=", "==",
                                                                     "||", "<<", ">>"};
        if (i + 1 < n) {
            const auto two = sql.substr(i, 2);
            if (std::find(kTwoChar.begin(), kTwoChar.end(), two) != kTwoChar.end()) {
                out.push_back({Tok::op, std::string(two), start});
                i += 2;
                continue;
            }
        }
        if (std::string_view("()<>=,.;*/%+-&|~").find(c) != std::string_view::npos) {
            out.push_back({Tok::op, std::string(1, c), start});
            ++i;
            continue;
        }
        fail(GuardReason::parse_error,
             std::string("unexpected character '") + c + "' at offset " + std::to_string(i));
    }
    out.push_back({Tok::end, "", n});
    return out;
}

// ---- keyword tables ---------------------------------------------------------

constexpr std::array<std::string_view, 49> kReserved = {
    "select", "from",   "where",  "group", "by",     "having",    "order",  "limit",
    "offset", "join",   "on",     "and",   "or",     "not",       "in",     "like",
    "between", "is",    "null",   "as",    "inner",  "left",      "outer",  "cross",
    "union",  "except", "intersect", "case", "when", "then",      "else",   "end",
    "exists", "distinct", "all",  "asc",   "desc",   "escape",    "cast",
    "natural", "right", "full",  "using", "indexed", "over",      "filter", "window",
    "glob",   "regexp",
};

bool is_reserved(std::string_view word) {
    return std::any_of(kReserved.begin(), kReserved.end(),
                       [&](std::string_view k) { return iequals(k, word); });
}

constexpr std::array<std::string_view, 25> kAllowedFunctions = {
    "count", "sum",    "avg",     "min",   "max",     "total",  "group_concat",
    "lower", "upper",  "length",  "substr", "substring", "trim", "ltrim",
    "rtrim", "replace", "instr",  "abs",   "round",   "coalesce", "ifnull",
    "nullif", "date",  "strftime", "julianday",
};

bool is_allowed_function(std::string_view name) {
    return std::any_of(kAllowedFunctions.begin(), kAllowedFunctions.end(),
                       [&](std::string_view k) { return iequals(k, name); });
}

constexpr int kMaxDepth = 48;

// ---- parser -------------------------------------------------------------------

enum class Clause { select_list, join_on, where, group_by, having, order_by, limit };

struct ColumnRef {
    std::string qualifier;  // empty when unqualified
    std::string column;
    Clause clause;
};

struct Scope {
    struct Source {
        std::string name;   // alias or table name as written
        std::string table;  // schema table
    };
    std::vector<Source> sources;
    std::vector<std::string> select_aliases;
    std::vector<ColumnRef> pending;
    const Scope* parent = nullptr;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, const SchemaDescription& schema, GuardVerdict& verdict)
        : tokens_(std::move(tokens)), schema_(schema), verdict_(verdict) {}

    void parse_statement() {
        select_stmt(nullptr);
        if (peek_keyword("union") || peek_keyword("except") || peek_keyword("intersect")) {
            fail(GuardReason::forbidden_construct, "compound SELECT is not allowed");
        }
        if (peek().kind == Tok::op && peek().text == ";") advance();
        if (peek().kind != Tok::end) {
            fail(GuardReason::parse_error, "unexpected '" + peek().text + "' after end of query");
        }
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
        const auto& t = peek(ahead);
        return t.kind == Tok::ident && iequals(t.text, kw);
    }
    bool peek_op(std::string_view op, std::size_t ahead = 0) const {
        const auto& t = peek(ahead);
        return t.kind == Tok::op && t.text == op;
    }
    bool accept_keyword(std::string_view kw) {
        if (!peek_keyword(kw)) return false;
        advance();
        return true;
    }
    bool accept_op(std::string_view op) {
        if (!peek_op(op)) return false;
        advance();
        return true;
    }
    void expect_keyword(std::string_view kw) {
        if (!accept_keyword(kw)) {
            fail(GuardReason::parse_error,
                 "expected " + to_upper(kw) + " near '" + describe(peek()) + "'");
        }
    }
    void expect_op(std::string_view op) {
        if (!accept_op(op)) {
            fail(GuardReason::parse_error,
                 "expected '" + std::string(op) + "' near '" + describe(peek()) + "'");
        }
    }
    static std::string to_upper(std::string_view s) {
        std::string out(s);
        for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        return out;
    }
    static std::string describe(const Token& t) { return t.kind == Tok::end ? "end of input" : t.text; }

    bool peek_name() const {
        const auto& t = peek();
        return t.kind == Tok::quoted_ident || (t.kind == Tok::ident && !is_reserved(t.text));
    }
    std::string expect_name(const char* what) {
        if (!peek_name()) {
            fail(GuardReason::parse_error, std::string("expected ") + what + " near '" +
                                               describe(peek()) + "'");
        }
        return advance().text;
    }

    struct DepthGuard {
        explicit DepthGuard(int& d) : depth(d) {
            if (++depth > kMaxDepth) fail(GuardReason::forbidden_construct, "query nesting too deep");
        }
        ~DepthGuard() { --depth; }
        int& depth;
    };

    // SELECT [DISTINCT|ALL] columns FROM sources [WHERE] [GROUP BY [HAVING]] [ORDER BY] [LIMIT [OFFSET]]
    void select_stmt(const Scope* parent) {
        DepthGuard guard(depth_);
        if (!peek_keyword("select")) {
            fail(GuardReason::parse_error, "expected SELECT near '" + describe(peek()) + "'");
        }
        advance();
        Scope scope;
        scope.parent = parent;
        Scope* saved = scope_;
        scope_ = &scope;

        if (!accept_keyword("distinct")) accept_keyword("all");
        result_columns();
        expect_keyword("from");
        from_clause();
        if (accept_keyword("where")) expr(Clause::where);
        if (accept_keyword("group")) {
            expect_keyword("by");
            do {
                expr(Clause::group_by);
            } while (accept_op(","));
            if (accept_keyword("having")) expr(Clause::having);
        } else if (peek_keyword("having")) {
            fail(GuardReason::parse_error, "HAVING without GROUP BY");
        }
        if (accept_keyword("order")) {
            expect_keyword("by");
            do {
                expr(Clause::order_by);
                if (!accept_keyword("asc")) accept_keyword("desc");
            } while (accept_op(","));
        }
        if (accept_keyword("limit")) {
            expr(Clause::limit);
            if (accept_keyword("offset") || accept_op(",")) expr(Clause::limit);
        }
        resolve(scope);
        scope_ = saved;
    }

    void result_columns() {
        do {
            if (accept_op("*")) continue;
            if (peek_name() && peek_op(".", 1) && peek_op("*", 2)) {
                ColumnRef ref{advance().text, "*", Clause::select_list};
                advance();
                advance();
                scope_->pending.push_back(std::move(ref));
                continue;
            }
            expr(Clause::select_list);
            if (accept_keyword("as")) {
                scope_->select_aliases.push_back(expect_name("column alias"));
            } else if (peek_name()) {
                scope_->select_aliases.push_back(advance().text);
            }
        } while (accept_op(","));
    }

    void table_ref() {
        if (peek_op("(")) fail(GuardReason::forbidden_construct, "subqueries in FROM are not allowed");
        const std::string name = expect_name("table name");
        if (peek_op(".")) fail(GuardReason::forbidden_construct, "schema-qualified tables are not allowed");
        if (peek_op("(")) fail(GuardReason::forbidden_construct, "table-valued functions are not allowed");
        const auto* table = schema_.find_table(name);
        if (table == nullptr) fail(GuardReason::unknown_identifier, "unknown table '" + name + "'");
        verdict_.referenced_tables.insert(to_lower_ascii(table->name));
        std::string alias = name;
        if (accept_keyword("as")) {
            alias = expect_name("table alias");
        } else if (peek_name()) {
            alias = advance().text;
        }
        scope_->sources.push_back({alias, table->name});
    }

    void from_clause() {
        table_ref();
        for (;;) {
            if (accept_op(",")) {
                table_ref();
                continue;
            }
            bool join = false;
            if (accept_keyword("inner")) {
                expect_keyword("join");
                join = true;
            } else if (accept_keyword("left")) {
                accept_keyword("outer");
                expect_keyword("join");
                join = true;
            } else if (accept_keyword("join")) {
                join = true;
            } else if (peek_keyword("cross") || peek_keyword("natural") || peek_keyword("right") ||
                       peek_keyword("full")) {
                fail(GuardReason::forbidden_construct,
                     "only INNER and LEFT joins are allowed, found " + to_upper(peek().text));
            }
            if (!join) break;
            table_ref();
            if (accept_keyword("on")) {
                expr(Clause::join_on);
            } else if (peek_keyword("using")) {
                fail(GuardReason::forbidden_construct, "JOIN ... USING is not allowed");
            }
        }
        if (peek_keyword("indexed")) fail(GuardReason::forbidden_construct, "INDEXED BY is not allowed");
    }

    // ---- expressions ----

    void expr(Clause clause) {
        DepthGuard guard(depth_);
        and_expr(clause);
        while (accept_keyword("or")) and_expr(clause);
    }
    void and_expr(Clause clause) {
        not_expr(clause);
        while (accept_keyword("and")) not_expr(clause);
    }
    void not_expr(Clause clause) {
        if (accept_keyword("not")) {
            DepthGuard guard(depth_);
            not_expr(clause);
            return;
        }
        predicate(clause);
    }
    void predicate(Clause clause) {
        additive(clause);
        static constexpr std::array<std::string_view, 8> kCompare = {"=", "==", "!=", "<>",
                                                                     "<", "<=", ">",  ">="};
        const auto& t = peek();
        if (t.kind == Tok::op && std::find(kCompare.begin(), kCompare.end(), t.text) != kCompare.end()) {
            advance();
            additive(clause);
            return;
        }
        if (accept_keyword("is")) {
            accept_keyword("not");
            if (!accept_keyword("null")) additive(clause);
            return;
        }
        if (accept_keyword("isnull") || accept_keyword("notnull")) return;
        const bool negated = peek_keyword("not") &&
                             (peek_keyword("like", 1) || peek_keyword("in", 1) ||
                              peek_keyword("between", 1) || peek_keyword("null", 1));
        if (negated) {
            advance();
            if (accept_keyword("null")) return;
        }
        if (accept_keyword("like")) {
            additive(clause);
            if (accept_keyword("escape")) additive(clause);
            return;
        }
        if (peek_keyword("glob") || peek_keyword("regexp") || peek_keyword("match")) {
            fail(GuardReason::forbidden_construct, to_upper(peek().text) + " is not allowed");
        }
        if (accept_keyword("in")) {
            expect_op("(");
            if (peek_keyword("select")) {
                subquery(clause);
            } else if (!peek_op(")")) {
                do {
                    expr(clause);
                } while (accept_op(","));
            }
            expect_op(")");
            return;
        }
        if (accept_keyword("between")) {
            additive(clause);
            expect_keyword("and");
            additive(clause);
            return;
        }
        if (negated) fail(GuardReason::parse_error, "dangling NOT");
    }
    void additive(Clause clause) {
        multiplicative(clause);
        for (;;) {
            if (peek_op("&") || peek_op("|") || peek_op("<<") || peek_op(">>")) {
                fail(GuardReason::forbidden_construct, "bitwise operators are not allowed");
            }
            if (!(peek_op("+") || peek_op("-") || peek_op("||"))) break;
            advance();
            multiplicative(clause);
        }
    }
    void multiplicative(Clause clause) {
        unary(clause);
        while (peek_op("*") || peek_op("/") || peek_op("%")) {
            advance();
            unary(clause);
        }
    }
    void unary(Clause clause) {
        if (peek_op("-") || peek_op("+")) {
            DepthGuard guard(depth_);
            advance();
            unary(clause);
            return;
        }
        if (peek_op("&") || peek_op("|") || peek_op("~") || peek_op("<<") || peek_op(">>")) {
            fail(GuardReason::forbidden_construct, "bitwise operators are not allowed");
        }
        primary(clause);
    }

    void subquery(Clause clause) {
        if (clause != Clause::where && clause != Clause::having) {
            fail(GuardReason::forbidden_construct, "subqueries are only allowed in WHERE and HAVING");
        }
        select_stmt(scope_);
        if (peek_keyword("union") || peek_keyword("except") || peek_keyword("intersect")) {
            fail(GuardReason::forbidden_construct, "compound SELECT is not allowed");
        }
    }

    void primary(Clause clause) {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number:
        case Tok::string:
            advance();
            return;
        case Tok::end:
            fail(GuardReason::parse_error, "unexpected end of input in expression");
        case Tok::op:
            if (accept_op("(")) {
                if (peek_keyword("select")) {
                    subquery(clause);
                } else {
                    expr(clause);
                }
                expect_op(")");
                return;
            }
            fail(GuardReason::parse_error, "unexpected '" + t.text + "' in expression");
        case Tok::quoted_ident:
        case Tok::ident:
            break;
        }

        if (t.kind == Tok::ident) {
            if (accept_keyword("null") || accept_keyword("true") || accept_keyword("false") ||
                accept_keyword("current_date") || accept_keyword("current_time") ||
                accept_keyword("current_timestamp")) {
                return;
            }
            if (accept_keyword("exists")) {
                expect_op("(");
                subquery(clause);
                expect_op(")");
                return;
            }
            if (accept_keyword("case")) {
                case_expr(clause);
                return;
            }
            if (accept_keyword("cast")) {
                expect_op("(");
                expr(clause);
                expect_keyword("as");
                const std::string type = expect_name("type name");
                static constexpr std::array<std::string_view, 5> kTypes = {"integer", "int", "real",
                                                                           "text", "numeric"};
                if (std::none_of(kTypes.begin(), kTypes.end(),
                                 [&](std::string_view k) { return iequals(k, type); })) {
                    fail(GuardReason::forbidden_construct, "CAST to '" + type + "' is not allowed");
                }
                expect_op(")");
                return;
            }
            if (peek_op("(", 1)) {
                function_call(clause);
                return;
            }
            if (is_reserved(t.text)) {
                fail(GuardReason::parse_error, "unexpected keyword " + to_upper(t.text));
            }
        } else if (peek_op("(", 1)) {
            fail(GuardReason::forbidden_construct, "quoted function names are not allowed");
        }

        std::string first = advance().text;
        if (accept_op(".")) {
            if (peek_op(".", 1)) fail(GuardReason::forbidden_construct, "schema-qualified columns are not allowed");
            std::string column = expect_name("column name");
            scope_->pending.push_back({std::move(first), std::move(column), clause});
        } else {
            scope_->pending.push_back({"", std::move(first), clause});
        }
    }

    void function_call(Clause clause) {
        const std::string name = advance().text;
        if (!is_allowed_function(name)) {
            fail(GuardReason::forbidden_construct, "function '" + name + "' is not allowed");
        }
        expect_op("(");
        if (accept_op(")")) return;
        if (iequals(name, "count") && accept_op("*")) {
            expect_op(")");
        } else {
            accept_keyword("distinct");
            do {
                expr(clause);
            } while (accept_op(","));
            expect_op(")");
        }
        if (peek_keyword("over") || peek_keyword("filter")) {
            fail(GuardReason::forbidden_construct, "window and filter clauses are not allowed");
        }
    }

    void case_expr(Clause clause) {
        if (!peek_keyword("when")) expr(clause);
        if (!peek_keyword("when")) fail(GuardReason::parse_error, "CASE without WHEN");
        while (accept_keyword("when")) {
            expr(clause);
            expect_keyword("then");
            expr(clause);
        }
        if (accept_keyword("else")) expr(clause);
        expect_keyword("end");
    }

    // ---- name resolution ----

    static const Scope::Source* find_source(const Scope& scope, std::string_view name) {
        for (const auto& s : scope.sources) {
            if (iequals(s.name, name)) return &s;
        }
        return nullptr;
    }

    void record(const std::string& table, const std::string& column) {
        verdict_.referenced_columns.insert(to_lower_ascii(table) + "." + to_lower_ascii(column));
    }

    void resolve(const Scope& scope) {
        for (const auto& ref : scope.pending) {
            if (!ref.qualifier.empty()) {
                const Scope::Source* src = nullptr;
                for (const Scope* s = &scope; s != nullptr && src == nullptr; s = s->parent) {
                    src = find_source(*s, ref.qualifier);
                }
                if (src == nullptr) {
                    fail(GuardReason::unknown_identifier, "unknown table or alias '" + ref.qualifier + "'");
                }
                if (ref.column == "*") continue;
                if (!schema_.has_column(src->table, ref.column)) {
                    fail(GuardReason::unknown_identifier,
                         "unknown column '" + ref.qualifier + "." + ref.column + "'");
                }
                record(src->table, ref.column);
                continue;
            }
            bool resolved = false;
            for (const Scope* s = &scope; s != nullptr && !resolved; s = s->parent) {
                std::vector<const Scope::Source*> owners;
                for (const auto& src : s->sources) {
                    if (schema_.has_column(src.table, ref.column)) owners.push_back(&src);
                }
                if (owners.size() > 1) {
                    fail(GuardReason::unknown_identifier, "ambiguous column '" + ref.column + "'");
                }
                if (owners.size() == 1) {
                    record(owners.front()->table, ref.column);
                    resolved = true;
                } else if (s == &scope && ref.clause != Clause::select_list &&
                           ref.clause != Clause::join_on &&
                           std::any_of(s->select_aliases.begin(), s->select_aliases.end(),
                                       [&](const std::string& a) { return iequals(a, ref.column); })) {
                    resolved = true;
                }
            }
            if (!resolved) fail(GuardReason::unknown_identifier, "unknown column '" + ref.column + "'");
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    const SchemaDescription& schema_;
    GuardVerdict& verdict_;
    Scope* scope_ = nullptr;
};

std::string strip_terminator(std::string_view sql) {
    auto end = sql.find_last_not_of(" \t\r\n\f\v");
    if (end == std::string_view::npos) return {};
    sql = sql.substr(0, end + 1);
    if (sql.back() == ';') sql.remove_suffix(1);
    end = sql.find_last_not_of(" \t\r\n\f\v");
    const auto begin = sql.find_first_not_of(" \t\r\n\f\v");
    if (end == std::string_view::npos) return {};
    return std::string(sql.substr(begin, end - begin + 1));
}

}  // namespace

std::string_view to_string(GuardReason reason) {
    switch (reason) {
    case GuardReason::none: return "none";
    case GuardReason::not_single_statement: return "not_single_statement";
    case GuardReason::not_select: return "not_select";
    case GuardReason::forbidden_construct: return "forbidden_construct";
    case GuardReason::unknown_identifier: return "unknown_identifier";
    case GuardReason::parse_error: return "parse_error";
    }
    return "unknown";
}

GuardVerdict validate_select_only(std::string_view sql, const SchemaDescription& schema) {
    GuardVerdict verdict;
    try {
        auto tokens = tokenize(sql);
        if (tokens.front().kind == Tok::end || (tokens.front().kind == Tok::op && tokens.front().text == ";")) {
            fail(GuardReason::parse_error, "empty statement");
        }

        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            if (tokens[i].kind == Tok::op && tokens[i].text == ";" && tokens[i + 1].kind != Tok::end) {
                fail(GuardReason::not_single_statement, "more than one statement");
            }
        }
        const auto& head = tokens.front();
        if (!(head.kind == Tok::ident && iequals(head.text, "select"))) {
            const std::string word = head.kind == Tok::ident ? head.text : "'" + head.text + "'";
            if (head.kind == Tok::ident && iequals(head.text, "with")) {
                fail(GuardReason::forbidden_construct, "common table expressions are not allowed");
            }
            fail(GuardReason::not_select, "statement starts with " + word + ", only SELECT is allowed");
        }
        Parser parser(std::move(tokens), schema, verdict);
        parser.parse_statement();
        verdict.accepted = true;
        verdict.reason = GuardReason::none;
        verdict.detail.clear();
    } catch (const GuardFailure& f) {
        verdict.accepted = false;
        verdict.reason = f.reason;
        verdict.detail = f.detail;
    }
    return verdict;
}

SqlQuery SqlQuery::check(std::string text, SqlOrigin origin, const SchemaDescription& schema) {
    auto verdict = validate_select_only(text, schema);
    return SqlQuery(std::move(text), origin, std::move(verdict));
}

std::optional<ValidatedSql> SqlQuery::validated() const {
    if (!verdict_.accepted) return std::nullopt;
    return ValidatedSql(strip_terminator(text_));
}

}  // namespace diarist
