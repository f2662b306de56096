#include "diarist/sql_bridge.hpp"

#include <spdlog/spdlog.h>

#include <cctype>

namespace diarist {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_semicolon(std::string_view s) {
    s = trim(s);
    while (!s.empty() && s.back() == ';') s = trim(s.substr(0, s.size() - 1));
    return std::string(s);
}

bool starts_with_select(std::string_view s) {
    return s.size() >= 6 && iequals(s.substr(0, 6), "select") &&
           (s.size() == 6 || !std::isalnum(static_cast<unsigned char>(s[6])));
}

// The sentinel alone on the reply's last non-blank line.
bool is_no_filter(std::string_view completion) {
    const auto t = trim(completion);
    const auto nl = t.find_last_of('\n');
    return trim(nl == std::string_view::npos ? t : t.substr(nl + 1)) == kNoFilterSentinel;
}

std::string render_examples(std::span<const FewShotExample> few_shots) {
    if (few_shots.empty()) return {};
    std::string out = "\nWorked examples:\n";
    for (const auto& ex : few_shots) {
        out += "\nQuestion: " + ex.question + "\n";
        out += "Reasoning: " + ex.reasoning + "\n";
        out += "```sql\n" + ex.sql + "\n```\n";
    }
    return out;
}

}  // namespace

std::string build_text2sql_prompt(std::string_view question, const SchemaDescription& schema,
                                  std::span<const FewShotExample> few_shots) {
    return fill_template(text_to_sql_prompt().body, {{"schema", render_schema_description(schema)},
                                                     {"examples", render_examples(few_shots)},
                                                     {"question", std::string(trim(question))}});
}

std::string extract_sql(std::string_view completion) {
    std::optional<std::string> last_block;
    std::size_t pos = 0;
    while (true) {
        const auto open = completion.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body_start = completion.find('\n', open + 3);
        if (body_start == std::string_view::npos) break;
        const auto close = completion.find("```", body_start + 1);
        if (close == std::string_view::npos) break;
        const auto info = trim(completion.substr(open + 3, body_start - open - 3));
        if (info.empty() || iequals(info, "sql") || iequals(info, "sqlite")) {
            auto body = strip_semicolon(completion.substr(body_start + 1, close - body_start - 1));
            if (!body.empty()) last_block = std::move(body);
        }
        pos = close + 3;
    }
    if (last_block) return *last_block;

    std::optional<std::string> last_line;
    std::size_t start = 0;
    while (start <= completion.size()) {
        auto end = completion.find('\n', start);
        if (end == std::string_view::npos) end = completion.size();
        const auto line = trim(completion.substr(start, end - start));
        if (!line.empty() && line.back() == ';' && starts_with_select(line)) last_line = strip_semicolon(line);
        start = end + 1;
    }
    if (last_line) return *last_line;
    throw Error(ErrorCode::extraction_failed, "no SQL statement found in the model reply");
}

SqlBridge::SqlBridge(const KnowledgeBase& kb, LlmGateway& gateway, std::string model_id,
                     std::vector<FewShotExample> few_shots)
    : kb_(kb), gateway_(gateway), model_id_(std::move(model_id)), few_shots_(std::move(few_shots)) {}

std::string SqlBridge::prompt_for(std::string_view question) const {
    return build_text2sql_prompt(question, kb_.schema(), few_shots_);
}

SqlFilterOutcome SqlBridge::filter(std::string_view question) const {
    SqlFilterOutcome out;
    auto degrade = [&](std::string why) {
        spdlog::warn("SQL filter skipped: {}", why);
        out.filter.reset();
        out.warning = std::move(why);
        return out;
    };

    CompletionRequest request;
    request.model_id = model_id_;
    request.temperature = 0.0;
    request.messages.push_back({Role::user, prompt_for(question)});
    try {
        out.completion = gateway_.complete(request);
    } catch (const GatewayError& e) {
        return degrade(std::string("gateway ") + std::string(to_string(e.failure())) + ": " + e.what());
    }

    if (is_no_filter(out.completion)) {
        out.no_filter = true;
        return out;
    }

    try {
        out.sql = extract_sql(out.completion);
    } catch (const Error& e) {
        return degrade(e.what());
    }

    const auto query = SqlQuery::check(*out.sql, SqlOrigin::llm, kb_.schema());
    out.verdict = query.verdict();
    const auto validated = query.validated();
    if (!validated) {
        return degrade("guard rejected SQL (" + std::string(to_string(query.verdict().reason)) +
                       "): " + query.verdict().detail);
    }

    try {
        auto ids = kb_.execute_select(*validated).entry_ids();
        if (!ids) return degrade("SQL result does not project entries.id");
        out.filter = std::move(*ids);
    } catch (const Error& e) {
        return degrade(std::string("SQL execution failed: ") + e.what());
    }
    return out;
}

}  // namespace diarist
