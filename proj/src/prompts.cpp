#include "diarist/prompts.hpp"

#include "diarist/error.hpp"

#include <json.hpp>

#include <sstream>

namespace diarist {

PromptTemplate PromptTemplate::parse(std::string_view contents) {
    constexpr std::string_view kVersion = "version:";
    constexpr std::string_view kSeparator = "\n---\n";
    if (!contents.starts_with(kVersion)) throw Error(ErrorCode::parse, "prompt file lacks a version line");
    const auto sep = contents.find(kSeparator);
    if (sep == std::string_view::npos) throw Error(ErrorCode::parse, "prompt file lacks a '---' separator");
    PromptTemplate t;
    t.version = std::stoi(std::string(contents.substr(kVersion.size(), sep - kVersion.size())));
    std::string_view body = contents.substr(sep + kSeparator.size());
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    t.body = std::string(body);
    return t;
}

const PromptTemplate& query_generation_prompt() {
    static const PromptTemplate t = PromptTemplate::parse(prompt_data::kQueryGeneration);
    return t;
}

const PromptTemplate& text_to_sql_prompt() {
    static const PromptTemplate t = PromptTemplate::parse(prompt_data::kTextToSql);
    return t;
}

const PromptTemplate& answer_prompt() {
    static const PromptTemplate t = PromptTemplate::parse(prompt_data::kAnswer);
    return t;
}

const PromptTemplate& no_sources_message() {
    static const PromptTemplate t = PromptTemplate::parse(prompt_data::kNoSources);
    return t;
}

const PromptTemplate& degraded_message() {
    static const PromptTemplate t = PromptTemplate::parse(prompt_data::kDegraded);
    return t;
}

const std::vector<FewShotExample>& default_text_to_sql_examples() {
    static const std::vector<FewShotExample> examples = [] {
        std::vector<FewShotExample> out;
        std::istringstream in(prompt_data::kTextToSqlExamples);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.at("question").get<std::string>(), j.at("reasoning").get<std::string>(),
                           j.at("sql").get<std::string>()});
        }
        return out;
    }();
    return examples;
}

std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            const auto close = text.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

}  // namespace diarist
