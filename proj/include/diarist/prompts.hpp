#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

namespace prompt_data {
extern const char* const kQueryGeneration;
extern const char* const kTextToSql;
extern const char* const kTextToSqlExamples;
extern const char* const kAnswer;
extern const char* const kNoSources;
extern const char* const kDegraded;
}  // namespace prompt_data

// A prompt file is "version: N", a "---" line, then the body.
struct PromptTemplate {
    int version = 0;
    std::string body;

    static PromptTemplate parse(std::string_view file_contents);
};

const PromptTemplate& query_generation_prompt();
const PromptTemplate& text_to_sql_prompt();
const PromptTemplate& answer_prompt();
const PromptTemplate& no_sources_message();
const PromptTemplate& degraded_message();

struct FewShotExample {
    std::string question;
    std::string reasoning;
    std::string sql;
};

const std::vector<FewShotExample>& default_text_to_sql_examples();

// Replaces each "{name}" with values.at(name). Unknown placeholders are left
// untouched; substituted text is not re-scanned.
std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace diarist
