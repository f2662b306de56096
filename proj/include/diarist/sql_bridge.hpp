#pragma once

#include "diarist/knowledge_base.hpp"
#include "diarist/llm_gateway.hpp"
#include "diarist/prompts.hpp"
#include "diarist/sql_guard.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

inline constexpr std::string_view kNoFilterSentinel = "NO_FILTER";

std::string build_text2sql_prompt(std::string_view question, const SchemaDescription& schema,
                                  std::span<const FewShotExample> few_shots);

// Last fenced block (```sql or bare ```), else the last line that ends in ';'
// and starts with SELECT. The trailing ';' is dropped.
// Throws Error(extraction_failed) when neither is present.
std::string extract_sql(std::string_view completion);

struct SqlFilterOutcome {
    // Absent means "search unfiltered".
    std::optional<EntryIdSet> filter;
    std::string completion;
    std::optional<std::string> sql;
    std::optional<GuardVerdict> verdict;
    bool no_filter = false;
    std::optional<std::string> warning;
};

class SqlBridge {
public:
    SqlBridge(const KnowledgeBase& kb, LlmGateway& gateway, std::string model_id,
              std::vector<FewShotExample> few_shots = default_text_to_sql_examples());

    std::string prompt_for(std::string_view question) const;

    // Never throws for gateway, extraction, guard or execution failures; they
    // come back as an absent filter with a warning.
    SqlFilterOutcome filter(std::string_view question) const;

private:
    const KnowledgeBase& kb_;
    LlmGateway& gateway_;
    std::string model_id_;
    std::vector<FewShotExample> few_shots_;
};

}  // namespace diarist
