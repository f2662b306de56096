#pragma once

#include "diarist/fusion.hpp"
#include "diarist/knowledge_base.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diarist {

// |top-k(retrieved) ∩ relevant| / k. Throws invalid_argument for k <= 0.
double precision_at_k(std::span<const EntryId> retrieved, const EntryIdSet& relevant, int k);

inline constexpr std::size_t kRelevantPerQuestion = 5;

struct EvalTopic {
    std::string id;
    std::string name;
};

struct EvalQuestion {
    std::string id;
    std::string topic_id;
    std::string text;
    EntryIdSet relevant;
};

// One JSON object per line:
//   {"id": "q1", "topic_id": "t1", "topic": "harvest", "text": "...", "relevant": [1, 2, 3, 4, 5]}
struct EvalDataset {
    std::vector<EvalTopic> topics;
    std::vector<EvalQuestion> questions;

    static EvalDataset load(std::istream& in);
    static EvalDataset load_file(const std::filesystem::path& path);
    void save(std::ostream& out) const;

    // Throws invalid_argument unless every question has exactly five relevant
    // ids, a known topic and a unique id.
    void validate() const;
    // Throws integrity when a relevant id is absent from `corpus_ids`.
    void check_corpus(const std::set<EntryId>& corpus_ids) const;
};

enum class EvalMode { lexical, semantic, hybrid };

std::string_view to_string(EvalMode mode);
std::optional<EvalMode> parse_eval_mode(std::string_view name);

struct EvalConfig {
    std::string label;
    EvalMode mode = EvalMode::hybrid;
    FusionParams params;
};

// The three rows the harness reports by default: tf-idf only, embedding only,
// and hybrid with alpha = 0.9.
std::vector<EvalConfig> default_eval_grid(const FusionParams& base = {});

struct QuestionResult {
    std::string question_id;
    std::vector<EntryId> retrieved;
    double precision = 0.0;
};

struct ConfigResult {
    EvalConfig config;
    double mean_precision = 0.0;
    std::vector<QuestionResult> per_question;
};

struct EvalReport {
    int k = 5;
    std::vector<ConfigResult> rows;
};

// Runs every question under every configuration. The dataset is validated
// and checked against `corpus_ids` before the first query.
EvalReport evaluate_search(const EvalDataset& dataset, const HybridSearcher& searcher,
                           std::span<const EvalConfig> grid, const std::set<EntryId>& corpus_ids,
                           int k = 5);

std::string format_eval_table(const EvalReport& report);
nlohmann::json to_json(const EvalReport& report);

enum class KrippendorffMetric { nominal, ordinal, interval };

std::string_view to_string(KrippendorffMetric metric);
std::optional<KrippendorffMetric> parse_krippendorff_metric(std::string_view name);

// items x raters; absent cells are missing scores. Scores are integers 1..5.
struct AnnotationMatrix {
    std::vector<std::vector<std::optional<int>>> cells;

    std::size_t items() const { return cells.size(); }
    std::size_t raters() const { return cells.empty() ? 0 : cells.front().size(); }
    // Throws invalid_argument on ragged rows, fewer than 2 raters, or a score
    // outside 1..5.
    void validate() const;
};

// 1 - D_o / D_e over the coincidence matrix. Items with fewer than two scores
// are ignored. Throws undefined_result when fewer than two pairable values
// remain or when the pairable values show no variation at all.
double krippendorff_alpha(const AnnotationMatrix& matrix,
                          KrippendorffMetric metric = KrippendorffMetric::interval);

}  // namespace diarist
