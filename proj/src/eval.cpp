#include "diarist/eval.hpp"

#include <fmt/format.h>

#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace diarist {

double precision_at_k(std::span<const EntryId> retrieved, const EntryIdSet& relevant, int k) {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be at least 1");
    const std::size_t depth = std::min(retrieved.size(), static_cast<std::size_t>(k));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) hits += relevant.count(retrieved[i]);
    return static_cast<double>(hits) / static_cast<double>(k);
}

// ---- dataset --------------------------------------------------------------------

EvalDataset EvalDataset::load(std::istream& in) {
    EvalDataset ds;
    std::map<std::string, std::string> topic_names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            EvalQuestion q;
            q.id = j.at("id").get<std::string>();
            q.topic_id = j.at("topic_id").get<std::string>();
            q.text = j.at("text").get<std::string>();
            for (const auto& id : j.at("relevant")) {
                if (!q.relevant.insert(id.get<EntryId>()).second) {
                    throw Error(ErrorCode::parse, "duplicate relevant id " + id.dump());
                }
            }
            const auto topic = j.value("topic", q.topic_id);
            if (topic_names.emplace(q.topic_id, topic).second) ds.topics.push_back({q.topic_id, topic});
            ds.questions.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    ds.validate();
    return ds;
}

EvalDataset EvalDataset::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read dataset '" + path.string() + "'");
    return load(in);
}

void EvalDataset::save(std::ostream& out) const {
    std::map<std::string, std::string> names;
    for (const auto& t : topics) names[t.id] = t.name;
    for (const auto& q : questions) {
        nlohmann::json j{{"id", q.id}, {"topic_id", q.topic_id}, {"topic", names[q.topic_id]},
                         {"text", q.text}, {"relevant", q.relevant}};
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "failed to write dataset");
}

void EvalDataset::validate() const {
    std::set<std::string> topic_ids;
    for (const auto& t : topics) {
        if (!topic_ids.insert(t.id).second) throw Error(ErrorCode::invalid_argument, "duplicate topic '" + t.id + "'");
    }
    std::set<std::string> question_ids;
    for (const auto& q : questions) {
        if (!question_ids.insert(q.id).second) {
            throw Error(ErrorCode::invalid_argument, "duplicate question '" + q.id + "'");
        }
        if (!topic_ids.count(q.topic_id)) {
            throw Error(ErrorCode::invalid_argument, "question '" + q.id + "' has unknown topic '" + q.topic_id + "'");
        }
        if (q.relevant.size() != kRelevantPerQuestion) {
            throw Error(ErrorCode::invalid_argument, "question '" + q.id + "' lists " +
                                                         std::to_string(q.relevant.size()) +
                                                         " relevant entries, expected 5");
        }
        if (q.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "question '" + q.id + "' has no text");
        }
    }
}

void EvalDataset::check_corpus(const std::set<EntryId>& corpus_ids) const {
    for (const auto& q : questions) {
        for (auto id : q.relevant) {
            if (!corpus_ids.count(id)) {
                throw Error(ErrorCode::integrity, "question '" + q.id + "' references entry " +
                                                      std::to_string(id) + ", which is not in the corpus");
            }
        }
    }
}

// ---- search evaluation ----------------------------------------------------------

std::string_view to_string(EvalMode mode) {
    switch (mode) {
    case EvalMode::lexical: return "lexical";
    case EvalMode::semantic: return "semantic";
    case EvalMode::hybrid: return "hybrid";
    }
    return "hybrid";
}

std::optional<EvalMode> parse_eval_mode(std::string_view name) {
    if (name == "lexical") return EvalMode::lexical;
    if (name == "semantic") return EvalMode::semantic;
    if (name == "hybrid") return EvalMode::hybrid;
    return std::nullopt;
}

std::vector<EvalConfig> default_eval_grid(const FusionParams& base) {
    FusionParams hybrid = base;
    hybrid.alpha = 0.9;
    return {
        {std::string(to_string(base.scorer)), EvalMode::lexical, base},
        {"embedding", EvalMode::semantic, base},
        {"embedding+" + std::string(to_string(base.scorer)) + " (alpha=0.9)", EvalMode::hybrid, hybrid},
    };
}

EvalReport evaluate_search(const EvalDataset& dataset, const HybridSearcher& searcher,
                           std::span<const EvalConfig> grid, const std::set<EntryId>& corpus_ids, int k) {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be at least 1");
    dataset.validate();
    dataset.check_corpus(corpus_ids);
    for (const auto& c : grid) c.params.validate();

    EvalReport report;
    report.k = k;
    for (const auto& config : grid) {
        ConfigResult row;
        row.config = config;
        FusionParams params = config.params;
        params.k = k;
        double total = 0.0;
        for (const auto& q : dataset.questions) {
            QuestionResult r;
            r.question_id = q.id;
            switch (config.mode) {
            case EvalMode::lexical:
                for (const auto& h : searcher.lexical_arm(q.text, params)) r.retrieved.push_back(h.entry);
                break;
            case EvalMode::semantic:
                for (const auto& h : searcher.semantic_arm(q.text, k)) r.retrieved.push_back(h.entry);
                break;
            case EvalMode::hybrid:
                for (const auto& c : searcher.search(q.text, params)) r.retrieved.push_back(c.entry_id);
                break;
            }
            r.precision = precision_at_k(r.retrieved, q.relevant, k);
            total += r.precision;
            row.per_question.push_back(std::move(r));
        }
        row.mean_precision = dataset.questions.empty() ? 0.0 : total / static_cast<double>(dataset.questions.size());
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string format_eval_table(const EvalReport& report) {
    const std::string metric = "Precision@" + std::to_string(report.k);
    std::size_t width = std::string("Search method").size();
    for (const auto& r : report.rows) width = std::max(width, r.config.label.size());
    std::string out = fmt::format("{:<{}}  {:>{}}\n", "Search method", width, metric, metric.size());
    out += std::string(width, '-') + "  " + std::string(metric.size(), '-') + "\n";
    for (const auto& r : report.rows) {
        out += fmt::format("{:<{}}  {:>{}.3f}\n", r.config.label, width, r.mean_precision, metric.size());
    }
    return out;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j{{"k", report.k}, {"rows", nlohmann::json::array()}};
    for (const auto& r : report.rows) {
        nlohmann::json row{{"label", r.config.label},
                           {"mode", to_string(r.config.mode)},
                           {"alpha", r.config.params.alpha},
                           {"gamma", r.config.params.gamma},
                           {"scorer", to_string(r.config.params.scorer)},
                           {"mean_precision", r.mean_precision},
                           {"questions", nlohmann::json::array()}};
        for (const auto& q : r.per_question) {
            row["questions"].push_back({{"id", q.question_id}, {"retrieved", q.retrieved}, {"precision", q.precision}});
        }
        j["rows"].push_back(std::move(row));
    }
    return j;
}

// ---- Krippendorff's alpha -------------------------------------------------------

std::string_view to_string(KrippendorffMetric metric) {
    switch (metric) {
    case KrippendorffMetric::nominal: return "nominal";
    case KrippendorffMetric::ordinal: return "ordinal";
    case KrippendorffMetric::interval: return "interval";
    }
    return "interval";
}

std::optional<KrippendorffMetric> parse_krippendorff_metric(std::string_view name) {
    if (name == "nominal") return KrippendorffMetric::nominal;
    if (name == "ordinal") return KrippendorffMetric::ordinal;
    if (name == "interval") return KrippendorffMetric::interval;
    return std::nullopt;
}

void AnnotationMatrix::validate() const {
    if (raters() < 2) throw Error(ErrorCode::invalid_argument, "an annotation matrix needs at least 2 raters");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].size() != raters()) {
            throw Error(ErrorCode::invalid_argument, "item " + std::to_string(i) + " has " +
                                                         std::to_string(cells[i].size()) + " ratings, expected " +
                                                         std::to_string(raters()));
        }
        for (const auto& v : cells[i]) {
            if (v && (*v < 1 || *v > 5)) {
                throw Error(ErrorCode::invalid_argument, "score " + std::to_string(*v) + " outside 1..5");
            }
        }
    }
}

double krippendorff_alpha(const AnnotationMatrix& matrix, KrippendorffMetric metric) {
    matrix.validate();
    constexpr int kValues = 5;
    double o[kValues][kValues] = {};
    for (const auto& item : matrix.cells) {
        std::vector<int> values;
        for (const auto& v : item) {
            if (v) values.push_back(*v - 1);
        }
        if (values.size() < 2) continue;
        const double w = 1.0 / static_cast<double>(values.size() - 1);
        for (std::size_t a = 0; a < values.size(); ++a) {
            for (std::size_t b = 0; b < values.size(); ++b) {
                if (a != b) o[values[a]][values[b]] += w;
            }
        }
    }
    double n_c[kValues] = {};
    double n = 0.0;
    for (int c = 0; c < kValues; ++c) {
        for (int k = 0; k < kValues; ++k) n_c[c] += o[c][k];
        n += n_c[c];
    }
    if (n < 2.0 - 1e-9) throw Error(ErrorCode::undefined_result, "fewer than two pairable values");

    auto delta2 = [&](int c, int k) -> double {
        switch (metric) {
        case KrippendorffMetric::nominal: return c == k ? 0.0 : 1.0;
        case KrippendorffMetric::interval: return static_cast<double>((c - k) * (c - k));
        case KrippendorffMetric::ordinal: {
            const int lo = std::min(c, k), hi = std::max(c, k);
            double s = 0.0;
            for (int g = lo; g <= hi; ++g) s += n_c[g];
            s -= (n_c[lo] + n_c[hi]) / 2.0;
            return s * s;
        }
        }
        return 0.0;
    };

    double d_o = 0.0, d_e = 0.0;
    for (int c = 0; c < kValues; ++c) {
        for (int k = 0; k < kValues; ++k) {
            const double d = delta2(c, k);
            d_o += o[c][k] * d;
            d_e += n_c[c] * n_c[k] * d;
        }
    }
    if (d_e <= 0.0) throw Error(ErrorCode::undefined_result, "pairable values show no variation");
    return 1.0 - (n - 1.0) * d_o / d_e;
}

}  // namespace diarist
