#include "diarist/benchmark.hpp"
#include "diarist/csv.hpp"
#include "diarist/eval.hpp"
#include "diarist/service.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace diarist;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_file;
    std::string data_dir;
    double alpha = 0.0;
    double gamma = 0.0;
    int k = 0;
    std::string scorer;
    std::vector<std::string> fields;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* scorer_opt = nullptr;
    CLI::Option* fields_opt = nullptr;
    CLI::Option* data_dir_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON config file")->check(CLI::ExistingFile);
    f.data_dir_opt = cmd->add_option("--data-dir", f.data_dir, "Directory holding kb.sqlite and the indexes");
}

void add_fusion(CLI::App* cmd, CommonFlags& f) {
    f.alpha_opt = cmd->add_option("--alpha", f.alpha, "Semantic arm weight in [0, 1]");
    f.gamma_opt = cmd->add_option("--gamma", f.gamma, "Arm score weight against field scores in [0, 1]");
    f.k_opt = cmd->add_option("--k", f.k, "Depth per arm and result count");
    f.scorer_opt = cmd->add_option("--scorer", f.scorer, "Lexical scorer")->check(CLI::IsMember({"tfidf", "bm25"}));
    f.fields_opt = cmd->add_option("--fields", f.fields, "Semantic filter fields, e.g. authors.bio")->delimiter(',');
}

ServiceConfig resolve_config(const CommonFlags& f) {
    auto config = load_service_config(f.config_file.empty() ? std::nullopt : std::optional<fs::path>(f.config_file),
                                      [](const char* name) { return std::getenv(name); });
    if (f.data_dir_opt && f.data_dir_opt->count()) config.data_dir = f.data_dir;
    if (f.alpha_opt && f.alpha_opt->count()) config.fusion.alpha = f.alpha;
    if (f.gamma_opt && f.gamma_opt->count()) config.fusion.gamma = f.gamma;
    if (f.k_opt && f.k_opt->count()) config.fusion.k = f.k;
    if (f.scorer_opt && f.scorer_opt->count()) config.fusion.scorer = *parse_lexical_scorer(f.scorer);
    if (f.fields_opt && f.fields_opt->count()) {
        config.fusion.fields.clear();
        for (const auto& name : f.fields) {
            auto ref = parse_field_ref(name);
            if (!ref) throw Error(ErrorCode::invalid_argument, "field '" + name + "' is not table.column");
            config.fusion.fields.push_back(*ref);
        }
    }
    config.validate();
    return config;
}

CorpusFormat format_of(const std::string& flag, const fs::path& file) {
    if (!flag.empty()) return *parse_corpus_format(flag);
    return to_lower_ascii(file.extension().string()) == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

void print_candidates(const std::vector<ScoredCandidate>& candidates, const KnowledgeBase& kb) {
    std::cout << "rank  entry     s_final  s_sem    s_ft     date        text\n";
    int rank = 0;
    for (const auto& c : candidates) {
        const auto e = kb.get_entry(c.entry_id);
        std::string text = e ? e->text : std::string();
        if (text.size() > 60) text = text.substr(0, 57) + "...";
        std::printf("%-4d  %-8lld  %.5f  %.5f  %.5f  %s  %s\n", ++rank, static_cast<long long>(c.entry_id),
                    c.s_final, c.s_sem, c.s_ft, e ? e->date.str().c_str() : "?", text.c_str());
    }
}

AnnotationMatrix read_annotations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read '" + path.string() + "'");
    CsvReader reader(in);
    AnnotationMatrix m;
    CsvRecord rec;
    while (reader.next(rec)) {
        std::vector<std::optional<int>> row;
        for (const auto& cell : rec.fields) {
            if (cell.empty() || cell == ".") {
                row.emplace_back();
            } else {
                std::size_t used = 0;
                int v = 0;
                try {
                    v = std::stoi(cell, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used == 0 || used != cell.size()) {
                    throw Error(ErrorCode::parse, "line " + std::to_string(rec.line) + ": '" + cell + "' is not a score");
                }
                row.emplace_back(v);
            }
        }
        m.cells.push_back(std::move(row));
    }
    return m;
}

int run(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented question answering over diary collections"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    // One set per subcommand: CLI11 binds each option to its own storage.
    CommonFlags f_ingest, f_index, f_search, f_ask, f_eval, f_serve;

    auto* ingest = app.add_subcommand("ingest", "Load authors and entries, then rebuild the indexes");
    std::vector<std::string> ingest_files;
    std::string ingest_format;
    add_common(ingest, f_ingest);
    ingest->add_option("files", ingest_files, "Corpus files (authors before entries)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--format", ingest_format, "Override format detection")->check(CLI::IsMember({"jsonl", "csv"}));

    auto* index = app.add_subcommand("index", "Rebuild the lexical and vector indexes");
    add_common(index, f_index);
    add_fusion(index, f_index);

    auto* search = app.add_subcommand("search", "Hybrid search without the language model");
    std::string query;
    std::string arm = "hybrid";
    bool as_json = false;
    add_common(search, f_search);
    add_fusion(search, f_search);
    search->add_option("query", query, "Search query")->required();
    search->add_option("--arm", arm, "Ranking to show")->check(CLI::IsMember({"hybrid", "lexical", "semantic"}));
    search->add_flag("--json", as_json, "Print JSON");

    auto* ask = app.add_subcommand("ask", "Run one dialog turn end to end");
    std::string question;
    std::string transcript;
    std::string record;
    add_common(ask, f_ask);
    add_fusion(ask, f_ask);
    ask->add_option("question", question, "Question")->required();
    ask->add_option("--transcript", transcript, "Replay LLM calls from this transcript")->check(CLI::ExistingFile);
    ask->add_option("--record", record, "Append every LLM call to this transcript");
    ask->add_flag("--json", as_json, "Print the full turn as JSON");

    auto* eval = app.add_subcommand("eval", "Precision@5 over a question set, or Krippendorff's alpha");
    std::string dataset_file;
    std::uint64_t seed = BenchmarkOptions{}.seed;
    std::string annotations;
    std::string metric = "interval";
    add_common(eval, f_eval);
    add_fusion(eval, f_eval);
    eval->add_option("--dataset", dataset_file, "Question set (jsonl); default is the bundled synthetic benchmark")
        ->check(CLI::ExistingFile);
    eval->add_option("--seed", seed, "Benchmark seed when no dataset is given");
    eval->add_option("--annotations", annotations, "Items x raters CSV of 1-5 scores; prints alpha")
        ->check(CLI::ExistingFile);
    eval->add_option("--metric", metric, "Krippendorff distance")->check(CLI::IsMember({"nominal", "ordinal", "interval"}));
    eval->add_flag("--json", as_json, "Print machine-readable results");

    auto* serve = app.add_subcommand("serve", "Start the HTTP API");
    std::string host;
    int port = 0;
    add_common(serve, f_serve);
    add_fusion(serve, f_serve);
    auto* host_opt = serve->add_option("--host", host, "Listen address");
    auto* port_opt = serve->add_option("--port", port, "Listen port");
    auto* serve_transcript = serve->add_option("--transcript", transcript, "Stub replay transcript")
                                 ->check(CLI::ExistingFile);
    auto* serve_record = serve->add_option("--record", record, "Append every LLM call to this transcript");

    auto* gen = app.add_subcommand("gen-benchmark", "Write the synthetic corpus and question set");
    BenchmarkOptions bench;
    std::string out_dir = "benchmark";
    gen->add_option("--seed", bench.seed, "Generator seed");
    gen->add_option("--topics", bench.topics, "Topic count");
    gen->add_option("--entries-per-topic", bench.entries_per_topic, "Entries per topic");
    gen->add_option("--questions-per-topic", bench.questions_per_topic, "Questions per topic");
    gen->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    auto logger = spdlog::stderr_color_mt("diarist");
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

    if (*ingest) {
        Service service(resolve_config(f_ingest));
        for (const auto& file : ingest_files) {
            std::ifstream in(file, std::ios::binary);
            const auto counts = service.ingest(in, format_of(ingest_format, file));
            std::cout << file << ": " << counts.authors << " authors, " << counts.entries << " entries\n";
        }
        std::cout << "indexed " << service.snapshot()->entry_count() << " entries\n";
    } else if (*index) {
        Service service(resolve_config(f_index));
        service.reindex();
        std::cout << "indexed " << service.snapshot()->entry_count() << " entries with "
                  << service.provider().model_id() << "\n";
    } else if (*search) {
        const auto config = resolve_config(f_search);
        Service service(config);
        const auto snap = service.snapshot();
        std::vector<ScoredCandidate> out;
        if (arm == "hybrid") {
            out = snap->searcher().search(query, config.fusion);
        } else if (arm == "lexical") {
            for (const auto& h : snap->searcher().lexical_arm(query, config.fusion)) {
                ScoredCandidate c;
                c.entry_id = h.entry;
                c.s_ft_raw = c.s_ft = h.score;
                out.push_back(c);
            }
        } else {
            for (const auto& h : snap->searcher().semantic_arm(query, config.fusion.k)) {
                ScoredCandidate c;
                c.entry_id = h.entry;
                c.s_sem_raw = c.s_sem = h.cosine;
                out.push_back(c);
            }
        }
        if (as_json) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& c : out) j.push_back(to_json(c));
            std::cout << j.dump(2) << "\n";
        } else {
            print_candidates(out, service.kb());
        }
    } else if (*ask) {
        auto config = resolve_config(f_ask);
        if (!transcript.empty()) config.llm_transcript = transcript;
        if (!record.empty()) config.llm_record = record;
        Service service(config);
        const auto session = service.create_session();
        const auto turn = service.post_message(session.id, question, config.fusion);
        if (as_json) {
            std::cout << to_json(turn).dump(2) << "\n";
        } else {
            std::cout << turn.answer_rendered << "\n";
            if (!turn.citations.empty()) std::cout << "\nSources:\n";
            for (const auto& c : turn.citations) {
                std::cout << "  [" << c.marker << "] entry " << c.entry_id << "  " << c.url << "\n";
            }
            for (const auto& w : turn.warnings) std::cerr << "warning: " << w << "\n";
        }
        return turn.degraded ? 3 : 0;
    } else if (*eval) {
        if (!annotations.empty()) {
            const auto m = read_annotations(annotations);
            const double alpha = krippendorff_alpha(m, *parse_krippendorff_metric(metric));
            if (as_json) {
                std::cout << nlohmann::json{{"metric", metric}, {"alpha", alpha}, {"items", m.items()},
                                            {"raters", m.raters()}}
                                 .dump(2)
                          << "\n";
            } else {
                std::printf("Krippendorff's alpha (%s): %.4f\n", metric.c_str(), alpha);
            }
            return 0;
        }
        auto config = resolve_config(f_eval);
        EvalDataset dataset;
        std::shared_ptr<const CorpusSnapshot> snap;
        std::unique_ptr<Service> service;
        std::set<EntryId> ids;
        if (!dataset_file.empty()) {
            dataset = EvalDataset::load_file(dataset_file);
            service = std::make_unique<Service>(config);
            snap = service->snapshot();
            for (const auto& e : service->kb().entries()) ids.insert(e.id);
        } else {
            BenchmarkOptions opts;
            opts.seed = seed;
            auto b = generate_benchmark(opts);
            std::stringstream corpus;
            write_corpus_jsonl(corpus, b);
            config.data_dir.clear();
            service = std::make_unique<Service>(config);
            service->ingest(corpus, CorpusFormat::jsonl);
            snap = service->snapshot();
            dataset = std::move(b.dataset);
            for (const auto& e : b.entries) ids.insert(e.id);
        }
        const auto grid = default_eval_grid(config.fusion);
        const auto report = evaluate_search(dataset, snap->searcher(), grid, ids);
        if (as_json) {
            std::cout << to_json(report).dump(2) << "\n";
        } else {
            std::cout << format_eval_table(report);
        }
    } else if (*serve) {
        auto config = resolve_config(f_serve);
        if (host_opt->count()) config.host = host;
        if (port_opt->count()) config.port = port;
        if (serve_transcript->count()) config.llm_transcript = transcript;
        if (serve_record->count()) config.llm_record = record;
        config.validate();
        Service service(config);
        service.listen();
    } else if (*gen) {
        const auto b = generate_benchmark(bench);
        fs::create_directories(out_dir);
        std::ofstream corpus(fs::path(out_dir) / "corpus.jsonl");
        write_corpus_jsonl(corpus, b);
        std::ofstream questions(fs::path(out_dir) / "questions.jsonl");
        b.dataset.save(questions);
        std::cout << "wrote " << b.entries.size() << " entries by " << b.authors.size() << " authors and "
                  << b.dataset.questions.size() << " questions to " << out_dir << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
