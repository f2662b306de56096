#include "diarist/benchmark.hpp"

#include "diarist/analyzer.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <set>

namespace diarist {
namespace {

constexpr int kCoreWords = 12;
constexpr int kBackgroundWords = 300;
constexpr int kPlaces = 120;
constexpr int kEntryTokens = 45;
constexpr double kCoreShare = 0.65;
constexpr double kNeighbourShare = 0.08;
constexpr double kEntrySynonymRate = 0.2;
constexpr int kQuestionCoreWords = 8;
constexpr double kQuestionSynonymRate = 0.25;
constexpr double kQuestionDropout = 0.2;

// std::*_distribution output is implementation-defined; draws go through
// these helpers so corpora match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }
    // Zipf-like rank in [0, n): rank r has weight 1 / (r + 1).
    std::size_t zipf(std::size_t n) {
        const double h = std::log(static_cast<double>(n) + 1.0);
        const auto r = static_cast<std::size_t>(std::exp(unit() * h) - 1.0);
        return std::min(r, n - 1);
    }

private:
    std::mt19937_64 engine_;
};

class WordMint {
public:
    explicit WordMint(Rng& rng) : rng_(rng) {
        for (const auto& w : AnalyzerConfig::english().stopwords) used_.insert(w);
    }

    std::string next(int min_syllables = 2, int max_syllables = 4) {
        static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                       "r", "s", "t", "v", "z", "br", "dr", "kr", "st"};
        static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
        while (true) {
            std::string w;
            const int syllables = min_syllables + static_cast<int>(rng_.below(max_syllables - min_syllables + 1));
            for (int s = 0; s < syllables; ++s) {
                w += kOnsets[rng_.below(std::size(kOnsets))];
                w += kVowels[rng_.below(std::size(kVowels))];
            }
            if (used_.insert(w).second) return w;
        }
    }

private:
    Rng& rng_;
    std::set<std::string, std::less<>> used_;
};

IsoDate make_date(int year, int month, int day) {
    char buf[11];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return *IsoDate::parse(buf);
}

std::string capitalized(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
}

std::string as_text(const std::vector<std::string>& tokens, Rng& rng) {
    std::string out;
    std::size_t sentence_left = 0;
    for (const auto& t : tokens) {
        if (sentence_left == 0) {
            if (!out.empty()) out += ". ";
            out += capitalized(t);
            sentence_left = 5 + rng.below(6);
        } else {
            out += ' ';
            out += t;
        }
        --sentence_left;
    }
    out += '.';
    return out;
}

struct Topic {
    std::vector<std::string> core;
    std::vector<std::string> synonyms;
};

}  // namespace

Benchmark generate_benchmark(const BenchmarkOptions& options) {
    if (options.topics < 2) throw Error(ErrorCode::invalid_argument, "benchmark needs at least 2 topics");
    if (options.entries_per_topic < static_cast<int>(kRelevantPerQuestion)) {
        throw Error(ErrorCode::invalid_argument, "benchmark needs at least 5 entries per topic");
    }
    if (options.questions_per_topic < 1) {
        throw Error(ErrorCode::invalid_argument, "benchmark needs at least 1 question per topic");
    }

    Rng rng(options.seed);
    WordMint mint(rng);

    std::vector<Topic> topics(options.topics);
    for (auto& t : topics) {
        for (int i = 0; i < kCoreWords; ++i) {
            t.core.push_back(mint.next());
            t.synonyms.push_back(mint.next());
        }
    }
    std::vector<std::string> background;
    for (int i = 0; i < kBackgroundWords; ++i) background.push_back(mint.next(1, 3));
    std::vector<std::string> places;
    for (int i = 0; i < kPlaces; ++i) places.push_back(capitalized(mint.next(2, 3)));

    Benchmark bench;
    const int author_count = options.topics;
    for (int a = 0; a < author_count; ++a) {
        Author author;
        author.id = a + 1;
        author.name = capitalized(mint.next(2, 2)) + " " + capitalized(mint.next(2, 3));
        author.birth_date = make_date(1840 + static_cast<int>(rng.below(50)), 1 + static_cast<int>(rng.below(12)),
                                      1 + static_cast<int>(rng.below(28)));
        if (rng.chance(0.7)) {
            author.death_date = make_date(1917 + static_cast<int>(rng.below(30)),
                                          1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28)));
        }
        std::vector<std::string> bio;
        for (int i = 0; i < 12; ++i) bio.push_back(background[rng.zipf(background.size())]);
        author.bio = as_text(bio, rng);
        bench.authors.push_back(std::move(author));
    }

    auto topic_word = [&](const Topic& t, double synonym_rate) {
        const auto r = rng.zipf(t.core.size());
        return rng.chance(synonym_rate) ? t.synonyms[r] : t.core[r];
    };

    EntryId next_id = 1;
    std::vector<std::vector<EntryId>> topic_entries(options.topics);
    for (int t = 0; t < options.topics; ++t) {
        const Topic& topic = topics[t];
        const Topic& neighbour = topics[(t + 1) % options.topics];
        for (int e = 0; e < options.entries_per_topic; ++e) {
            std::vector<std::string> tokens;
            for (int i = 0; i < kEntryTokens; ++i) {
                const double u = rng.unit();
                if (u < kCoreShare) {
                    tokens.push_back(topic_word(topic, kEntrySynonymRate));
                } else if (u < kCoreShare + kNeighbourShare) {
                    tokens.push_back(topic_word(neighbour, kEntrySynonymRate));
                } else {
                    tokens.push_back(background[rng.zipf(background.size())]);
                }
            }
            tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size())),
                          places[rng.below(places.size())]);
            Entry entry;
            entry.id = next_id++;
            entry.author_id = static_cast<AuthorId>(1 + rng.below(author_count));
            entry.date = make_date(1900 + static_cast<int>(rng.below(17)), 1 + static_cast<int>(rng.below(12)),
                                   1 + static_cast<int>(rng.below(28)));
            entry.text = as_text(tokens, rng);
            topic_entries[t].push_back(entry.id);
            bench.entries.push_back(std::move(entry));
        }
    }

    int question_no = 0;
    for (int t = 0; t < options.topics; ++t) {
        const Topic& topic = topics[t];
        char topic_id[16];
        std::snprintf(topic_id, sizeof topic_id, "t%03d", t + 1);
        bench.dataset.topics.push_back({topic_id, topic.core[0]});
        for (int q = 0; q < options.questions_per_topic; ++q) {
            std::vector<std::string> words;
            while (words.empty()) {
                for (int i = 0; i < kQuestionCoreWords; ++i) {
                    if (rng.chance(kQuestionDropout)) continue;
                    words.push_back(topic_word(topic, kQuestionSynonymRate));
                }
            }
            words.push_back(places[rng.below(places.size())]);
            std::string text = "What did the diarists write about";
            for (const auto& w : words) text += " " + w;
            text += "?";
            EvalQuestion question;
            char qid[16];
            std::snprintf(qid, sizeof qid, "q%03d", ++question_no);
            question.id = qid;
            question.topic_id = topic_id;
            question.text = std::move(text);
            question.relevant.insert(topic_entries[t].begin(), topic_entries[t].begin() + kRelevantPerQuestion);
            bench.dataset.questions.push_back(std::move(question));
        }
    }
    return bench;
}

void write_corpus_jsonl(std::ostream& out, const Benchmark& benchmark) {
    for (const auto& a : benchmark.authors) {
        nlohmann::json j{{"id", a.id}, {"name", a.name}, {"bio", a.bio}};
        j["birth_date"] = a.birth_date ? nlohmann::json(a.birth_date->str()) : nlohmann::json(nullptr);
        j["death_date"] = a.death_date ? nlohmann::json(a.death_date->str()) : nlohmann::json(nullptr);
        out << j.dump() << '\n';
    }
    for (const auto& e : benchmark.entries) {
        nlohmann::json j{{"id", e.id}, {"author_id", e.author_id}, {"date", e.date.str()}, {"text", e.text}};
        if (e.source_url) j["source_url"] = *e.source_url;
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "failed to write corpus");
}

}  // namespace diarist
