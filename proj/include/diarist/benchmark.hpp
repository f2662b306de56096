#pragma once

#include "diarist/eval.hpp"
#include "diarist/knowledge_base.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace diarist {

struct BenchmarkOptions {
    std::uint64_t seed = 42;
    int topics = 25;
    int entries_per_topic = 5;
    int questions_per_topic = 2;
};

// Synthetic diary corpus built from pseudo-words. Every topic owns a core
// vocabulary; entries mix it with a shared background vocabulary, a slice of
// a neighbouring topic's vocabulary and incidental place names. Questions
// paraphrase the core vocabulary through a synonym table with word dropout.
// A question's relevant entries are the first five entries of its topic.
struct Benchmark {
    std::vector<Author> authors;
    std::vector<Entry> entries;
    EvalDataset dataset;
};

// Deterministic for a given options value. Throws invalid_argument unless
// topics >= 2, entries_per_topic >= 5 and questions_per_topic >= 1.
Benchmark generate_benchmark(const BenchmarkOptions& options = {});

// Authors first, then entries, in the knowledge-base JSONL format.
void write_corpus_jsonl(std::ostream& out, const Benchmark& benchmark);

}  // namespace diarist
