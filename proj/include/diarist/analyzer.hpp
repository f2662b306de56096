#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

enum class Stemmer { none, light_suffix };

// Segmentation splits UTF-8 text into maximal runs of letters and digits.
// Code points outside ASCII count as letters unless they fall in a Unicode
// punctuation or symbol block.
struct AnalyzerConfig {
    bool lowercase = true;
    std::set<std::string, std::less<>> stopwords;
    Stemmer stemmer = Stemmer::light_suffix;

    // Lowercasing, a short English stopword list, light suffix stemming.
    static AnalyzerConfig english();

    bool operator==(const AnalyzerConfig&) const = default;
};

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

// Strips a few inflectional suffixes (-ies, -sses, -s, -ing, -ed, -ly) while
// keeping at least three characters of stem.
std::string light_stem(std::string_view token);

}  // namespace diarist
