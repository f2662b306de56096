#include "diarist/analyzer.hpp"

namespace diarist {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one UTF-8 sequence starting at `pos`, advancing it. Invalid bytes
// decode to U+FFFD one byte at a time.
char32_t decode(std::string_view s, std::size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return kReplacement;
    }
    if (pos + len > s.size()) {
        ++pos;
        return kReplacement;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += len;
    return cp;
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp == kReplacement) return false;
    if (cp <= 0xBF) return false;                   // Latin-1 punctuation and symbols
    if (cp == 0xD7 || cp == 0xF7) return false;     // multiplication, division signs
    if (cp >= 0x2000 && cp <= 0x2BFF) return false; // punctuation, arrows, math, boxes
    if (cp >= 0x3000 && cp <= 0x303F) return false; // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false; // emoji and pictographs
    return true;
}

char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                 // Cyrillic А-Я
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;                 // Cyrillic Ѐ-Џ
    return cp;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

AnalyzerConfig AnalyzerConfig::english() {
    AnalyzerConfig config;
    config.stopwords = {
        "a",     "about", "after", "all",  "also",  "an",    "and",   "any",   "are",  "as",
        "at",    "be",    "been",  "but",  "by",    "can",   "could", "did",   "do",   "does",
        "for",   "from",  "had",   "has",  "have",  "he",    "her",   "his",   "how",  "i",
        "if",    "in",    "into",  "is",   "it",    "its",   "me",    "my",    "no",   "not",
        "of",    "on",    "or",    "our",  "she",   "so",    "than",  "that",  "the",  "their",
        "them",  "then",  "there", "they", "this",  "to",    "was",   "we",    "were", "what",
        "when",  "where", "which", "who",  "whom",  "why",   "will",  "with",  "would", "you",
        "your",
    };
    return config;
}

std::string light_stem(std::string_view token) {
    constexpr std::size_t kMinStem = 3;
    std::string t(token);
    auto strip = [&](std::string_view suffix, std::string_view replacement) {
        if (!ends_with(t, suffix)) return false;
        if (t.size() - suffix.size() + replacement.size() < kMinStem) return false;
        t.resize(t.size() - suffix.size());
        t.append(replacement);
        return true;
    };
    if (strip("ies", "y") || strip("sses", "ss") || strip("ing", "") || strip("ed", "") ||
        strip("ly", "")) {
        return t;
    }
    if (ends_with(t, "s") && !ends_with(t, "ss") && !ends_with(t, "us") && !ends_with(t, "is")) {
        strip("s", "");
    }
    return t;
}

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (!config.stopwords.contains(current)) {
            tokens.push_back(config.stemmer == Stemmer::light_suffix ? light_stem(current)
                                                                     : std::move(current));
        }
        current.clear();
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = decode(text, pos);
        if (!is_word_char(cp)) {
            flush();
            continue;
        }
        if (config.lowercase) cp = fold_case(cp);
        encode(cp, current);
    }
    flush();
    return tokens;
}

}  // namespace diarist
