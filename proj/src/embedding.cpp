#include "diarist/embedding.hpp"

#include "diarist/hash.hpp"

#include <algorithm>
#include <cmath>

namespace diarist {

std::vector<Embedding> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

bool normalize_l2(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0 || !std::isfinite(sq)) return false;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return true;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::invalid_argument, "cosine: dimension mismatch (" +
                                                     std::to_string(u.size()) + " vs " +
                                                     std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::invalid_argument, "cosine: zero vector");
    return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dim, std::uint64_t seed,
                                                   AnalyzerConfig analyzer)
    : dim_(dim), seed_(seed), analyzer_(std::move(analyzer)) {
    if (dim_ == 0) throw Error(ErrorCode::invalid_argument, "embedding dim must be positive");
    model_id_ = "hashing-" + std::to_string(dim_) + "-" + to_hex(seed_);
}

Embedding HashingEmbeddingProvider::embed(std::string_view text) const {
    if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
        throw Error(ErrorCode::invalid_argument, "cannot embed blank text");
    }
    std::vector<double> v(dim_, 0.0);
    auto add = [&](std::string_view token) {
        const std::uint64_t h = mix64(fnv1a(token, Fnv1a::kOffset ^ seed_));
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[static_cast<std::size_t>(h % dim_)] += sign;
    };
    for (const auto& token : analyze(text, analyzer_)) add(token);
    if (!normalize_l2(v)) {
        // No surviving tokens (or exact cancellation): fall back to the raw text.
        std::fill(v.begin(), v.end(), 0.0);
        add(text);
        normalize_l2(v);
    }
    return Embedding{std::move(v), model_id_};
}

}  // namespace diarist
