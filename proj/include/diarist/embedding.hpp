#pragma once

#include "diarist/analyzer.hpp"
#include "diarist/error.hpp"

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diarist {

struct Embedding {
    std::vector<double> vector;
    std::string model_id;

    std::size_t dim() const { return vector.size(); }
    bool operator==(const Embedding&) const = default;
};

// Raised by embedding providers. `completed` counts items that were embedded
// and stored before the failure, so a batch job can resume from there.
class ProviderError : public Error {
public:
    ProviderError(const std::string& message, bool retryable, std::size_t completed = 0)
        : Error(ErrorCode::provider, message), retryable_(retryable), completed_(completed) {}

    bool retryable() const noexcept { return retryable_; }
    std::size_t completed() const noexcept { return completed_; }

private:
    bool retryable_;
    std::size_t completed_;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual const std::string& model_id() const = 0;
    virtual std::size_t dim() const = 0;

    // Unit L2 norm output. Throws invalid_argument for blank text.
    virtual Embedding embed(std::string_view text) const = 0;
    virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;
};

// Feature hashing over analyzed tokens: each token adds +-1 to one of `dim`
// coordinates chosen by a seeded hash, and the sum is L2-normalised.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDim = 64;
    static constexpr std::uint64_t kDefaultSeed = 0x5eed;

    explicit HashingEmbeddingProvider(std::size_t dim = kDefaultDim,
                                      std::uint64_t seed = kDefaultSeed,
                                      AnalyzerConfig analyzer = AnalyzerConfig::english());

    const std::string& model_id() const override { return model_id_; }
    std::size_t dim() const override { return dim_; }
    Embedding embed(std::string_view text) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    AnalyzerConfig analyzer_;
    std::string model_id_;
};

// Client for an HTTP embedding service. Wire shape:
//   POST <endpoint>  {"model": "...", "input": ["text", ...]}
//   200              {"data": [{"embedding": [f, ...]}, ...]}
// Responses are re-normalised to unit length.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    struct Options {
        std::string endpoint;
        std::string api_key;
        std::string model_id;
        std::size_t dim = 0;
        std::chrono::milliseconds timeout{30000};
        std::size_t batch_size = 64;
    };

    explicit RemoteEmbeddingProvider(Options options);

    const std::string& model_id() const override { return options_.model_id; }
    std::size_t dim() const override { return options_.dim; }
    Embedding embed(std::string_view text) const override;
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override;

private:
    std::vector<Embedding> request(std::span<const std::string> texts) const;

    Options options_;
};

// u.v / (|u| |v|), clamped to [-1, 1]. Throws invalid_argument on dimension
// mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

// In-place L2 normalisation; returns false for a zero vector.
bool normalize_l2(std::vector<double>& v);

}  // namespace diarist
