#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "factdetect/llm_gateway.hpp"

namespace factdetect {

// Fixed-length, finite embedding.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    // Throws DataError on empty input or NaN/Inf entries.
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

// dot(u,v) / (|u||v|), clamped to [-1, 1]. Throws DataError on dim mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    return cosine(u.values(), v.values());
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed_raw(std::string_view text) = 0;
    // Provider family and model, recorded in output metadata and cache keys.
    virtual std::string name() const = 0;
    virtual std::string model() const = 0;
};

// Deterministic offline provider. Each lowercase token seeds a pseudo-random direction
// in [-1, 1]^dim; a text embeds to the count-weighted sum over its token multiset.
// Optional overrides pin exact vectors for exact texts.
class FixtureEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit FixtureEmbeddingProvider(std::uint64_t seed = 0x5eed, std::size_t dim = 64);

    void add_override(std::string text, std::vector<double> vec);
    // JSONL lines of {"text": "...", "embedding": [...]}.
    void load_overrides(const std::filesystem::path& path);

    std::vector<double> embed_raw(std::string_view text) override;
    std::string name() const override { return "fixture"; }
    std::string model() const override;

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::unordered_map<std::string, std::vector<double>> overrides_;
};

// POST {endpoint}/embeddings {model, input:[text]} -> data[0].embedding
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string endpoint, std::string model, std::string api_key);

    std::vector<double> embed_raw(std::string_view text) override;
    std::string name() const override { return "remote"; }
    std::string model() const override { return model_; }

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
};

struct EmbedderStats {
    long requests = 0;
    long provider_calls = 0;
    long cache_hits = 0;
};

// Cached, concurrency-bounded embedding front. Cache entries live in namespace "embed",
// keyed by SHA-256 over (provider, model, text).
class Embedder {
public:
    Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<ResponseCache> cache, int parallelism = 4);

    // Throws DataError for empty text; provider errors propagate.
    EmbeddingVector embed(std::string_view text);

    EmbedderStats stats() const noexcept;
    const EmbeddingProvider& provider() const noexcept { return *provider_; }

private:
    std::shared_ptr<EmbeddingProvider> provider_;
    std::shared_ptr<ResponseCache> cache_;
    std::counting_semaphore<> slots_;
    std::atomic<long> requests_{0}, provider_calls_{0}, cache_hits_{0};
};

}  // namespace factdetect
