#include "factdetect/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "factdetect/datamodel.hpp"
#include "factdetect/errors.hpp"
#include "factdetect/text.hpp"
#include "http_client.hpp"
#include "factdetect/rng.hpp"

namespace factdetect {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DataError("embedding has zero dimensions");
    for (double v : values_)
        if (!std::isfinite(v)) throw DataError("embedding contains NaN or Inf");
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DataError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw DataError("cosine: zero-norm vector");
    double c = dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

// --- fixture provider -----------------------------------------------------

FixtureEmbeddingProvider::FixtureEmbeddingProvider(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dim must be positive");
}

std::string FixtureEmbeddingProvider::model() const {
    return "token-projection-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

void FixtureEmbeddingProvider::add_override(std::string text, std::vector<double> vec) {
    if (vec.size() != dim_) throw DataError("override embedding has wrong dimension for: " + text);
    overrides_[std::move(text)] = std::move(vec);
}

void FixtureEmbeddingProvider::load_overrides(const std::filesystem::path& path) {
    for (const auto& j : read_jsonl(path).records)
        add_override(j.at("text").get<std::string>(), j.at("embedding").get<std::vector<double>>());
}

std::vector<double> FixtureEmbeddingProvider::embed_raw(std::string_view t) {
    if (auto it = overrides_.find(std::string(t)); it != overrides_.end()) return it->second;

    std::map<std::string, int> multiset;  // sorted so summation order depends only on the multiset
    for (auto& tok : text::tokenize(t)) ++multiset[tok];
    if (multiset.empty()) multiset[std::string(t)] = 1;

    std::vector<double> out(dim_, 0.0);
    for (const auto& [tok, count] : multiset) {
        rng::SplitMix64 gen(seed_ ^ rng::fnv1a64(tok));
        for (std::size_t i = 0; i < dim_; ++i) out[i] += count * (2.0 * rng::to_unit(gen.next()) - 1.0);
    }
    return out;
}

// --- remote provider ------------------------------------------------------

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string endpoint, std::string model, std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {}

std::vector<double> RemoteEmbeddingProvider::embed_raw(std::string_view t) {
    nlohmann::json body{{"model", model_}, {"input", nlohmann::json::array({std::string(t)})}};
    auto resp = detail::post_json(endpoint_, "/embeddings", body, api_key_, std::chrono::seconds(60));
    try {
        return resp.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError("embedding response lacks data[0].embedding");
    }
}

// --- embedder -------------------------------------------------------------

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<ResponseCache> cache, int parallelism)
    : provider_(std::move(provider)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      slots_(std::max(1, parallelism)) {}

EmbeddingVector Embedder::embed(std::string_view t) {
    if (text::trim(t).empty()) throw DataError("cannot embed empty text");
    requests_.fetch_add(1);
    std::string canonical = provider_->name();
    canonical += '\x1F';
    canonical += provider_->model();
    canonical += '\x1F';
    canonical += t;
    auto key = sha256_hex(canonical);
    if (auto hit = cache_->get("embed", key)) {
        cache_hits_.fetch_add(1);
        return EmbeddingVector(hit->at("embedding").get<std::vector<double>>());
    }
    std::vector<double> raw;
    slots_.acquire();
    try {
        provider_calls_.fetch_add(1);
        raw = provider_->embed_raw(t);
    } catch (...) {
        slots_.release();
        throw;
    }
    slots_.release();
    EmbeddingVector vec(std::move(raw));
    cache_->put("embed", key, nlohmann::json{{"key", key}, {"provider", provider_->name()},
                                             {"model", provider_->model()}, {"text", t},
                                             {"embedding", std::vector<double>(vec.values().begin(), vec.values().end())}});
    return vec;
}

EmbedderStats Embedder::stats() const noexcept {
    return {requests_.load(), provider_calls_.load(), cache_hits_.load()};
}

}  // namespace factdetect
