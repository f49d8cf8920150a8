#pragma once

#include <span>
#include <vector>

#include "factdetect/datamodel.hpp"
#include "factdetect/embeddings.hpp"

namespace factdetect {

struct LabelConfig {
    double gamma = 0.5;
    double threshold = 0.6;

    void validate() const;
};

// Scores within this distance of the threshold count as equal to it.
inline constexpr double kThresholdTolerance = 1e-12;

// gamma * (cos(f, c) + cos(f, e)), in [-2 gamma, 2 gamma].
double similarity_score(const EmbeddingVector& fact, const EmbeddingVector& claim, const EmbeddingVector& evidence,
                        double gamma);

// Important iff score >= threshold (inclusive, with kThresholdTolerance).
FactLabel assign_label(double score, double threshold) noexcept;

// Scores and labels an n x dim row-major block of fact embeddings.
struct ScoredFacts {
    std::vector<double> scores;
    std::vector<FactLabel> labels;
};
ScoredFacts label_vectors(std::span<const double> facts, std::size_t dim, std::span<const double> claim,
                          std::span<const double> evidence, const LabelConfig& config);

// Embeds claim and evidence once and each fact once, then fills sim and label on every
// fact, keeping order.
std::vector<ShortFact> label_facts(const ClaimEvidencePair& pair, std::vector<ShortFact> facts,
                                   const LabelConfig& config, Embedder& embedder);

// Labels every facts record against its pair. Unknown pair ids are a DataError.
std::vector<PairFacts> label_dataset(std::span<const ClaimEvidencePair> pairs, std::vector<PairFacts> facts,
                                     const LabelConfig& config, Embedder& embedder, int parallelism);

}  // namespace factdetect
