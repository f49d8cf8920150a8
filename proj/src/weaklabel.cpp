#include "factdetect/weaklabel.hpp"

#include <cmath>
#include <unordered_map>

#include "factdetect/errors.hpp"
#include "factdetect/factgen.hpp"
#include "factdetect/kernels.hpp"
#include "factdetect/parallel.hpp"

namespace factdetect {

void LabelConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be a positive number");
    if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
}

double similarity_score(const EmbeddingVector& fact, const EmbeddingVector& claim, const EmbeddingVector& evidence,
                        double gamma) {
    return gamma * (cosine(fact, claim) + cosine(fact, evidence));
}

FactLabel assign_label(double score, double threshold) noexcept {
    if (std::abs(score - threshold) <= kThresholdTolerance) return FactLabel::Important;
    return score >= threshold ? FactLabel::Important : FactLabel::NotImportant;
}

ScoredFacts label_vectors(std::span<const double> facts, std::size_t dim, std::span<const double> claim,
                          std::span<const double> evidence, const LabelConfig& config) {
    config.validate();
    ScoredFacts out;
    out.scores = kernels::omp::similarity_scores({facts, dim, claim, evidence, config.gamma});
    out.labels.reserve(out.scores.size());
    for (double s : out.scores) out.labels.push_back(assign_label(s, config.threshold));
    return out;
}

std::vector<ShortFact> label_facts(const ClaimEvidencePair& pair, std::vector<ShortFact> facts,
                                   const LabelConfig& config, Embedder& embedder) {
    config.validate();
    if (facts.empty()) return facts;
    auto claim = embedder.embed(pair.claim);
    auto evidence = embedder.embed(pair.evidence);
    std::vector<double> matrix;
    matrix.reserve(facts.size() * claim.dim());
    for (const auto& f : facts) {
        EmbeddingVector v;
        try {
            v = embedder.embed(f.text);
        } catch (const BackendError& e) {
            throw BackendError("embedding fact \"" + f.text + "\": " + e.what());
        } catch (const DataError& e) {
            throw DataError("embedding fact \"" + f.text + "\": " + e.what());
        }
        if (v.dim() != claim.dim()) throw DataError("embedding dimension changed within provider");
        matrix.insert(matrix.end(), v.values().begin(), v.values().end());
    }
    auto scored = label_vectors(matrix, claim.dim(), claim.values(), evidence.values(), config);
    for (std::size_t i = 0; i < facts.size(); ++i) {
        facts[i].sim = scored.scores[i];
        facts[i].label = scored.labels[i];
    }
    return facts;
}

std::vector<PairFacts> label_dataset(std::span<const ClaimEvidencePair> pairs, std::vector<PairFacts> facts,
                                     const LabelConfig& config, Embedder& embedder, int parallelism) {
    config.validate();
    std::unordered_map<std::string, const ClaimEvidencePair*> by_id;
    for (const auto& p : pairs) by_id.emplace(p.id, &p);
    for (const auto& pf : facts)
        if (!by_id.count(pf.pair_id)) throw DataError("facts reference unknown pair_id '" + pf.pair_id + "'");

    auto outcome = run_tasks(facts.size(), parallelism, [&](std::size_t i) {
        facts[i].facts = label_facts(*by_id.at(facts[i].pair_id), std::move(facts[i].facts), config, embedder);
    });
    if (outcome.error) rethrow_with_pair(outcome.error, facts[outcome.error_index].pair_id);
    return facts;
}

}  // namespace factdetect
