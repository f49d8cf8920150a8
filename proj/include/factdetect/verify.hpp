#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factdetect/datamodel.hpp"
#include "factdetect/diagnostics.hpp"
#include "factdetect/llm_gateway.hpp"
#include "factdetect/templates.hpp"

namespace factdetect {

struct StrategyConfig {
    Strategy strategy = Strategy::Vanilla;
    int shots = 5;
    // Empty selects verify_v1, or factuality_v1 in factuality mode.
    std::string exemplar_set;
    // Drops NEI from the label space; a predicted NEI is coerced to Contradicted.
    bool binary_mode = false;
    // Yes/No label space: "can the statement be inferred from the document".
    bool factuality_mode = false;
    // Offer only facts labeled important (ablation); the default offers all facts.
    bool important_only = false;
    // Re-ask once in a separate cache namespace when the output is unparseable.
    bool retry_unparseable = false;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 512;

    void validate() const;
    std::string resolved_exemplar_set() const;
    bool needs_facts() const noexcept {
        return strategy == Strategy::AugFactDetect || strategy == Strategy::Direct;
    }
};

struct RenderedPrompt {
    std::string text;
    // augfactdetect with no facts fell back to the vanilla rendering.
    bool fallback = false;
    std::vector<std::string> offered_facts;
};

class PromptBuilder {
public:
    PromptBuilder(TemplateSet templates, StrategyConfig config);

    // facts is required (possibly empty) for augfactdetect and direct; ignored otherwise.
    RenderedPrompt build(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts) const;

    const StrategyConfig& config() const noexcept { return config_; }

private:
    std::string render(Strategy strategy, const ClaimEvidencePair& pair, const std::vector<std::string>& facts) const;
    std::string exemplar_block(Strategy strategy) const;

    TemplateSet templates_;
    StrategyConfig config_;
    std::vector<nlohmann::json> exemplars_;
};

// Convenience wrapper over PromptBuilder.
RenderedPrompt build_prompt(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts,
                            const StrategyConfig& config, const TemplateSet& templates);

struct ParsedVerdict {
    PredictedLabel verdict = Verdict::Nei;
    std::vector<std::string> relevant_facts;
    std::optional<std::string> explanation;
    bool parse_ok = false;
};

// Total: never throws. Uses the last "Verdict:" line; unparseable output gives
// parse_ok=false with Nei (No in factuality mode).
ParsedVerdict parse_verdict(std::string_view raw, bool factuality_mode) noexcept;

using FactsById = std::map<std::string, std::vector<ShortFact>, std::less<>>;
using PredictionSink = std::function<void(std::span<const Prediction>)>;

class Verifier {
public:
    Verifier(LlmGateway& gateway, TemplateSet templates, StrategyConfig config, Diagnostics* diagnostics = nullptr);

    Prediction verify_pair(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts, int run);

    // runs x pairs predictions in (run, pair) order; run r uses cache namespace "run-r".
    // Finished chunks go to sink in order; on error the finished part of the failing
    // chunk is flushed before rethrowing.
    std::vector<Prediction> verify_dataset(std::span<const ClaimEvidencePair> pairs, const FactsById* facts,
                                           int runs, int parallelism, const PredictionSink& sink = {},
                                           std::size_t chunk_size = 50);

    const PromptBuilder& prompts() const noexcept { return builder_; }

private:
    void note(const std::string& name, long by = 1);

    LlmGateway& gateway_;
    PromptBuilder builder_;
    Diagnostics* diagnostics_;
};

}  // namespace factdetect
