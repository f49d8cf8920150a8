#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factdetect/datamodel.hpp"
#include "factdetect/diagnostics.hpp"
#include "factdetect/errors.hpp"
#include "factdetect/llm_gateway.hpp"
#include "factdetect/templates.hpp"

namespace factdetect {

struct PipelineConfig {
    std::string model;
    double temperature = 0.0;
    int max_answer_pairs = 8;
    bool dedup = true;
    StageBudgets budgets;
    std::string direct_exemplars = "direct_v1";
    int direct_shots = 5;
    // Cache namespace for generation calls.
    std::string cache_namespace = "gen";
};

// Raised when the question-generation step returns nothing usable.
class EmptyQuestion : public Error {
public:
    EmptyQuestion() : Error("empty question") {}
};

// --- output parsers (pure) -------------------------------------------------

// Lines of the form "<claim phrase> || <evidence phrase>", optionally numbered or bulleted.
// Lines without the delimiter are ignored; at most max_pairs are kept in model order.
std::vector<AnswerPair> parse_answer_pairs(std::string_view raw, std::string_view claim, std::size_t max_pairs);

// First non-empty line without list marker or "Question:" label, "?" appended when absent.
std::optional<std::string> parse_question(std::string_view raw);

// First alphabetic token: "reasonable"/"yes" -> true. Everything else, including
// "not"/"no"/"unreasonable" and unrecognised tokens, -> false.
bool parse_reasonable(std::string_view raw);

// First non-empty line without list marker or "Sentence:" label.
std::optional<std::string> parse_fused_sentence(std::string_view raw);

// Marked list lines when any line carries a list marker, otherwise every non-empty line.
std::vector<std::string> parse_fact_list(std::string_view raw);

// Drops facts whose dedup_key repeats an earlier one; returns the number dropped.
std::size_t dedup_facts(std::vector<ShortFact>& facts);

using FactsSink = std::function<void(std::span<const PairFacts>)>;

class FactGenerator {
public:
    FactGenerator(LlmGateway& gateway, TemplateSet templates, PipelineConfig config,
                  Diagnostics* diagnostics = nullptr);

    std::string phrase_prompt(const ClaimEvidencePair& pair) const;
    std::string question_prompt(std::string_view claim, std::string_view claim_phrase) const;
    std::string reasonability_prompt(std::string_view question, std::string_view evidence_phrase) const;
    std::string fusion_prompt(std::string_view question, std::string_view evidence_phrase) const;
    std::string direct_prompt(const ClaimEvidencePair& pair) const;

    std::vector<AnswerPair> extract_answer_pairs(const ClaimEvidencePair& pair);
    // Throws EmptyQuestion on blank output.
    std::string generate_question(std::string_view claim, std::string_view claim_phrase);
    bool check_reasonable(std::string_view question, std::string_view evidence_phrase);
    // nullopt (and a "blank_fusion" diagnostic) on blank output.
    std::optional<std::string> fuse_fact(std::string_view question, std::string_view evidence_phrase);

    // Steps 1-3 for one pair. Answer-pair chains run concurrently up to `parallelism`;
    // results keep answer-pair order. Only backend errors escape.
    std::vector<ShortFact> run_pipeline(const ClaimEvidencePair& pair, int parallelism = 1);

    std::vector<ShortFact> direct_generate(const ClaimEvidencePair& pair);

    // Whole dataset in chunks of chunk_size pairs. Each finished chunk is handed to sink in
    // pair order. On a backend error the finished pairs of the failing chunk are flushed and
    // the error is rethrown with the pair id prepended.
    std::vector<PairFacts> generate_dataset(std::span<const ClaimEvidencePair> pairs, bool direct, int parallelism,
                                            const FactsSink& sink = {}, std::size_t chunk_size = 50);

    const PipelineConfig& config() const noexcept { return config_; }

private:
    std::string call(const std::string& prompt, int max_tokens);
    std::optional<ShortFact> run_chain(const ClaimEvidencePair& pair, const AnswerPair& ap);
    std::vector<ShortFact> assemble(std::vector<std::optional<ShortFact>> chain_results);
    void note(const std::string& name);

    LlmGateway& gateway_;
    TemplateSet templates_;
    PipelineConfig config_;
    Diagnostics* diagnostics_;
    std::vector<nlohmann::json> direct_exemplars_;
};

// Rethrows the current exception with "pair <id>: " prepended, keeping its category.
[[noreturn]] void rethrow_with_pair(const std::exception_ptr& error, const std::string& pair_id);

}  // namespace factdetect
