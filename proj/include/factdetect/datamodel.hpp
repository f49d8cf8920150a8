#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace factdetect {

using json = nlohmann::json;

enum class Verdict { Supported, Contradicted, Nei };

enum class BinaryAnswer { Yes, No };

// "SUPPORT" | "CONTRADICT" | "NEI"
std::string_view to_string(Verdict v) noexcept;
// "YES" | "NO"
std::string_view to_string(BinaryAnswer a) noexcept;

// Strict inverses of to_string; throw DataError("unknown label ...") otherwise.
Verdict parse_verdict_label(std::string_view s);
BinaryAnswer parse_binary_label(std::string_view s);

struct ClaimEvidencePair {
    std::string id;
    std::string claim;
    std::string evidence;
    std::optional<std::string> title;
    std::optional<Verdict> gold;
    std::string dataset;

    bool operator==(const ClaimEvidencePair&) const = default;
};

struct AnswerPair {
    std::string claim_phrase;
    std::string evidence_phrase;
    std::size_t index = 0;
    // Whether claim_phrase occurs verbatim (case-insensitively) in the claim.
    bool claim_phrase_in_claim = false;

    bool operator==(const AnswerPair&) const = default;
};

enum class FactLabel { Important, NotImportant };

// "important" | "not_important"
std::string_view to_string(FactLabel l) noexcept;
FactLabel parse_fact_label(std::string_view s);

enum class FactSource { Pipeline, Direct };

struct ShortFact {
    std::string text;
    std::string question;
    std::string claim_phrase;
    std::string evidence_phrase;
    std::optional<double> sim;
    std::optional<FactLabel> label;
    FactSource source = FactSource::Pipeline;

    bool operator==(const ShortFact&) const = default;
};

// Lowercased, whitespace-collapsed, trimmed text. Two facts with equal keys are duplicates.
std::string dedup_key(std::string_view text);

// All generated facts for one pair; one line of a facts file.
struct PairFacts {
    std::string pair_id;
    std::vector<ShortFact> facts;

    bool operator==(const PairFacts&) const = default;
};

enum class Strategy { Vanilla, Cot, Direct, AugFactDetect };

std::string_view to_string(Strategy s) noexcept;
Strategy parse_strategy(std::string_view s);

using PredictedLabel = std::variant<Verdict, BinaryAnswer>;

struct Prediction {
    std::string pair_id;
    Strategy strategy = Strategy::Vanilla;
    std::string model;
    int run = 1;
    PredictedLabel verdict = Verdict::Nei;
    std::vector<std::string> relevant_facts;
    std::optional<std::string> explanation;
    std::string raw;
    bool parse_ok = false;
    bool fallback = false;

    bool operator==(const Prediction&) const = default;
};

void to_json(json& j, const ClaimEvidencePair& p);
void from_json(const json& j, ClaimEvidencePair& p);
void to_json(json& j, const ShortFact& f);
void from_json(const json& j, ShortFact& f);
void to_json(json& j, const PairFacts& pf);
void from_json(const json& j, PairFacts& pf);
void to_json(json& j, const Prediction& p);
void from_json(const json& j, Prediction& p);

enum class DatasetFormat { Normalized, SciFact, HealthVer };

DatasetFormat parse_dataset_format(std::string_view s);

struct LoadOptions {
    // SciFact only: the corpus file. Defaults to corpus.jsonl next to the claims file.
    std::optional<std::filesystem::path> corpus;
    // SciFact only: emit NEI pairs (whole cited abstract as evidence) for claims without evidence.
    bool scifact_include_nei = true;
    // Dataset tag for adapters; defaults to the format name.
    std::optional<std::string> dataset_tag;
};

std::vector<ClaimEvidencePair> load_pairs(const std::filesystem::path& path, DatasetFormat format,
                                          const LoadOptions& options = {});

// Empty iff every ClaimEvidencePair invariant holds (uniqueness is checked by load_pairs).
std::vector<std::string> validate_pair(const ClaimEvidencePair& pair);

// --- JSONL plumbing -------------------------------------------------------

constexpr int kSchemaVersion = 1;

// Builds the line-1 metadata object every output file starts with.
json make_metadata(std::string_view kind, const json& config);

// True when the object is a metadata header line.
bool is_metadata(const json& line);

struct JsonlFile {
    std::optional<json> metadata;
    std::vector<json> records;
};

// Reads one JSON value per non-blank line. A leading metadata line is split off and its
// schema_version validated. Errors name the 1-based line number.
JsonlFile read_jsonl(const std::filesystem::path& path);

// One compact object per line, trailing newline. Overwrites.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records,
                 const std::optional<json>& metadata = std::nullopt);

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records,
                 const std::optional<json>& metadata = std::nullopt) {
    std::vector<json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.emplace_back(r);
    write_jsonl(path, lines, metadata);
}

// Appends records to an existing file; used for partial-progress flushing.
void append_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::vector<PairFacts> load_facts(const std::filesystem::path& path);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

}  // namespace factdetect
