#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factdetect/datamodel.hpp"

namespace factdetect {

// Label spaces as class indices. Three-way: 0=Supported 1=Contradicted 2=NEI.
// Factuality: 0=Yes 1=No.
enum class LabelSpace { ThreeWay, Factuality };

int class_count(LabelSpace space) noexcept;
std::string class_name(LabelSpace space, int cls);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int n_classes);
    static ConfusionMatrix from_labels(std::span<const int> gold, std::span<const int> pred, int n_classes);

    void add(int gold, int pred);
    long at(int gold, int pred) const;
    long n() const noexcept { return n_; }
    int classes() const noexcept { return k_; }

    long tp(int c) const;
    long fp(int c) const;
    long fn(int c) const;
    long gold_count(int c) const;

    // 0 when the denominator is 0.
    double precision(int c) const;
    double recall(int c) const;
    double f1(int c) const;
    double accuracy() const;

private:
    int k_;
    long n_ = 0;
    std::vector<long> counts_;
};

struct ClassMetrics {
    std::string label;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    long support = 0;
    // Counted in the macro average.
    bool in_macro = false;
};

struct RunMetrics {
    int run = 1;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    double accuracy = 0;
    std::optional<double> auc;
    long n = 0;
};

struct Aggregate {
    double mean = 0;
    double std = 0;
    std::vector<double> values;
};

struct ScoreOptions {
    bool wo_nei = false;
    // Count gold-absent classes as F1 = 0 in the macro.
    bool include_absent_classes = false;
};

struct EvalReport {
    LabelSpace space = LabelSpace::ThreeWay;
    std::vector<RunMetrics> runs;
    // Keyed by metric name: macro_f1, macro_precision, macro_recall, accuracy, auc.
    std::map<std::string, Aggregate> aggregate;
    ScoreOptions options;
    // Caller-supplied echo of strategy, model, gamma, threshold, k, ...
    json echo = json::object();
};

// Gold verdicts by pair id.
using GoldMap = std::map<std::string, Verdict, std::less<>>;
GoldMap gold_map(std::span<const ClaimEvidencePair> pairs);

// Factuality mode reads gold Supported as Yes and anything else as No.
int gold_class(LabelSpace space, Verdict gold) noexcept;
int predicted_class(const PredictedLabel& label) noexcept;

RunMetrics score_labels(std::span<const int> gold, std::span<const int> pred, LabelSpace space, bool include_absent);

// Scores every run present in preds, then aggregates. Throws DataError for an unknown
// pair id, mixed label spaces, or an empty set after filtering ("empty evaluation set").
EvalReport score(std::span<const Prediction> preds, const GoldMap& golds, const ScoreOptions& options = {});

// Mean and sample std (n-1; 0 for one value). Throws DataError when empty.
Aggregate aggregate_values(std::span<const double> values);
std::map<std::string, Aggregate> aggregate_runs(std::span<const RunMetrics> runs);

// Rank-based (Mann-Whitney) AUC with averaged ties; positives are label true.
// Throws DataError when only one class is present.
double auc(std::span<const double> scores, const std::vector<bool>& positive);

struct SignificanceOptions {
    std::size_t iterations = 10000;
    std::uint64_t seed = 0;
    bool wo_nei = false;
    bool include_absent_classes = false;
};

struct SignificanceResult {
    double p_value = 1.0;
    double observed_delta = 0;
    std::size_t iterations = 0;
    std::size_t n = 0;
};

// (1 + #{|d| >= |observed|}) / (1 + deltas.size()); ties within 1e-12 count.
double p_value_from(std::span<const double> deltas, double observed);

// Paired approximate randomization on macro-F1. Both lists must cover exactly the same
// pair ids, each once.
SignificanceResult significance(std::span<const Prediction> a, std::span<const Prediction> b, const GoldMap& golds,
                                const SignificanceOptions& options = {});

struct GenerationStats {
    std::size_t pairs = 0;
    std::size_t facts = 0;
    double avg_facts_per_pair = 0;
    double pct_empty_pairs = 0;
    double avg_fact_length_tokens = 0;
    // Important / labeled facts; nullopt when no fact is labeled.
    std::optional<double> important_ratio;
};

GenerationStats generation_stats(std::span<const PairFacts> facts);

void to_json(json& j, const RunMetrics& m);
void to_json(json& j, const EvalReport& r);
void to_json(json& j, const SignificanceResult& s);
void to_json(json& j, const GenerationStats& g);

struct TableRow {
    std::string strategy;
    std::optional<double> f1;
    std::optional<double> f1_wo_nei;
};

// Aligned text table: one row per strategy, columns F1 and F1 wo-NEI (as percentages).
std::string render_table(std::span<const TableRow> rows);

}  // namespace factdetect
