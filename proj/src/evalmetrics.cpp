#include "factdetect/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "factdetect/errors.hpp"
#include "factdetect/kernels.hpp"

namespace factdetect {

int class_count(LabelSpace space) noexcept { return space == LabelSpace::ThreeWay ? 3 : 2; }

std::string class_name(LabelSpace space, int cls) {
    if (space == LabelSpace::ThreeWay) {
        static const char* names[] = {"SUPPORT", "CONTRADICT", "NEI"};
        return names[cls];
    }
    return cls == 0 ? "YES" : "NO";
}

ConfusionMatrix::ConfusionMatrix(int n_classes) : k_(n_classes) {
    if (n_classes < 1) throw DataError("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(k_ * k_), 0);
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> gold, std::span<const int> pred, int n_classes) {
    if (gold.size() != pred.size()) throw DataError("gold and predicted label counts differ");
    ConfusionMatrix m(n_classes);
    for (std::size_t i = 0; i < gold.size(); ++i) m.add(gold[i], pred[i]);
    return m;
}

void ConfusionMatrix::add(int gold, int pred) {
    if (gold < 0 || gold >= k_ || pred < 0 || pred >= k_) throw DataError("label index out of range");
    ++counts_[static_cast<std::size_t>(gold * k_ + pred)];
    ++n_;
}

long ConfusionMatrix::at(int gold, int pred) const { return counts_.at(static_cast<std::size_t>(gold * k_ + pred)); }

long ConfusionMatrix::tp(int c) const { return at(c, c); }

long ConfusionMatrix::fp(int c) const {
    long s = 0;
    for (int g = 0; g < k_; ++g)
        if (g != c) s += at(g, c);
    return s;
}

long ConfusionMatrix::fn(int c) const {
    long s = 0;
    for (int p = 0; p < k_; ++p)
        if (p != c) s += at(c, p);
    return s;
}

long ConfusionMatrix::gold_count(int c) const { return tp(c) + fn(c); }

double ConfusionMatrix::precision(int c) const {
    long d = tp(c) + fp(c);
    return d ? double(tp(c)) / double(d) : 0.0;
}

double ConfusionMatrix::recall(int c) const {
    long d = tp(c) + fn(c);
    return d ? double(tp(c)) / double(d) : 0.0;
}

double ConfusionMatrix::f1(int c) const {
    double p = precision(c), r = recall(c);
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double ConfusionMatrix::accuracy() const {
    if (n_ == 0) return 0.0;
    long correct = 0;
    for (int c = 0; c < k_; ++c) correct += tp(c);
    return double(correct) / double(n_);
}

GoldMap gold_map(std::span<const ClaimEvidencePair> pairs) {
    GoldMap out;
    for (const auto& p : pairs)
        if (p.gold) out.emplace(p.id, *p.gold);
    return out;
}

int gold_class(LabelSpace space, Verdict gold) noexcept {
    if (space == LabelSpace::Factuality) return gold == Verdict::Supported ? 0 : 1;
    return static_cast<int>(gold);
}

int predicted_class(const PredictedLabel& label) noexcept {
    if (auto* v = std::get_if<Verdict>(&label)) return static_cast<int>(*v);
    return std::get<BinaryAnswer>(label) == BinaryAnswer::Yes ? 0 : 1;
}

RunMetrics score_labels(std::span<const int> gold, std::span<const int> pred, LabelSpace space, bool include_absent) {
    if (gold.empty()) throw DataError("empty evaluation set");
    const int k = class_count(space);
    auto m = ConfusionMatrix::from_labels(gold, pred, k);
    RunMetrics out;
    out.n = m.n();
    out.accuracy = m.accuracy();
    int in_macro = 0;
    for (int c = 0; c < k; ++c) {
        ClassMetrics cm{class_name(space, c), m.precision(c), m.recall(c), m.f1(c), m.gold_count(c), false};
        cm.in_macro = include_absent || cm.support > 0;
        if (cm.in_macro) {
            out.macro_precision += cm.precision;
            out.macro_recall += cm.recall;
            out.macro_f1 += cm.f1;
            ++in_macro;
        }
        out.per_class.push_back(std::move(cm));
    }
    if (in_macro) {
        out.macro_precision /= in_macro;
        out.macro_recall /= in_macro;
        out.macro_f1 /= in_macro;
    }
    return out;
}

namespace {

LabelSpace space_of(std::span<const Prediction> preds) {
    if (preds.empty()) throw DataError("empty evaluation set");
    bool binary = std::holds_alternative<BinaryAnswer>(preds.front().verdict);
    for (const auto& p : preds)
        if (std::holds_alternative<BinaryAnswer>(p.verdict) != binary)
            throw DataError("predictions mix three-way and yes/no labels");
    return binary ? LabelSpace::Factuality : LabelSpace::ThreeWay;
}

Verdict lookup_gold(const GoldMap& golds, const std::string& id) {
    auto it = golds.find(id);
    if (it == golds.end()) throw DataError("prediction pair_id '" + id + "' has no gold verdict");
    return it->second;
}

struct Labels {
    std::vector<std::string> ids;
    std::vector<int> gold;
    std::vector<int> pred;
};

// One run's predictions as aligned label vectors, gold-NEI pairs dropped when wo_nei.
Labels collect(std::span<const Prediction* const> preds, const GoldMap& golds, LabelSpace space, bool wo_nei) {
    Labels out;
    std::set<std::string, std::less<>> seen;
    for (const auto* p : preds) {
        auto g = lookup_gold(golds, p->pair_id);
        if (!seen.insert(p->pair_id).second) throw DataError("duplicate prediction for pair_id '" + p->pair_id + "'");
        if (wo_nei && g == Verdict::Nei) continue;
        out.ids.push_back(p->pair_id);
        out.gold.push_back(gold_class(space, g));
        out.pred.push_back(predicted_class(p->verdict));
    }
    return out;
}

}  // namespace

EvalReport score(std::span<const Prediction> preds, const GoldMap& golds, const ScoreOptions& options) {
    EvalReport report;
    report.options = options;
    report.space = space_of(preds);

    std::map<int, std::vector<const Prediction*>> by_run;
    for (const auto& p : preds) by_run[p.run].push_back(&p);

    for (const auto& [run, list] : by_run) {
        auto labels = collect(list, golds, report.space, options.wo_nei);
        auto m = score_labels(labels.gold, labels.pred, report.space, options.include_absent_classes);
        m.run = run;
        if (report.space == LabelSpace::Factuality) {
            std::vector<double> scores;
            std::vector<bool> pos;
            for (std::size_t i = 0; i < labels.gold.size(); ++i) {
                scores.push_back(labels.pred[i] == 0 ? 1.0 : 0.0);
                pos.push_back(labels.gold[i] == 0);
            }
            bool both = std::find(pos.begin(), pos.end(), true) != pos.end() &&
                        std::find(pos.begin(), pos.end(), false) != pos.end();
            if (both) m.auc = auc(scores, pos);
        }
        report.runs.push_back(std::move(m));
    }
    report.aggregate = aggregate_runs(report.runs);
    return report;
}

Aggregate aggregate_values(std::span<const double> values) {
    if (values.empty()) throw DataError("no runs to aggregate");
    Aggregate a;
    a.values.assign(values.begin(), values.end());
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.std = std::sqrt(ss / double(values.size() - 1));
    }
    return a;
}

std::map<std::string, Aggregate> aggregate_runs(std::span<const RunMetrics> runs) {
    std::map<std::string, Aggregate> out;
    if (runs.empty()) throw DataError("no runs to aggregate");
    auto field = [&](auto getter) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(getter(r));
        return aggregate_values(v);
    };
    out["macro_f1"] = field([](const RunMetrics& r) { return r.macro_f1; });
    out["macro_precision"] = field([](const RunMetrics& r) { return r.macro_precision; });
    out["macro_recall"] = field([](const RunMetrics& r) { return r.macro_recall; });
    out["accuracy"] = field([](const RunMetrics& r) { return r.accuracy; });
    bool all_auc = std::all_of(runs.begin(), runs.end(), [](const RunMetrics& r) { return r.auc.has_value(); });
    if (all_auc) out["auc"] = field([](const RunMetrics& r) { return *r.auc; });
    return out;
}

double auc(std::span<const double> scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw DataError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double n_pos = 0, rank_sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (positive[i]) {
            ++n_pos;
            rank_sum += rank[i];
        }
    double n_neg = double(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc needs both classes in gold");
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

double p_value_from(std::span<const double> deltas, double observed) {
    const double obs = std::abs(observed);
    std::size_t hits = 0;
    for (double d : deltas)
        if (std::abs(d) >= obs - 1e-12) ++hits;
    return double(1 + hits) / double(1 + deltas.size());
}

SignificanceResult significance(std::span<const Prediction> a, std::span<const Prediction> b, const GoldMap& golds,
                                const SignificanceOptions& options) {
    auto space = space_of(a);
    if (space_of(b) != space) throw DataError("compared systems use different label spaces");
    if (a.size() != b.size()) throw DataError("significance needs paired predictions: sizes differ");

    std::vector<const Prediction*> pa, pb;
    for (const auto& p : a) pa.push_back(&p);
    auto la = collect(pa, golds, space, options.wo_nei);

    std::unordered_map<std::string, const Prediction*> b_by_id;
    for (const auto& p : b)
        if (!b_by_id.emplace(p.pair_id, &p).second)
            throw DataError("duplicate prediction for pair_id '" + p.pair_id + "'");
    for (const auto& p : a)
        if (!b_by_id.count(p.pair_id))
            throw DataError("significance needs paired predictions: '" + p.pair_id + "' missing from second system");
    for (const auto& id : la.ids) pb.push_back(b_by_id.at(id));
    std::vector<int> pred_b;
    for (const auto* p : pb) pred_b.push_back(predicted_class(p->verdict));
    if (la.gold.empty()) throw DataError("empty evaluation set");

    const int k = class_count(space);
    SignificanceResult out;
    out.n = la.gold.size();
    out.iterations = options.iterations;
    out.observed_delta = kernels::macro_f1(la.gold, la.pred, k, options.include_absent_classes) -
                         kernels::macro_f1(la.gold, pred_b, k, options.include_absent_classes);
    kernels::PermutationInput in{la.gold,   la.pred,           pred_b, k, options.include_absent_classes,
                                 options.iterations, options.seed};
    auto deltas = kernels::omp::permutation_deltas(in);
    out.p_value = p_value_from(deltas, out.observed_delta);
    return out;
}

GenerationStats generation_stats(std::span<const PairFacts> facts) {
    GenerationStats g;
    g.pairs = facts.size();
    std::size_t empty = 0, tokens = 0, labeled = 0, important = 0;
    for (const auto& pf : facts) {
        if (pf.facts.empty()) ++empty;
        for (const auto& f : pf.facts) {
            ++g.facts;
            std::istringstream in(f.text);
            std::string w;
            while (in >> w) ++tokens;
            if (f.label) {
                ++labeled;
                if (*f.label == FactLabel::Important) ++important;
            }
        }
    }
    if (g.pairs) {
        g.avg_facts_per_pair = double(g.facts) / double(g.pairs);
        g.pct_empty_pairs = double(empty) / double(g.pairs);
    }
    if (g.facts) g.avg_fact_length_tokens = double(tokens) / double(g.facts);
    if (labeled) g.important_ratio = double(important) / double(labeled);
    return g;
}

void to_json(json& j, const RunMetrics& m) {
    json classes = json::array();
    for (const auto& c : m.per_class)
        classes.push_back({{"label", c.label},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support},
                           {"in_macro", c.in_macro}});
    j = {{"run", m.run},
         {"n", m.n},
         {"per_class", classes},
         {"macro_precision", m.macro_precision},
         {"macro_recall", m.macro_recall},
         {"macro_f1", m.macro_f1},
         {"accuracy", m.accuracy},
         {"auc", m.auc ? json(*m.auc) : json(nullptr)}};
}

void to_json(json& j, const EvalReport& r) {
    json agg = json::object();
    for (const auto& [name, a] : r.aggregate) agg[name] = {{"mean", a.mean}, {"std", a.std}, {"values", a.values}};
    j = {{"label_space", r.space == LabelSpace::ThreeWay ? "three_way" : "factuality"},
         {"n", r.runs.empty() ? 0 : r.runs.front().n},
         {"runs", r.runs},
         {"aggregate", agg},
         {"options",
          {{"wo_nei", r.options.wo_nei},
           {"macro_classes", r.options.include_absent_classes ? "all" : "gold_present"}}},
         {"echo", r.echo}};
}

void to_json(json& j, const SignificanceResult& s) {
    j = {{"test", "paired_approximate_randomization"},
         {"p_value", s.p_value},
         {"observed_delta_macro_f1", s.observed_delta},
         {"iterations", s.iterations},
         {"n", s.n}};
}

void to_json(json& j, const GenerationStats& g) {
    j = {{"pairs", g.pairs},
         {"facts", g.facts},
         {"avg_facts_per_pair", g.avg_facts_per_pair},
         {"pct_empty_pairs", g.pct_empty_pairs},
         {"avg_fact_length_tokens", g.avg_fact_length_tokens},
         {"important_ratio", g.important_ratio ? json(*g.important_ratio) : json(nullptr)}};
}

std::string render_table(std::span<const TableRow> rows) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
        return std::string(buf);
    };
    std::size_t w0 = std::string("Strategy").size(), w1 = 5, w2 = 9;
    for (const auto& r : rows) {
        w0 = std::max(w0, r.strategy.size());
        w1 = std::max(w1, cell(r.f1).size());
        w2 = std::max(w2, cell(r.f1_wo_nei).size());
    }
    auto line = [&](const std::string& a, const std::string& b, const std::string& c) {
        std::string s = a + std::string(w0 - a.size() + 2, ' ');
        s += std::string(w1 - b.size(), ' ') + b + "  ";
        s += std::string(w2 - c.size(), ' ') + c + "\n";
        return s;
    };
    std::string out = line("Strategy", "F1", "F1 wo-NEI");
    out += std::string(w0 + 2 + w1 + 2 + w2, '-') + "\n";
    for (const auto& r : rows) out += line(r.strategy, cell(r.f1), cell(r.f1_wo_nei));
    return out;
}

}  // namespace factdetect
