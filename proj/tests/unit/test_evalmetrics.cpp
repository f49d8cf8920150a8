#include <doctest.h>

#include "factdetect/errors.hpp"
#include "factdetect/evalmetrics.hpp"

using namespace factdetect;

namespace {

constexpr auto S = Verdict::Supported;
constexpr auto C = Verdict::Contradicted;
constexpr auto N = Verdict::Nei;

struct Case {
    std::vector<Prediction> preds;
    GoldMap golds;
};

Case make(const std::vector<Verdict>& pred, const std::vector<Verdict>& gold, int run = 1) {
    Case c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        Prediction p;
        p.pair_id = "p" + std::to_string(i);
        p.verdict = pred[i];
        p.run = run;
        c.preds.push_back(p);
        c.golds[p.pair_id] = gold[i];
    }
    return c;
}

}  // namespace

TEST_CASE("worked example: S,S,C against S,C,C") {
    auto c = make({S, S, C}, {S, C, C});
    auto r = score(c.preds, c.golds);
    REQUIRE(r.runs.size() == 1);
    const auto& m = r.runs[0];
    // Hand computation: S has TP=1 FP=1 FN=0; C has TP=1 FP=0 FN=1; NEI absent from gold.
    CHECK(m.per_class[0].precision == doctest::Approx(0.5));
    CHECK(m.per_class[0].recall == doctest::Approx(1.0));
    CHECK(m.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.per_class[1].precision == doctest::Approx(1.0));
    CHECK(m.per_class[1].recall == doctest::Approx(0.5));
    CHECK_FALSE(m.per_class[2].in_macro);
    CHECK(std::abs(m.macro_f1 - 0.6667) < 1e-4);
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("gold-absent classes can be counted in the macro") {
    auto c = make({S, S, C}, {S, C, C});
    auto r = score(c.preds, c.golds, {false, true});
    CHECK(r.runs[0].macro_f1 == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("perfect predictions") {
    auto c = make({S, C, N, S}, {S, C, N, S});
    auto r = score(c.preds, c.golds);
    CHECK(r.runs[0].macro_f1 == 1.0);
    CHECK(r.runs[0].accuracy == 1.0);
}

TEST_CASE("wo_nei errors") {
    auto c = make({S, C}, {N, N});
    CHECK_THROWS_WITH_AS(score(c.preds, c.golds, {true, false}), "empty evaluation set", DataError);
    auto unknown = make({S}, {S});
    unknown.preds[0].pair_id = "nope";
    CHECK_THROWS_WITH_AS(score(unknown.preds, unknown.golds), doctest::Contains("nope"), DataError);
}

TEST_CASE("runs are scored separately and aggregated") {
    auto r1 = make({S, C}, {S, C}, 1);
    auto r2 = make({S, S}, {S, C}, 2);
    std::vector<Prediction> all = r1.preds;
    all.insert(all.end(), r2.preds.begin(), r2.preds.end());
    auto r = score(all, r1.golds);
    REQUIRE(r.runs.size() == 2);
    CHECK(r.aggregate.at("macro_f1").values.size() == 2);
    CHECK(r.aggregate.at("accuracy").mean == doctest::Approx(0.75));
}

TEST_CASE("aggregate_values") {
    std::vector<double> runs{0.70, 0.72, 0.74, 0.76, 0.78};
    auto a = aggregate_values(runs);
    // Recomputed by hand: squared deviations sum to 0.004, / 4 = 0.001.
    CHECK(a.mean == doctest::Approx(0.74));
    CHECK(a.std == doctest::Approx(std::sqrt(0.001)));
    CHECK(std::abs(a.std - 0.0316) < 1e-4);
    CHECK(aggregate_values(std::vector<double>{0.5}).std == 0.0);
    CHECK(aggregate_values(std::vector<double>{0.5, 0.5, 0.5}).std == 0.0);
}

TEST_CASE("auc") {
    CHECK(auc(std::vector<double>{0.9, 0.8, 0.3}, {true, false, false}) == 1.0);
    CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, {true, false, true, false}) == 0.5);
    CHECK(auc(std::vector<double>{0.1, 0.9}, {true, false}) == 0.0);
    // Brute force over positive/negative pairs: (1 + 0.5 + 1 + 1) / 4.
    CHECK(auc(std::vector<double>{0.8, 0.4, 0.4, 0.1}, {true, true, false, false}) == doctest::Approx(0.875));
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, {true, true}), DataError);
}

TEST_CASE("factuality scoring maps gold to yes/no and reports auc") {
    std::vector<Prediction> preds(4);
    GoldMap golds;
    std::vector<BinaryAnswer> answers{BinaryAnswer::Yes, BinaryAnswer::No, BinaryAnswer::No, BinaryAnswer::Yes};
    std::vector<Verdict> gold{S, C, N, C};
    for (int i = 0; i < 4; ++i) {
        preds[i].pair_id = "f" + std::to_string(i);
        preds[i].verdict = answers[i];
        golds[preds[i].pair_id] = gold[i];
    }
    auto r = score(preds, golds);
    CHECK(r.space == LabelSpace::Factuality);
    CHECK(r.runs[0].accuracy == doctest::Approx(0.75));
    REQUIRE(r.runs[0].auc);
    CHECK(*r.runs[0].auc == doctest::Approx((1.0 + 0.5 * 0 + 1.0 + 0.5) / 3.0));
}

TEST_CASE("significance") {
    std::vector<Verdict> gold, right, wrong;
    for (int i = 0; i < 100; ++i) {
        auto g = i % 2 ? S : C;
        gold.push_back(g);
        right.push_back(g);
        wrong.push_back(g == S ? C : S);
    }
    auto a = make(right, gold), b = make(wrong, gold);
    SignificanceOptions opts;
    opts.seed = 5;
    CHECK(significance(a.preds, a.preds, a.golds, opts).p_value == 1.0);

    auto r = significance(a.preds, b.preds, a.golds, opts);
    CHECK(r.observed_delta == doctest::Approx(1.0));
    CHECK(r.p_value <= 0.001);
    CHECK(significance(a.preds, b.preds, a.golds, opts).p_value == r.p_value);
    CHECK(significance(b.preds, a.preds, a.golds, opts).p_value == r.p_value);

    auto shorter = b.preds;
    shorter.pop_back();
    CHECK_THROWS_AS(significance(a.preds, shorter, a.golds, opts), DataError);
}

TEST_CASE("p_value_from") {
    std::vector<double> deltas{0.1, -0.3, 0.2, 0.0};
    CHECK(p_value_from(deltas, 0.2) == doctest::Approx(3.0 / 5.0));
    CHECK(p_value_from(deltas, -0.2) == doctest::Approx(3.0 / 5.0));
    CHECK(p_value_from(deltas, 0.0) == 1.0);
    CHECK(p_value_from(deltas, 0.5) == doctest::Approx(1.0 / 5.0));
    // Monotone: a larger observed gap never raises p.
    CHECK(p_value_from(deltas, 0.25) <= p_value_from(deltas, 0.15));
}

TEST_CASE("generation_stats") {
    std::vector<PairFacts> facts(3);
    facts[0].facts.resize(2);
    facts[2].facts.resize(4);
    for (auto& pf : facts)
        for (auto& f : pf.facts) f.text = "one two three";
    auto g = generation_stats(facts);
    CHECK(g.avg_facts_per_pair == doctest::Approx(2.0));
    CHECK(g.pct_empty_pairs == doctest::Approx(1.0 / 3.0));
    CHECK(g.avg_fact_length_tokens == doctest::Approx(3.0));
    CHECK_FALSE(g.important_ratio);

    facts[0].facts[0].label = FactLabel::Important;
    facts[0].facts[1].label = FactLabel::NotImportant;
    CHECK(*generation_stats(facts).important_ratio == doctest::Approx(0.5));

    std::vector<PairFacts> empty(2);
    auto e = generation_stats(empty);
    CHECK(e.avg_facts_per_pair == 0.0);
    CHECK(json(e)["important_ratio"].is_null());
}

TEST_CASE("table rendering") {
    std::vector<TableRow> rows{{"vanilla", 0.673, 0.7}, {"augfactdetect", 0.76, std::nullopt}};
    auto t = render_table(rows);
    CHECK(t.find("67.3") != std::string::npos);
    CHECK(t.find("augfactdetect") != std::string::npos);
    CHECK(t.find(" -\n") != std::string::npos);
}
