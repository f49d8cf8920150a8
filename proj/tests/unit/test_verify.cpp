#include <doctest.h>

#include "factdetect/errors.hpp"
#include "factdetect/verify.hpp"
#include "golden_inputs.hpp"
#include "support.hpp"

using namespace factdetect;

namespace {

struct Harness {
    Harness(std::vector<ScriptedBackend::Rule> rules, StrategyConfig cfg)
        : backend(std::make_shared<ScriptedBackend>(std::unordered_map<std::string, std::string>{}, std::move(rules),
                                                    true)),
          gateway(backend, std::make_shared<ResponseCache>()),
          verifier(gateway, TemplateSet::builtin(), cfg, &diag) {}

    std::shared_ptr<ScriptedBackend> backend;
    LlmGateway gateway;
    Diagnostics diag;
    Verifier verifier;
};

StrategyConfig config(Strategy s, int shots = 0) {
    StrategyConfig c;
    c.strategy = s;
    c.shots = shots;
    c.model = "m";
    return c;
}

bool is(const PredictedLabel& l, Verdict v) { return std::holds_alternative<Verdict>(l) && std::get<Verdict>(l) == v; }

}  // namespace

TEST_CASE("golden prompts") {
    for (auto s : {Strategy::Vanilla, Strategy::Cot, Strategy::Direct, Strategy::AugFactDetect}) {
        CAPTURE(to_string(s));
        CHECK(golden::check(s) == "");
    }
    auto cot = golden::render(Strategy::Cot);
    CHECK(cot.find("Let's think step by step") != std::string::npos);
    auto aug = golden::render(Strategy::AugFactDetect);
    for (auto heading : {"Relevant Facts:", "Explanation:", "Verdict:", "1. ", "2. "})
        CHECK(aug.find(heading) != std::string::npos);
}

TEST_CASE("prompt rendering rules") {
    const auto& pair = golden::pair();
    auto tmpl = TemplateSet::builtin();

    auto zero = build_prompt(pair, nullptr, config(Strategy::Vanilla), tmpl);
    CHECK(zero.text.find("Claim: " + pair.claim) != std::string::npos);
    CHECK(zero.text.find("Verdict: Supported\n") == std::string::npos);  // no exemplars at k=0

    auto five = build_prompt(pair, nullptr, config(Strategy::Vanilla, 5), tmpl);
    CHECK(five.text.size() > zero.text.size());
    CHECK(build_prompt(pair, nullptr, config(Strategy::Vanilla, 5), tmpl).text == five.text);

    std::vector<ShortFact> none;
    auto fallback = build_prompt(pair, &none, config(Strategy::AugFactDetect), tmpl);
    CHECK(fallback.fallback);
    CHECK(fallback.text == zero.text);

    auto direct_empty = build_prompt(pair, &none, config(Strategy::Direct), tmpl);
    CHECK_FALSE(direct_empty.fallback);
    CHECK(direct_empty.text.find("(none)") != std::string::npos);

    CHECK_THROWS_AS(build_prompt(pair, nullptr, config(Strategy::AugFactDetect), tmpl), DataError);

    auto important = config(Strategy::AugFactDetect);
    important.important_only = true;
    auto filtered = build_prompt(pair, &golden::facts(), important, tmpl);
    REQUIRE(filtered.offered_facts.size() == 1);
    CHECK(filtered.offered_facts[0] == golden::facts()[1].text);

    auto too_many = config(Strategy::Vanilla, 50);
    CHECK_THROWS_AS(build_prompt(pair, nullptr, too_many, tmpl), ConfigError);

    auto factuality = config(Strategy::Vanilla, 2);
    factuality.factuality_mode = true;
    auto fp = build_prompt(pair, nullptr, factuality, tmpl).text;
    CHECK(fp.find("Statement: " + pair.claim) != std::string::npos);
    CHECK(fp.find("Document: ") != std::string::npos);
    CHECK(fp.find("Verdict: Not Enough Info") == std::string::npos);

    auto binary = config(Strategy::Vanilla, 5);
    binary.binary_mode = true;
    CHECK(build_prompt(pair, nullptr, binary, tmpl).text.find("Not Enough Info\n\n") == std::string::npos);

    auto both = config(Strategy::Vanilla);
    both.binary_mode = both.factuality_mode = true;
    CHECK_THROWS_AS(both.validate(), ConfigError);
}

TEST_CASE("parse_verdict") {
    SUBCASE("fact-selection shape") {
        auto p = parse_verdict(
            "Relevant Facts: [fact-a, fact-b]\nExplanation: Both facts back the claim.\nVerdict: Supported", false);
        CHECK(p.parse_ok);
        CHECK(is(p.verdict, Verdict::Supported));
        CHECK(p.relevant_facts == std::vector<std::string>{"fact-a", "fact-b"});
        CHECK(p.explanation == "Both facts back the claim.");
    }
    SUBCASE("reasoning shape") {
        auto p = parse_verdict("The evidence reports the opposite and contradicts the claim.\nVerdict: Contradicted",
                               false);
        CHECK(p.parse_ok);
        CHECK(is(p.verdict, Verdict::Contradicted));
    }
    SUBCASE("unparseable") {
        auto p = parse_verdict("As an AI I cannot decide.", false);
        CHECK_FALSE(p.parse_ok);
        CHECK(is(p.verdict, Verdict::Nei));
        CHECK(p.relevant_facts.empty());
        CHECK_FALSE(p.explanation);
    }
    SUBCASE("last verdict line wins; markdown and next-line values") {
        CHECK(is(parse_verdict("Verdict: Supported\nVerdict: Refuted", false).verdict, Verdict::Contradicted));
        CHECK(is(parse_verdict("**Verdict**: Not enough info", false).verdict, Verdict::Nei));
        CHECK(is(parse_verdict("Final verdict:\n\nSUPPORTED", false).verdict, Verdict::Supported));
        CHECK(is(parse_verdict("verdict : NEI", false).verdict, Verdict::Nei));
        CHECK_FALSE(parse_verdict("Verdict: unclear", false).parse_ok);
    }
    SUBCASE("factuality") {
        auto yes = parse_verdict("Verdict: Yes, it follows.", true);
        CHECK(yes.parse_ok);
        CHECK(std::get<BinaryAnswer>(yes.verdict) == BinaryAnswer::Yes);
        auto no = parse_verdict("Verdict: No.", true);
        CHECK(std::get<BinaryAnswer>(no.verdict) == BinaryAnswer::No);
        auto bad = parse_verdict("nothing", true);
        CHECK_FALSE(bad.parse_ok);
        CHECK(std::get<BinaryAnswer>(bad.verdict) == BinaryAnswer::No);
    }
    SUBCASE("sentence-separated fact lists keep inner commas") {
        auto p = parse_verdict("Relevant Facts: [Walking, done daily, helps., Pressure fell.]\nVerdict: Supported",
                               false);
        CHECK(p.relevant_facts == std::vector<std::string>{"Walking, done daily, helps.", "Pressure fell."});
    }
    SUBCASE("facts listed on following lines") {
        auto p = parse_verdict("Relevant Facts:\n1. First.\n2. Second.\nExplanation: x\nVerdict: Supported", false);
        CHECK(p.relevant_facts == std::vector<std::string>{"First.", "Second."});
    }
}

TEST_CASE("verify_pair") {
    const auto& pair = golden::pair();
    SUBCASE("supported answer") {
        Harness h({{{"Claim: " + pair.claim}, "Verdict: Supported"}}, config(Strategy::Vanilla));
        auto p = h.verifier.verify_pair(pair, nullptr, 1);
        CHECK(p.parse_ok);
        CHECK(is(p.verdict, Verdict::Supported));
        CHECK(p.raw == "Verdict: Supported");
        CHECK(p.strategy == Strategy::Vanilla);
    }
    SUBCASE("empty facts fall back") {
        Harness h({{{"Claim: "}, "Verdict: Supported"}}, config(Strategy::AugFactDetect));
        std::vector<ShortFact> none;
        auto p = h.verifier.verify_pair(pair, &none, 1);
        CHECK(p.fallback);
    }
    SUBCASE("binary mode coerces NEI") {
        auto cfg = config(Strategy::Vanilla);
        cfg.binary_mode = true;
        Harness h({{{"Claim: "}, "Verdict: NEI"}}, cfg);
        auto p = h.verifier.verify_pair(pair, nullptr, 1);
        CHECK(p.parse_ok);
        CHECK(is(p.verdict, Verdict::Contradicted));
        CHECK(h.diag.get("nei_coerced") == 1);
    }
    SUBCASE("numeric references resolve and unknown facts are flagged") {
        Harness h({{{"Claim: "}, "Relevant Facts: [2, Something invented.]\nVerdict: Supported"}},
                  config(Strategy::AugFactDetect));
        auto p = h.verifier.verify_pair(pair, &golden::facts(), 1);
        REQUIRE(p.relevant_facts.size() == 2);
        CHECK(p.relevant_facts[0] == golden::facts()[1].text);
        CHECK(h.diag.get("hallucinated_fact") == 1);
    }
    SUBCASE("parse failure is counted; retry uses its own namespace") {
        auto cfg = config(Strategy::Vanilla);
        cfg.retry_unparseable = true;
        Harness h({{{"Claim: "}, "no idea"}}, cfg);
        auto p = h.verifier.verify_pair(pair, nullptr, 1);
        CHECK_FALSE(p.parse_ok);
        CHECK(h.diag.get("parse_failure") == 1);
        CHECK(h.backend->calls() == 2);
    }
}

TEST_CASE("verify_dataset ordering and runs") {
    std::vector<ClaimEvidencePair> pairs{{"a", "first claim", "e1", std::nullopt, Verdict::Supported, ""},
                                         {"b", "second claim", "e2", std::nullopt, Verdict::Nei, ""}};
    Harness h({{{"Claim: first claim"}, "Verdict: Supported"}, {{"Claim: second claim"}, "Verdict: Contradicted"}},
              config(Strategy::Vanilla));
    std::vector<Prediction> flushed;
    auto preds = h.verifier.verify_dataset(pairs, nullptr, 3, 4, [&](std::span<const Prediction> c) {
        flushed.insert(flushed.end(), c.begin(), c.end());
    }, 4);
    REQUIRE(preds.size() == 6);
    CHECK(flushed == preds);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        CHECK(preds[i].run == int(i / 2) + 1);
        CHECK(preds[i].pair_id == pairs[i % 2].id);
    }
    CHECK(preds[0].verdict == preds[2].verdict);
    CHECK(preds[1].verdict == preds[5].verdict);

    Harness aug({{{"Claim: "}, "Verdict: Supported"}}, config(Strategy::AugFactDetect));
    FactsById facts{{"a", {}}};
    CHECK_THROWS_WITH_AS(aug.verifier.verify_dataset(pairs, &facts, 1, 1), doctest::Contains("b"), DataError);
}
