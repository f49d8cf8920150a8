#include <doctest.h>

#include <map>
#include <sstream>

#include "factdetect/app.hpp"
#include "factdetect/config.hpp"
#include "factdetect/errors.hpp"
#include "support.hpp"

using namespace factdetect;
using testsupport::TempDir;

namespace {

std::filesystem::path toy(const std::string& name) { return testsupport::data_dir() / "data" / "toy" / name; }

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars](const char* name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

RunConfig toy_config(const TempDir& dir) {
    RunConfig cfg;
    cfg.scripted = toy("fixture.jsonl");
    cfg.cache_dir = dir / "cache";
    cfg.parallelism = 2;
    cfg.api_key = "sk-never-written";
    cfg.retry_base_ms = 0;
    return cfg;
}

struct Captured {
    std::ostringstream out, err;
    Io io() { return {out, err}; }
};

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

ShortFact fact(const std::string& text, std::optional<FactLabel> label) {
    ShortFact f;
    f.text = text;
    f.label = label;
    if (label) f.sim = *label == FactLabel::Important ? 0.9 : 0.1;
    return f;
}

void write_pairs(const std::filesystem::path& p, const std::vector<ClaimEvidencePair>& pairs) {
    std::vector<json> lines(pairs.begin(), pairs.end());
    write_jsonl(p, lines);
}

void write_facts(const std::filesystem::path& p, const std::vector<PairFacts>& facts) {
    std::vector<json> lines(facts.begin(), facts.end());
    write_jsonl(p, lines);
}

}  // namespace

TEST_CASE("config precedence: cli over env over file over defaults") {
    TempDir dir;
    testsupport::write_file(dir / "f.ini",
                            "[llm]\nmodel = file-model\nendpoint = \"http://file/v1\"\n[label]\ngamma = 0.3\n");
    auto env = env_of({{"FACTDETECT_ENDPOINT", "http://env/v1"}, {"FACTDETECT_API_KEY", "sk-secret"}});

    auto cfg = resolve_config(dir / "f.ini", {{"llm.model", "cli-model"}}, env);
    CHECK(cfg.model == "cli-model");
    CHECK(cfg.endpoint == "http://env/v1");
    CHECK(cfg.label.gamma == 0.3);
    CHECK(cfg.label.threshold == 0.6);
    CHECK(cfg.api_key == "sk-secret");
    CHECK(cfg.to_json().dump().find("sk-secret") == std::string::npos);

    auto cli_wins = resolve_config(dir / "f.ini", {{"llm.endpoint", "http://cli/v1"}}, env);
    CHECK(cli_wins.endpoint == "http://cli/v1");

    auto defaults = resolve_config(std::nullopt, {}, env_of({}));
    CHECK(defaults.model == "gpt-3.5-turbo");
    CHECK(defaults.verify.shots == 5);
    CHECK(defaults.pipeline_config().model == "gpt-3.5-turbo");
}

TEST_CASE("bad settings are config errors") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_setting(cfg, "llm.nope", "x"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "label.gamma", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "verify.strategy", "magic"), ConfigError);
    TempDir dir;
    testsupport::write_file(dir / "bad.ini", "[llm]\nmystery = 1\n");
    CHECK_THROWS_AS(resolve_config(dir / "bad.ini", {}, env_of({})), ConfigError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"run.parallelism", "0"}}, env_of({})), ConfigError);
    for (const auto& key : setting_keys()) CHECK(key.find('.') != std::string::npos);
}

TEST_CASE("run_guarded exit codes") {
    std::ostringstream err;
    CHECK(run_guarded([] {}, err) == kExitOk);
    CHECK(run_guarded([] { throw ConfigError("bad flag"); }, err) == kExitUsage);
    CHECK(run_guarded([] { throw DataError("bad file"); }, err) == kExitRuntime);
    CHECK(err.str().find("error: bad file") != std::string::npos);
}

TEST_CASE("generate, label and verify on the toy set") {
    TempDir dir;
    Runtime rt(toy_config(dir));
    Captured c;

    cmd_generate(rt, {toy("pairs.jsonl"), dir / "facts.jsonl", false}, c.io());
    auto facts_file = read_jsonl(dir / "facts.jsonl");
    REQUIRE(facts_file.metadata);
    CHECK((*facts_file.metadata)["kind"] == "facts");
    CHECK(facts_file.records.size() == 10);
    CHECK(testsupport::read_file(dir / "facts.jsonl").find("sk-never-written") == std::string::npos);
    CHECK(std::filesystem::exists(dir / "facts.jsonl.summary.json"));
    for (const auto& r : facts_file.records)
        for (const auto& f : r["facts"]) CHECK_FALSE(f["question"].get<std::string>().empty());

    cmd_generate(rt, {toy("pairs.jsonl"), dir / "direct.jsonl", true}, c.io());
    for (const auto& r : read_jsonl(dir / "direct.jsonl").records)
        for (const auto& f : r["facts"]) CHECK(f["question"].get<std::string>().empty());

    cmd_label(rt, {dir / "facts.jsonl", toy("pairs.jsonl"), dir / "labeled.jsonl"}, c.io());
    auto labeled = read_jsonl(dir / "labeled.jsonl");
    CHECK((*labeled.metadata)["config"]["args"]["gamma"] == 0.5);
    CHECK((*labeled.metadata)["config"]["args"]["threshold"] == 0.6);
    for (const auto& r : labeled.records)
        for (const auto& f : r["facts"]) CHECK(f["label"].is_string());

    cmd_verify(rt, {toy("pairs.jsonl"), std::nullopt, dir / "vanilla.jsonl"}, c.io());
    auto preds = read_jsonl(dir / "vanilla.jsonl");
    CHECK(preds.records.size() == 10);
    CHECK(preds.records[0]["pair_id"] == "t01");
}

TEST_CASE("label threshold above any score marks everything not important") {
    TempDir dir;
    auto cfg = toy_config(dir);
    Runtime gen_rt(cfg);
    Captured c;
    cmd_generate(gen_rt, {toy("pairs.jsonl"), dir / "facts.jsonl", true}, c.io());

    cfg.label.threshold = 2.1;
    Runtime rt(cfg);
    cmd_label(rt, {dir / "facts.jsonl", toy("pairs.jsonl"), dir / "labeled.jsonl"}, c.io());
    std::size_t n = 0;
    for (const auto& r : read_jsonl(dir / "labeled.jsonl").records)
        for (const auto& f : r["facts"]) {
            CHECK(f["label"] == "not_important");
            ++n;
        }
    CHECK(n > 0);
}

TEST_CASE("label rejects facts for an unknown pair") {
    TempDir dir;
    Runtime rt(toy_config(dir));
    write_facts(dir / "facts.jsonl", {{"zz9", {fact("Something.", std::nullopt)}}});
    std::ostringstream out, err;
    int code = run_guarded([&] { cmd_label(rt, {dir / "facts.jsonl", toy("pairs.jsonl"), dir / "l.jsonl"}, {out, err}); },
                           err);
    CHECK(code == kExitRuntime);
    CHECK(err.str().find("zz9") != std::string::npos);
}

TEST_CASE("strict fixture miss exits 1 and names the pair") {
    TempDir dir;
    testsupport::write_file(dir / "fixture.jsonl",
                            R"({"match": {"user_contains": ["Break the evidence", "daily vitamin D"]}, "response": "- A."})"
                            "\n");
    auto cfg = toy_config(dir);
    cfg.scripted = dir / "fixture.jsonl";
    cfg.parallelism = 1;
    Runtime rt(cfg);
    std::ostringstream out, err;
    int code = run_guarded([&] { cmd_generate(rt, {toy("pairs.jsonl"), dir / "f.jsonl", true}, {out, err}); }, err);
    CHECK(code == kExitRuntime);
    CHECK(err.str().find("t02") != std::string::npos);
    // The finished pair is already on disk.
    CHECK(read_jsonl(dir / "f.jsonl").records.size() == 1);

    cfg.scripted_lenient = true;
    cfg.cache_dir.clear();
    Runtime lenient(cfg);
    CHECK(run_guarded([&] { cmd_generate(lenient, {toy("pairs.jsonl"), dir / "g.jsonl", true}, {out, err}); }, err) ==
          kExitOk);
}

TEST_CASE("export-training") {
    TempDir dir;
    std::vector<ClaimEvidencePair> pairs{{"a", "Claim A.", "Evidence A.", "Title A", Verdict::Supported, "x"},
                                         {"b", "Claim B.", "Evidence B.", std::nullopt, Verdict::Contradicted, "x"}};
    write_pairs(dir / "pairs.jsonl", pairs);
    write_facts(dir / "facts.jsonl", {{"a", {fact("One.", FactLabel::Important), fact("Two.", FactLabel::NotImportant)}},
                                      {"b", {}}});
    Runtime rt(toy_config(dir));
    Captured c;

    cmd_export_training(rt, {dir / "pairs.jsonl", dir / "facts.jsonl", dir / "train.jsonl"}, c.io());
    auto recs = read_jsonl(dir / "train.jsonl").records;
    REQUIRE(recs.size() == 2);
    CHECK(recs[0]["fact_labels"] == json::array({1, 0}));
    CHECK(recs[0]["text"] == "Claim A. </s> Title A </s> Evidence A. [FACT] One. [FACT] Two.");
    CHECK(recs[0]["verdict"] == "SUPPORT");
    CHECK(recs[1]["fact_labels"] == json::array());
    CHECK(recs[1]["text"].get<std::string>().find("[FACT]") == std::string::npos);

    ExportTrainingArgs custom{dir / "pairs.jsonl", dir / "facts.jsonl", dir / "t2.jsonl", "<sep>", "<f>"};
    cmd_export_training(rt, custom, c.io());
    auto text = read_jsonl(dir / "t2.jsonl").records[0]["text"].get<std::string>();
    std::size_t count = 0;
    for (auto p = text.find("<f>"); p != std::string::npos; p = text.find("<f>", p + 1)) ++count;
    CHECK(count == 2);

    write_facts(dir / "raw.jsonl", {{"a", {fact("One.", std::nullopt)}}, {"b", {}}});
    CHECK_THROWS_WITH_AS(cmd_export_training(rt, {dir / "pairs.jsonl", dir / "raw.jsonl", dir / "t3.jsonl"}, c.io()),
                         doctest::Contains("not labeled"), DataError);
}

TEST_CASE("export-annotation sampling") {
    TempDir dir;
    std::vector<ClaimEvidencePair> pairs;
    std::vector<PairFacts> facts;
    for (int i = 0; i < 60; ++i) {
        auto id = "p" + std::to_string(i);
        Verdict gold = i % 3 == 0 ? Verdict::Supported : i % 3 == 1 ? Verdict::Contradicted : Verdict::Nei;
        pairs.push_back({id, "Claim " + id + ", with comma.", "Evidence " + id + ".", std::nullopt, gold, "x"});
        facts.push_back({id, {fact("Key " + id + ".", FactLabel::Important), fact("Minor.", FactLabel::NotImportant)}});
    }
    write_pairs(dir / "pairs.jsonl", pairs);
    write_facts(dir / "facts.jsonl", facts);

    auto cfg = toy_config(dir);
    cfg.seed = 11;
    Runtime rt(cfg);
    Captured c;
    auto summary = cmd_export_annotation(rt, {dir / "pairs.jsonl", dir / "facts.jsonl", dir / "a.csv"}, c.io());
    CHECK(summary["sampled_support"] == 15);
    CHECK(summary["sampled_contradict"] == 15);
    auto lines = lines_of(testsupport::read_file(dir / "a.csv"));
    REQUIRE(lines.size() == 3 + 30);
    CHECK(lines[1] == "# sampled SUPPORT 15 of 20, CONTRADICT 15 of 20");
    CHECK(lines[2] == "pair_id,gold,claim,evidence,fact,F,E,C");
    CHECK(lines[3].find("\"Claim ") != std::string::npos);
    CHECK(lines[3].substr(lines[3].size() - 3) == ",,,");

    Runtime again(cfg);
    cmd_export_annotation(again, {dir / "pairs.jsonl", dir / "facts.jsonl", dir / "b.csv"}, c.io());
    auto lines_b = lines_of(testsupport::read_file(dir / "b.csv"));
    CHECK(std::vector<std::string>(lines.begin() + 1, lines.end()) ==
          std::vector<std::string>(lines_b.begin() + 1, lines_b.end()));

    cfg.seed = 12;
    Runtime other(cfg);
    cmd_export_annotation(other, {dir / "pairs.jsonl", dir / "facts.jsonl", dir / "c.csv"}, c.io());
    CHECK(lines_of(testsupport::read_file(dir / "c.csv")) != lines);

    ExportAnnotationArgs wide{dir / "pairs.jsonl", dir / "facts.jsonl", dir / "d.csv", 100};
    auto all = cmd_export_annotation(rt, wide, c.io());
    CHECK(all["sampled_support"] == 20);
    CHECK(all["rows"] == 40);
}

TEST_CASE("export-annotation with no important facts writes only the header") {
    TempDir dir;
    write_pairs(dir / "pairs.jsonl", {{"a", "C.", "E.", std::nullopt, Verdict::Supported, "x"}});
    write_facts(dir / "facts.jsonl", {{"a", {fact("Minor.", FactLabel::NotImportant)}}});
    Runtime rt(toy_config(dir));
    Captured c;
    cmd_export_annotation(rt, {dir / "pairs.jsonl", dir / "facts.jsonl", dir / "a.csv"}, c.io());
    CHECK(lines_of(testsupport::read_file(dir / "a.csv")).size() == 3);
    CHECK(c.err.str().find("warning") != std::string::npos);
}

TEST_CASE("eval with compare adds a significance line") {
    TempDir dir;
    auto cfg = toy_config(dir);
    cfg.significance_iterations = 500;
    Runtime rt(cfg);
    Captured c;
    cmd_verify(rt, {toy("pairs.jsonl"), std::nullopt, dir / "vanilla.jsonl"}, c.io());

    cfg.verify.strategy = Strategy::Cot;
    Runtime cot(cfg);
    cmd_verify(cot, {toy("pairs.jsonl"), std::nullopt, dir / "cot.jsonl"}, c.io());

    EvalArgs args{dir / "cot.jsonl", toy("pairs.jsonl"), dir / "eval.jsonl", false, dir / "vanilla.jsonl"};
    cmd_eval(rt, args, c.io());
    auto recs = read_jsonl(dir / "eval.jsonl").records;
    REQUIRE(recs.size() == 3);
    CHECK(recs[0]["strategy"] == "cot");
    CHECK(recs[1]["strategy"] == "vanilla");
    CHECK(recs[0]["f1"].get<double>() > recs[1]["f1"].get<double>());
    const auto& sig = recs[2]["significance"];
    CHECK(sig["result"]["iterations"] == 500);
    double p = sig["result"]["p_value"];
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(recs[0]["report"]["runs"][0]["per_class"].size() == 3);
}
