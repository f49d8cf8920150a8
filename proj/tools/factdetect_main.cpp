#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "factdetect/app.hpp"
#include "factdetect/config.hpp"

using namespace factdetect;

namespace {

// Collects "--flag value" options as config settings, applied after file and env.
struct Settings {
    std::vector<std::pair<std::string, std::string>> values;

    void option(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        app.add_option_function<std::string>(
            flag, [this, key](const std::string& v) { values.emplace_back(key, v); }, help);
    }
    void flag(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        app.add_flag_function(
            flag, [this, key](std::int64_t) { values.emplace_back(key, "true"); }, help);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Claim verification with generated short facts"};
    app.require_subcommand(1);

    Settings settings;
    std::optional<std::string> config_file;
    app.add_option("--config", config_file, "Config file (sections of key = value)");
    settings.option(app, "--endpoint", "llm.endpoint", "OpenAI-compatible base URL");
    settings.option(app, "--model", "llm.model", "Chat model name");
    settings.option(app, "--temperature", "llm.temperature", "Sampling temperature");
    settings.option(app, "--embed-endpoint", "embed.endpoint", "Embeddings base URL");
    settings.option(app, "--embed-model", "embed.model", "Embedding model name");
    settings.option(app, "--embed-overrides", "embed.overrides", "Fixture embedding overrides (JSONL)");
    settings.option(app, "--cache-dir", "run.cache_dir", "Response cache directory (empty disables)");
    settings.option(app, "--template-dir", "run.template_dir", "Prompt template directory");
    settings.option(app, "--parallelism", "run.parallelism", "Concurrent requests");
    settings.option(app, "--seed", "run.seed", "Seed for sampling and significance tests");
    settings.option(app, "--scripted", "run.scripted", "Offline scripted backend fixture (JSONL)");
    settings.flag(app, "--scripted-lenient", "run.scripted_lenient", "Unmatched scripted prompts return empty text");
    settings.option(app, "--format", "data.format", "Dataset format: normalized, scifact, healthver");
    settings.option(app, "--corpus", "data.corpus", "SciFact corpus file");

    std::string dataset, out, facts, predictions;
    std::optional<std::string> opt_facts, opt_out, compare;
    bool direct = false, wo_nei = false;
    std::string sep = "</s>", sep_fact = "[FACT]";
    std::size_t per_class = 15;
    std::string strategies;

    auto* gen = app.add_subcommand("generate", "Generate short facts for every pair");
    gen->add_option("--dataset", dataset, "Dataset file")->required();
    gen->add_option("--out", out, "Facts output (JSONL)")->required();
    gen->add_flag("--direct", direct, "Generate sentences straight from the evidence");
    settings.option(*gen, "--max-answer-pairs", "factgen.max_answer_pairs", "Answer pairs kept per pair");

    auto* lab = app.add_subcommand("label", "Weak-label facts by embedding similarity");
    lab->add_option("--facts", facts, "Facts file")->required();
    lab->add_option("--dataset", dataset, "Dataset file")->required();
    lab->add_option("--out", out, "Labeled facts output")->required();
    settings.option(*lab, "--gamma", "label.gamma", "Similarity weight");
    settings.option(*lab, "--threshold", "label.threshold", "Importance threshold");

    auto add_verify_options = [&](CLI::App* sub) {
        settings.option(*sub, "--strategy", "verify.strategy", "vanilla, cot, direct or augfactdetect");
        settings.option(*sub, "--shots", "verify.shots", "Few-shot exemplars");
        settings.option(*sub, "--runs", "verify.runs", "Repeated runs");
        settings.option(*sub, "--exemplars", "verify.exemplar_set", "Exemplar set id or file");
        settings.flag(*sub, "--binary", "verify.binary", "Supported/Contradicted only");
        settings.flag(*sub, "--factuality", "verify.factuality", "Yes/No statement inference");
        settings.flag(*sub, "--important-only", "verify.important_only", "Offer only important facts");
        settings.flag(*sub, "--retry-unparseable", "verify.retry_unparseable", "Re-ask once on unparseable output");
    };

    auto* ver = app.add_subcommand("verify", "Predict verdicts");
    ver->add_option("--dataset", dataset, "Dataset file")->required();
    ver->add_option("--facts", opt_facts, "Facts file (augfactdetect, direct)");
    ver->add_option("--out", out, "Predictions output")->required();
    add_verify_options(ver);

    auto* ev = app.add_subcommand("eval", "Score predictions");
    ev->add_option("--predictions", predictions, "Predictions file")->required();
    ev->add_option("--dataset", dataset, "Dataset file")->required();
    ev->add_option("--out", opt_out, "Report output");
    ev->add_flag("--wo-nei", wo_nei, "Drop pairs with gold NEI");
    ev->add_option("--compare", compare, "Second predictions file for a significance test");
    settings.option(*ev, "--iterations", "eval.iterations", "Randomization iterations");
    settings.flag(*ev, "--include-absent-classes", "eval.include_absent_classes",
                  "Count gold-absent classes in the macro average");

    auto* ext = app.add_subcommand("export-training", "Write classifier training records");
    ext->add_option("--dataset", dataset, "Dataset file")->required();
    ext->add_option("--facts", facts, "Labeled facts file")->required();
    ext->add_option("--out", out, "Output (JSONL)")->required();
    ext->add_option("--sep", sep, "Segment separator");
    ext->add_option("--sep-fact", sep_fact, "Fact separator");

    auto* exa = app.add_subcommand("export-annotation", "Write a human annotation sample (CSV)");
    exa->add_option("--dataset", dataset, "Dataset file")->required();
    exa->add_option("--facts", facts, "Labeled facts file")->required();
    exa->add_option("--out", out, "Output (CSV)")->required();
    exa->add_option("--per-class", per_class, "Pairs sampled per verdict");

    auto* all = app.add_subcommand("run-all", "Generate, label, verify and evaluate");
    all->add_option("--dataset", dataset, "Dataset file")->required();
    all->add_option("--out-dir", out, "Output directory")->required();
    all->add_option("--strategies", strategies, "Comma-separated strategies (default: --strategy)");
    add_verify_options(all);
    settings.option(*all, "--gamma", "label.gamma", "Similarity weight");
    settings.option(*all, "--threshold", "label.threshold", "Importance threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    Io io{std::cout, std::cerr};
    return run_guarded(
        [&] {
            std::optional<std::filesystem::path> file;
            if (config_file) file = *config_file;
            Runtime rt(resolve_config(file, settings.values));
            if (*gen) {
                cmd_generate(rt, {dataset, out, direct}, io);
            } else if (*lab) {
                cmd_label(rt, {facts, dataset, out}, io);
            } else if (*ver) {
                VerifyArgs a{dataset, std::nullopt, out};
                if (opt_facts) a.facts = *opt_facts;
                cmd_verify(rt, a, io);
            } else if (*ev) {
                EvalArgs a{predictions, dataset, std::nullopt, wo_nei, std::nullopt};
                if (opt_out) a.out = *opt_out;
                if (compare) a.compare = *compare;
                cmd_eval(rt, a, io);
            } else if (*ext) {
                cmd_export_training(rt, {dataset, facts, out, sep, sep_fact}, io);
            } else if (*exa) {
                cmd_export_annotation(rt, {dataset, facts, out, per_class}, io);
            } else if (*all) {
                RunAllArgs a{dataset, out, {}};
                std::stringstream ss(strategies);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) a.strategies.push_back(parse_strategy(item));
                cmd_run_all(rt, a, io);
            }
        },
        std::cerr);
}
