#include "factdetect/app.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <ostream>
#include <unordered_map>

#include "factdetect/errors.hpp"
#include "factdetect/evalmetrics.hpp"
#include "factdetect/factgen.hpp"
#include "factdetect/rng.hpp"
#include "factdetect/verify.hpp"
#include "factdetect/weaklabel.hpp"

namespace factdetect {

namespace fs = std::filesystem;

Runtime::Runtime(RunConfig config)
    : config_(std::move(config)),
      cache_(std::make_shared<ResponseCache>(config_.cache_dir.empty() ? std::nullopt
                                                                        : std::optional<fs::path>(config_.cache_dir))),
      templates_(config_.template_dir ? TemplateSet::from_dir(*config_.template_dir) : TemplateSet::builtin()) {
    config_.validate();
}

LlmGateway& Runtime::gateway() {
    if (!gateway_) {
        std::shared_ptr<ChatBackend> backend;
        if (config_.scripted)
            backend = ScriptedBackend::from_file(*config_.scripted, !config_.scripted_lenient);
        else
            backend = std::make_shared<HttpChatBackend>(config_.endpoint, config_.api_key,
                                                        std::chrono::seconds(config_.timeout_s));
        GatewayOptions opts;
        opts.parallelism = config_.parallelism;
        opts.retry.base_delay = std::chrono::milliseconds(config_.retry_base_ms);
        gateway_ = std::make_unique<LlmGateway>(std::move(backend), cache_, opts);
    }
    return *gateway_;
}

Embedder& Runtime::embedder() {
    if (!embedder_) {
        std::shared_ptr<EmbeddingProvider> provider;
        if (config_.embed_endpoint.empty() && config_.scripted) {
            auto fixture = std::make_shared<FixtureEmbeddingProvider>();
            if (config_.embed_overrides) fixture->load_overrides(*config_.embed_overrides);
            provider = std::move(fixture);
        } else {
            auto endpoint = config_.embed_endpoint.empty() ? config_.endpoint : config_.embed_endpoint;
            provider = std::make_shared<RemoteEmbeddingProvider>(endpoint, config_.embed_model, config_.api_key);
        }
        embedder_ = std::make_unique<Embedder>(std::move(provider), cache_, config_.parallelism);
    }
    return *embedder_;
}

json Runtime::stats() const {
    json out = json::object();
    if (gateway_) {
        auto s = gateway_->stats();
        out["gateway"] = {{"backend", to_string(gateway_->backend_kind())},
                          {"requests", s.requests},
                          {"backend_calls", s.backend_calls},
                          {"cache_hits", s.cache_hits},
                          {"retries", s.retries}};
    }
    if (embedder_) {
        auto s = embedder_->stats();
        out["embedder"] = {{"provider", embedder_->provider().name()},
                           {"model", embedder_->provider().model()},
                           {"requests", s.requests},
                           {"provider_calls", s.provider_calls},
                           {"cache_hits", s.cache_hits}};
    }
    out["diagnostics"] = diagnostics_.to_json();
    return out;
}

namespace {

json metadata_for(Runtime& rt, std::string_view kind, std::string_view command, json args) {
    auto cfg = rt.config().to_json();
    cfg["command"] = std::string(command);
    cfg["args"] = std::move(args);
    cfg["templates"] = rt.templates().id();
    return make_metadata(kind, cfg);
}

std::vector<ClaimEvidencePair> load_dataset(const Runtime& rt, const fs::path& path) {
    return load_pairs(path, rt.config().dataset_format, rt.config().load_options());
}

FactsById facts_by_id(std::vector<PairFacts> facts) {
    FactsById out;
    for (auto& pf : facts) {
        auto id = pf.pair_id;
        if (!out.emplace(id, std::move(pf.facts)).second) throw DataError("facts file repeats pair_id '" + id + "'");
    }
    return out;
}

void finish(json& summary, Runtime& rt, Io io) {
    summary.update(rt.stats());
    io.out << summary.dump(2) << '\n';
}

std::vector<Prediction> predictions_from(const JsonlFile& file, const fs::path& path) {
    std::vector<Prediction> out;
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        try {
            out.push_back(file.records[i].get<Prediction>());
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

struct SystemScore {
    json record;
    TableRow row;
};

// Scores one prediction list both with and without gold-NEI pairs; the flagged view is
// the primary report.
SystemScore score_system(const std::vector<Prediction>& preds, const GoldMap& golds, bool wo_nei,
                         bool include_absent, const std::optional<json>& source_meta) {
    if (preds.empty()) throw DataError("empty evaluation set");
    ScoreOptions all{false, include_absent};
    ScoreOptions filtered{true, include_absent};
    auto full = score(preds, golds, all);
    std::optional<EvalReport> without;
    try {
        without = score(preds, golds, filtered);
    } catch (const DataError&) {
        if (wo_nei) throw;
    }
    EvalReport primary = wo_nei ? *without : full;

    const auto& first = preds.front();
    json echo = {{"strategy", to_string(first.strategy)}, {"model", first.model}, {"wo_nei", wo_nei}};
    if (source_meta && source_meta->contains("config")) {
        const auto& c = source_meta->at("config");
        if (c.contains("label")) {
            echo["gamma"] = c["label"]["gamma"];
            echo["threshold"] = c["label"]["threshold"];
        }
        if (c.contains("verify")) echo["shots"] = c["verify"]["shots"];
    }
    primary.echo = echo;

    SystemScore out;
    out.row.strategy = std::string(to_string(first.strategy));
    out.row.f1 = full.aggregate.at("macro_f1").mean;
    if (without) out.row.f1_wo_nei = without->aggregate.at("macro_f1").mean;
    out.record = {{"strategy", out.row.strategy},
                  {"report", primary},
                  {"f1", *out.row.f1},
                  {"f1_wo_nei", out.row.f1_wo_nei ? json(*out.row.f1_wo_nei) : json(nullptr)}};
    return out;
}

std::vector<Prediction> run_one(const std::vector<Prediction>& preds) {
    std::vector<Prediction> out;
    for (const auto& p : preds)
        if (p.run == 1) out.push_back(p);
    return out;
}

json significance_record(const std::vector<Prediction>& a, const std::vector<Prediction>& b, const GoldMap& golds,
                         const RunConfig& cfg, bool wo_nei) {
    SignificanceOptions opts;
    opts.iterations = cfg.significance_iterations;
    opts.seed = cfg.seed;
    opts.wo_nei = wo_nei;
    opts.include_absent_classes = cfg.include_absent_classes;
    auto ra = run_one(a), rb = run_one(b);
    auto result = significance(ra, rb, golds, opts);
    return {{"significance",
             {{"a", to_string(a.front().strategy)}, {"b", to_string(b.front().strategy)}, {"result", result}}}};
}

std::string csv_field(std::string_view s) {
    bool quote = s.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!quote) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

json cmd_generate(Runtime& rt, const GenerateArgs& args, Io io) {
    const auto& cfg = rt.config();
    auto pairs = load_dataset(rt, args.dataset);
    auto meta = metadata_for(rt, "facts", "generate",
                             {{"dataset", args.dataset.string()}, {"generator", args.direct ? "direct" : "pipeline"}});
    write_jsonl(args.out, std::vector<json>{}, meta);

    FactGenerator gen(rt.gateway(), rt.templates(), cfg.pipeline_config(), &rt.diagnostics());
    auto sink = [&](std::span<const PairFacts> chunk) {
        std::vector<json> lines(chunk.begin(), chunk.end());
        append_jsonl(args.out, lines);
    };
    auto facts = gen.generate_dataset(pairs, args.direct, cfg.parallelism, sink);

    json summary = {{"command", "generate"},
                    {"out", args.out.string()},
                    {"pairs", pairs.size()},
                    {"generation", generation_stats(facts)}};
    summary.update(rt.stats());
    auto summary_path = args.out;
    summary_path += ".summary.json";
    std::ofstream(summary_path, std::ios::trunc) << summary.dump(2) << '\n';
    io.out << summary.dump(2) << '\n';
    return summary;
}

json cmd_label(Runtime& rt, const LabelArgs& args, Io io) {
    const auto& cfg = rt.config();
    auto pairs = load_dataset(rt, args.dataset);
    auto facts = load_facts(args.facts);
    auto& embedder = rt.embedder();
    auto labeled = label_dataset(pairs, std::move(facts), cfg.label, embedder, cfg.parallelism);
    auto meta = metadata_for(rt, "labeled_facts", "label",
                             {{"facts", args.facts.string()},
                              {"dataset", args.dataset.string()},
                              {"gamma", cfg.label.gamma},
                              {"threshold", cfg.label.threshold},
                              {"embedding_provider", embedder.provider().name()},
                              {"embedding_model", embedder.provider().model()}});
    write_jsonl(args.out, labeled, meta);
    json summary = {{"command", "label"}, {"out", args.out.string()}, {"generation", generation_stats(labeled)}};
    finish(summary, rt, io);
    return summary;
}

json cmd_verify(Runtime& rt, const VerifyArgs& args, Io io) {
    const auto& cfg = rt.config();
    auto pairs = load_dataset(rt, args.dataset);
    std::optional<FactsById> facts;
    if (args.facts) facts = facts_by_id(load_facts(*args.facts));

    Verifier verifier(rt.gateway(), rt.templates(), cfg.strategy_config(), &rt.diagnostics());
    auto meta = metadata_for(rt, "predictions", "verify",
                             {{"dataset", args.dataset.string()},
                              {"facts", args.facts ? json(args.facts->string()) : json(nullptr)}});
    write_jsonl(args.out, std::vector<json>{}, meta);
    auto sink = [&](std::span<const Prediction> chunk) {
        std::vector<json> lines(chunk.begin(), chunk.end());
        append_jsonl(args.out, lines);
    };
    auto preds = verifier.verify_dataset(pairs, facts ? &*facts : nullptr, cfg.runs, cfg.parallelism, sink);
    long parsed = std::count_if(preds.begin(), preds.end(), [](const Prediction& p) { return p.parse_ok; });
    json summary = {{"command", "verify"},
                    {"out", args.out.string()},
                    {"strategy", to_string(cfg.verify.strategy)},
                    {"predictions", preds.size()},
                    {"parsed", parsed}};
    finish(summary, rt, io);
    return summary;
}

json cmd_eval(Runtime& rt, const EvalArgs& args, Io io) {
    const auto& cfg = rt.config();
    auto pairs = load_dataset(rt, args.dataset);
    auto golds = gold_map(pairs);
    auto file = read_jsonl(args.predictions);
    auto preds = predictions_from(file, args.predictions);

    std::vector<json> lines;
    std::vector<TableRow> rows;
    auto main = score_system(preds, golds, args.wo_nei, cfg.include_absent_classes, file.metadata);
    lines.push_back(main.record);
    rows.push_back(main.row);
    if (args.compare) {
        auto other_file = read_jsonl(*args.compare);
        auto other = predictions_from(other_file, *args.compare);
        auto second = score_system(other, golds, args.wo_nei, cfg.include_absent_classes, other_file.metadata);
        lines.push_back(second.record);
        rows.push_back(second.row);
        lines.push_back(significance_record(preds, other, golds, cfg, args.wo_nei));
    }
    if (args.out) {
        auto meta = metadata_for(rt, "report", "eval",
                                 {{"predictions", args.predictions.string()},
                                  {"dataset", args.dataset.string()},
                                  {"wo_nei", args.wo_nei},
                                  {"compare", args.compare ? json(args.compare->string()) : json(nullptr)}});
        write_jsonl(*args.out, lines, meta);
    }
    io.out << render_table(rows);
    json summary = {{"command", "eval"}, {"systems", lines}};
    io.out << summary.dump(2) << '\n';
    return summary;
}

json cmd_export_training(Runtime& rt, const ExportTrainingArgs& args, Io io) {
    auto pairs = load_dataset(rt, args.dataset);
    auto facts = facts_by_id(load_facts(args.facts));
    std::vector<json> records;
    for (const auto& pair : pairs) {
        auto it = facts.find(pair.id);
        if (it == facts.end()) throw DataError("no facts entry for pair " + pair.id);
        if (!pair.gold) throw DataError("pair " + pair.id + " has no gold verdict");
        std::string text = pair.claim + " " + args.sep + " " + pair.title.value_or("") + " " + args.sep + " " +
                           pair.evidence;
        std::vector<int> labels;
        for (const auto& f : it->second) {
            if (!f.label) throw DataError("facts for pair " + pair.id + " are not labeled; run label first");
            text += " " + args.sep_fact + " " + f.text;
            labels.push_back(*f.label == FactLabel::Important ? 1 : 0);
        }
        records.push_back(
            {{"pair_id", pair.id}, {"text", text}, {"verdict", to_string(*pair.gold)}, {"fact_labels", labels}});
    }
    auto meta = metadata_for(rt, "training", "export-training",
                             {{"dataset", args.dataset.string()},
                              {"facts", args.facts.string()},
                              {"sep", args.sep},
                              {"sep_fact", args.sep_fact}});
    write_jsonl(args.out, records, meta);
    json summary = {{"command", "export-training"}, {"out", args.out.string()}, {"records", records.size()}};
    io.out << summary.dump(2) << '\n';
    return summary;
}

json cmd_export_annotation(Runtime& rt, const ExportAnnotationArgs& args, Io io) {
    const auto& cfg = rt.config();
    auto pairs = load_dataset(rt, args.dataset);
    auto facts = facts_by_id(load_facts(args.facts));

    auto sample = [&](Verdict want, std::uint64_t stream, std::size_t& available) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].gold == want) idx.push_back(i);
        available = idx.size();
        rng::SplitMix64 gen(rng::stream_seed(cfg.seed, stream));
        rng::shuffle(idx, gen);
        idx.resize(std::min(idx.size(), args.per_class));
        std::sort(idx.begin(), idx.end());
        return idx;
    };
    std::size_t n_sup = 0, n_con = 0;
    auto sup = sample(Verdict::Supported, 0, n_sup);
    auto con = sample(Verdict::Contradicted, 1, n_con);

    std::vector<std::string> rows;
    for (const auto* group : {&sup, &con}) {
        for (auto i : *group) {
            const auto& pair = pairs[i];
            auto it = facts.find(pair.id);
            if (it == facts.end()) throw DataError("no facts entry for pair " + pair.id);
            for (const auto& f : it->second) {
                if (!f.label) throw DataError("facts for pair " + pair.id + " are not labeled; run label first");
                if (*f.label != FactLabel::Important) continue;
                rows.push_back(csv_field(pair.id) + "," + std::string(to_string(*pair.gold)) + "," +
                               csv_field(pair.claim) + "," + csv_field(pair.evidence) + "," + csv_field(f.text) +
                               ",,,");
            }
        }
    }

    auto meta = metadata_for(rt, "annotation", "export-annotation",
                             {{"dataset", args.dataset.string()},
                              {"facts", args.facts.string()},
                              {"per_class", args.per_class}});
    std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + args.out.string());
    out << "# " << meta.dump() << '\n';
    out << "# sampled SUPPORT " << sup.size() << " of " << n_sup << ", CONTRADICT " << con.size() << " of " << n_con
        << '\n';
    out << "pair_id,gold,claim,evidence,fact,F,E,C\n";
    for (const auto& r : rows) out << r << '\n';
    if (!out) throw Error("write failed: " + args.out.string());
    if (rows.empty()) io.err << "warning: no important facts in the sampled pairs; wrote header only\n";

    json summary = {{"command", "export-annotation"},
                    {"out", args.out.string()},
                    {"sampled_support", sup.size()},
                    {"sampled_contradict", con.size()},
                    {"rows", rows.size()}};
    io.out << summary.dump(2) << '\n';
    return summary;
}

json cmd_run_all(Runtime& rt, const RunAllArgs& args, Io io) {
    const auto& cfg = rt.config();
    fs::create_directories(args.out_dir);
    auto strategies = args.strategies;
    if (strategies.empty()) strategies.push_back(cfg.verify.strategy);

    std::ostringstream quiet;
    Io inner{quiet, io.err};
    json steps = json::array();
    auto need = [&](Strategy s) { return std::find(strategies.begin(), strategies.end(), s) != strategies.end(); };

    std::map<Strategy, fs::path> facts_for;
    auto produce_facts = [&](bool direct) {
        auto raw = args.out_dir / (direct ? "facts_direct.jsonl" : "facts.jsonl");
        auto labeled = args.out_dir / (direct ? "facts_direct_labeled.jsonl" : "facts_labeled.jsonl");
        steps.push_back(cmd_generate(rt, {args.dataset, raw, direct}, inner));
        steps.push_back(cmd_label(rt, {raw, args.dataset, labeled}, inner));
        return labeled;
    };
    if (need(Strategy::AugFactDetect)) facts_for[Strategy::AugFactDetect] = produce_facts(false);
    if (need(Strategy::Direct)) facts_for[Strategy::Direct] = produce_facts(true);

    auto pairs = load_dataset(rt, args.dataset);
    auto golds = gold_map(pairs);
    std::vector<json> lines;
    std::vector<TableRow> rows;
    std::map<Strategy, std::vector<Prediction>> all_preds;
    for (auto s : strategies) {
        auto out = args.out_dir / ("predictions_" + std::string(to_string(s)) + ".jsonl");
        RunConfig scfg = cfg;
        scfg.verify.strategy = s;
        // Each strategy gets its own verifier; the shared gateway keeps the cache and counters.
        Verifier verifier(rt.gateway(), rt.templates(), scfg.strategy_config(), &rt.diagnostics());
        std::optional<FactsById> facts;
        if (facts_for.count(s)) facts = facts_by_id(load_facts(facts_for[s]));
        auto meta = metadata_for(rt, "predictions", "run-all",
                                 {{"dataset", args.dataset.string()},
                                  {"strategy", to_string(s)},
                                  {"facts", facts_for.count(s) ? json(facts_for[s].string()) : json(nullptr)}});
        write_jsonl(out, std::vector<json>{}, meta);
        auto sink = [&](std::span<const Prediction> chunk) {
            std::vector<json> l(chunk.begin(), chunk.end());
            append_jsonl(out, l);
        };
        auto preds = verifier.verify_dataset(pairs, facts ? &*facts : nullptr, cfg.runs, cfg.parallelism, sink);
        auto scored = score_system(preds, golds, false, cfg.include_absent_classes, meta.at("_meta"));
        lines.push_back(scored.record);
        rows.push_back(scored.row);
        all_preds[s] = std::move(preds);
    }
    if (all_preds.count(Strategy::Vanilla))
        for (auto s : strategies)
            if (s != Strategy::Vanilla)
                lines.push_back(significance_record(all_preds[s], all_preds[Strategy::Vanilla], golds, cfg, false));

    auto report = args.out_dir / "report.jsonl";
    json strategy_names = json::array();
    for (auto s : strategies) strategy_names.push_back(to_string(s));
    write_jsonl(report, lines,
                metadata_for(rt, "report", "run-all", {{"dataset", args.dataset.string()}, {"strategies", strategy_names}}));

    io.out << render_table(rows);
    json summary = {{"command", "run-all"}, {"out_dir", args.out_dir.string()}, {"report", report.string()}};
    finish(summary, rt, io);
    return summary;
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace factdetect
