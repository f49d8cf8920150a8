#include "factdetect/config.hpp"

#include <charconv>
#include <cstdlib>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "factdetect/errors.hpp"
#include "factdetect/text.hpp"

namespace factdetect {

namespace {

std::string_view format_name(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::Normalized: return "normalized";
        case DatasetFormat::SciFact: return "scifact";
        case DatasetFormat::HealthVer: return "healthver";
    }
    return "normalized";
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto s = text::trim(value);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("setting " + key + ": '" + value + "' is not a valid number");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    std::string s(text::trim(value));
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("setting " + key + ": '" + value + "' is not a number");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    auto v = text::to_lower(text::trim(value));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("setting " + key + ": '" + value + "' is not a boolean");
}

std::optional<std::filesystem::path> opt_path(const std::string& v) {
    if (v.empty()) return std::nullopt;
    return std::filesystem::path(v);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"llm.endpoint", [](RunConfig& c, auto&, auto& v) { c.endpoint = v; }},
        {"llm.api_key", [](RunConfig& c, auto&, auto& v) { c.api_key = v; }},
        {"llm.model", [](RunConfig& c, auto&, auto& v) { c.model = v; }},
        {"llm.temperature", [](RunConfig& c, auto& k, auto& v) { c.temperature = parse_double(k, v); }},
        {"llm.retry_base_ms", [](RunConfig& c, auto& k, auto& v) { c.retry_base_ms = parse_number<int>(k, v); }},
        {"llm.timeout_s", [](RunConfig& c, auto& k, auto& v) { c.timeout_s = parse_number<int>(k, v); }},
        {"embed.endpoint", [](RunConfig& c, auto&, auto& v) { c.embed_endpoint = v; }},
        {"embed.model", [](RunConfig& c, auto&, auto& v) { c.embed_model = v; }},
        {"embed.overrides", [](RunConfig& c, auto&, auto& v) { c.embed_overrides = opt_path(v); }},
        {"run.cache_dir", [](RunConfig& c, auto&, auto& v) { c.cache_dir = v; }},
        {"run.template_dir", [](RunConfig& c, auto&, auto& v) { c.template_dir = opt_path(v); }},
        {"run.parallelism", [](RunConfig& c, auto& k, auto& v) { c.parallelism = parse_number<int>(k, v); }},
        {"run.seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"run.scripted", [](RunConfig& c, auto&, auto& v) { c.scripted = opt_path(v); }},
        {"run.scripted_lenient", [](RunConfig& c, auto& k, auto& v) { c.scripted_lenient = parse_bool(k, v); }},
        {"data.format", [](RunConfig& c, auto&, auto& v) { c.dataset_format = parse_dataset_format(v); }},
        {"data.corpus", [](RunConfig& c, auto&, auto& v) { c.corpus = opt_path(v); }},
        {"data.scifact_include_nei",
         [](RunConfig& c, auto& k, auto& v) { c.scifact_include_nei = parse_bool(k, v); }},
        {"factgen.max_answer_pairs",
         [](RunConfig& c, auto& k, auto& v) { c.pipeline.max_answer_pairs = parse_number<int>(k, v); }},
        {"factgen.dedup", [](RunConfig& c, auto& k, auto& v) { c.pipeline.dedup = parse_bool(k, v); }},
        {"factgen.direct_exemplars", [](RunConfig& c, auto&, auto& v) { c.pipeline.direct_exemplars = v; }},
        {"factgen.direct_shots",
         [](RunConfig& c, auto& k, auto& v) { c.pipeline.direct_shots = parse_number<int>(k, v); }},
        {"label.gamma", [](RunConfig& c, auto& k, auto& v) { c.label.gamma = parse_double(k, v); }},
        {"label.threshold", [](RunConfig& c, auto& k, auto& v) { c.label.threshold = parse_double(k, v); }},
        {"verify.strategy", [](RunConfig& c, auto&, auto& v) { c.verify.strategy = parse_strategy(v); }},
        {"verify.shots", [](RunConfig& c, auto& k, auto& v) { c.verify.shots = parse_number<int>(k, v); }},
        {"verify.runs", [](RunConfig& c, auto& k, auto& v) { c.runs = parse_number<int>(k, v); }},
        {"verify.binary", [](RunConfig& c, auto& k, auto& v) { c.verify.binary_mode = parse_bool(k, v); }},
        {"verify.factuality", [](RunConfig& c, auto& k, auto& v) { c.verify.factuality_mode = parse_bool(k, v); }},
        {"verify.important_only", [](RunConfig& c, auto& k, auto& v) { c.verify.important_only = parse_bool(k, v); }},
        {"verify.retry_unparseable",
         [](RunConfig& c, auto& k, auto& v) { c.verify.retry_unparseable = parse_bool(k, v); }},
        {"verify.exemplar_set", [](RunConfig& c, auto&, auto& v) { c.verify.exemplar_set = v; }},
        {"verify.max_tokens", [](RunConfig& c, auto& k, auto& v) { c.verify.max_tokens = parse_number<int>(k, v); }},
        {"eval.iterations",
         [](RunConfig& c, auto& k, auto& v) { c.significance_iterations = parse_number<std::size_t>(k, v); }},
        {"eval.include_absent_classes",
         [](RunConfig& c, auto& k, auto& v) { c.include_absent_classes = parse_bool(k, v); }},
    };
    return table;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
    it->second(cfg, key, value);
}

const std::vector<std::string>& setting_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config file " + path.string() + ": key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            std::string value(text::trim(node.data()));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
            out.emplace_back(section + "." + key, value);
        }
    }
    return out;
}

std::optional<std::string> process_env(const char* name) {
    if (const char* v = std::getenv(name); v && *v) return std::string(v);
    return std::nullopt;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         const std::vector<std::pair<std::string, std::string>>& cli, const EnvLookup& env) {
    RunConfig cfg;
    if (config_file) {
        if (!std::filesystem::exists(*config_file))
            throw ConfigError("config file not found: " + config_file->string());
        for (const auto& [k, v] : read_config_file(*config_file)) apply_setting(cfg, k, v);
    }
    if (auto v = env("FACTDETECT_ENDPOINT")) cfg.endpoint = *v;
    if (auto v = env("FACTDETECT_API_KEY")) cfg.api_key = *v;
    for (const auto& [k, v] : cli) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (retry_base_ms < 0) throw ConfigError("llm.retry_base_ms must be >= 0");
    if (timeout_s < 1) throw ConfigError("llm.timeout_s must be >= 1");
    if (pipeline.max_answer_pairs < 1) throw ConfigError("factgen.max_answer_pairs must be >= 1");
    if (significance_iterations < 1) throw ConfigError("eval.iterations must be >= 1");
    if (template_dir && !std::filesystem::is_directory(*template_dir))
        throw ConfigError("template directory not found: " + template_dir->string());
    if (scripted && !std::filesystem::exists(*scripted))
        throw ConfigError("scripted fixture not found: " + scripted->string());
    if (embed_overrides && !std::filesystem::exists(*embed_overrides))
        throw ConfigError("embedding overrides not found: " + embed_overrides->string());
    label.validate();
    strategy_config().validate();
}

PipelineConfig RunConfig::pipeline_config() const {
    auto p = pipeline;
    p.model = model;
    p.temperature = temperature;
    return p;
}

StrategyConfig RunConfig::strategy_config() const {
    auto s = verify;
    s.model = model;
    s.temperature = temperature;
    return s;
}

LoadOptions RunConfig::load_options() const {
    LoadOptions o;
    o.corpus = corpus;
    o.scifact_include_nei = scifact_include_nei;
    return o;
}

json RunConfig::to_json() const {
    auto opt = [](const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); };
    return {
        {"llm",
         {{"endpoint", scripted ? json(nullptr) : json(endpoint)},
          {"backend", scripted ? "scripted" : "http"},
          {"model", model},
          {"temperature", temperature}}},
        {"embed", {{"endpoint", embed_endpoint}, {"model", embed_model}, {"overrides", opt(embed_overrides)}}},
        {"run",
         {{"cache_dir", cache_dir.string()},
          {"template_dir", opt(template_dir)},
          {"parallelism", parallelism},
          {"seed", seed},
          {"scripted", opt(scripted)},
          {"scripted_lenient", scripted_lenient}}},
        {"data",
         {{"format", format_name(dataset_format)}, {"corpus", opt(corpus)}, {"scifact_include_nei", scifact_include_nei}}},
        {"factgen",
         {{"max_answer_pairs", pipeline.max_answer_pairs},
          {"dedup", pipeline.dedup},
          {"direct_exemplars", pipeline.direct_exemplars},
          {"direct_shots", pipeline.direct_shots},
          {"budgets",
           {{"phrase_matching", pipeline.budgets.phrase_matching},
            {"question_generation", pipeline.budgets.question_generation},
            {"fact_generation", pipeline.budgets.fact_generation},
            {"reasonability", pipeline.budgets.reasonability},
            {"direct_generation", pipeline.budgets.direct_generation}}}}},
        {"label", {{"gamma", label.gamma}, {"threshold", label.threshold}}},
        {"verify",
         {{"strategy", to_string(verify.strategy)},
          {"shots", verify.shots},
          {"runs", runs},
          {"binary", verify.binary_mode},
          {"factuality", verify.factuality_mode},
          {"important_only", verify.important_only},
          {"retry_unparseable", verify.retry_unparseable},
          {"exemplar_set", verify.resolved_exemplar_set()},
          {"max_tokens", verify.max_tokens}}},
        {"eval", {{"iterations", significance_iterations}, {"include_absent_classes", include_absent_classes}}},
    };
}

}  // namespace factdetect
