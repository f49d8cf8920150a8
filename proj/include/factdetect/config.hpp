#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "factdetect/datamodel.hpp"
#include "factdetect/factgen.hpp"
#include "factdetect/verify.hpp"
#include "factdetect/weaklabel.hpp"

namespace factdetect {

struct RunConfig {
    std::string endpoint = "http://localhost:8000/v1";
    // Never serialized.
    std::string api_key;
    std::string model = "gpt-3.5-turbo";
    double temperature = 0.0;
    int retry_base_ms = 1000;
    int timeout_s = 120;

    // Empty: the fixture provider when scripted, otherwise the chat endpoint.
    std::string embed_endpoint;
    std::string embed_model = "all-MiniLM-L6-v2";
    std::optional<std::filesystem::path> embed_overrides;

    // Empty disables the on-disk cache.
    std::filesystem::path cache_dir = ".factdetect-cache";
    std::optional<std::filesystem::path> template_dir;
    int parallelism = 4;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> scripted;
    bool scripted_lenient = false;

    DatasetFormat dataset_format = DatasetFormat::Normalized;
    std::optional<std::filesystem::path> corpus;
    bool scifact_include_nei = true;

    PipelineConfig pipeline;
    LabelConfig label;
    StrategyConfig verify;
    int runs = 1;
    std::size_t significance_iterations = 10000;
    bool include_absent_classes = false;

    void validate() const;
    // Everything except the API key.
    json to_json() const;
    // Model and temperature are shared by generation and verification.
    PipelineConfig pipeline_config() const;
    StrategyConfig strategy_config() const;
    LoadOptions load_options() const;
};

// Dotted keys ("llm.model", "label.gamma", ...). Throws ConfigError for an unknown key or
// a malformed value.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
const std::vector<std::string>& setting_keys();

// Sections of key = value lines. Values may be double-quoted. Keys combine as section.key.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// defaults < config file < environment (FACTDETECT_ENDPOINT, FACTDETECT_API_KEY) < cli.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         const std::vector<std::pair<std::string, std::string>>& cli, const EnvLookup& env = process_env);

}  // namespace factdetect
