#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "factdetect/config.hpp"
#include "factdetect/diagnostics.hpp"
#include "factdetect/embeddings.hpp"
#include "factdetect/llm_gateway.hpp"
#include "factdetect/templates.hpp"

namespace factdetect {

// Backends, caches and counters shared by one command invocation.
class Runtime {
public:
    explicit Runtime(RunConfig config);

    const RunConfig& config() const noexcept { return config_; }
    LlmGateway& gateway();
    Embedder& embedder();
    const TemplateSet& templates() const noexcept { return templates_; }
    Diagnostics& diagnostics() noexcept { return diagnostics_; }

    // {"gateway": {...}, "embedder": {...}, "diagnostics": {...}}
    json stats() const;

private:
    RunConfig config_;
    std::shared_ptr<ResponseCache> cache_;
    TemplateSet templates_;
    std::unique_ptr<LlmGateway> gateway_;
    std::unique_ptr<Embedder> embedder_;
    Diagnostics diagnostics_;
};

struct Io {
    std::ostream& out;
    std::ostream& err;
};

struct GenerateArgs {
    std::filesystem::path dataset;
    std::filesystem::path out;
    bool direct = false;
};

struct LabelArgs {
    std::filesystem::path facts;
    std::filesystem::path dataset;
    std::filesystem::path out;
};

struct VerifyArgs {
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> facts;
    std::filesystem::path out;
};

struct EvalArgs {
    std::filesystem::path predictions;
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> out;
    bool wo_nei = false;
    std::optional<std::filesystem::path> compare;
};

struct ExportTrainingArgs {
    std::filesystem::path dataset;
    std::filesystem::path facts;
    std::filesystem::path out;
    std::string sep = "</s>";
    std::string sep_fact = "[FACT]";
};

struct ExportAnnotationArgs {
    std::filesystem::path dataset;
    std::filesystem::path facts;
    std::filesystem::path out;
    std::size_t per_class = 15;
};

struct RunAllArgs {
    std::filesystem::path dataset;
    std::filesystem::path out_dir;
    // Empty: the configured verify strategy.
    std::vector<Strategy> strategies;
};

// Each command writes its outputs, prints a summary to io.out, and returns the summary
// (including gateway/embedder counters). Errors propagate as exceptions.
json cmd_generate(Runtime& rt, const GenerateArgs& args, Io io);
json cmd_label(Runtime& rt, const LabelArgs& args, Io io);
json cmd_verify(Runtime& rt, const VerifyArgs& args, Io io);
json cmd_eval(Runtime& rt, const EvalArgs& args, Io io);
json cmd_export_training(Runtime& rt, const ExportTrainingArgs& args, Io io);
json cmd_export_annotation(Runtime& rt, const ExportAnnotationArgs& args, Io io);
json cmd_run_all(Runtime& rt, const RunAllArgs& args, Io io);

// Runs body and maps errors to exit codes: ConfigError -> 2, any other failure -> 1.
int run_guarded(const std::function<void()>& body, std::ostream& err);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

}  // namespace factdetect
