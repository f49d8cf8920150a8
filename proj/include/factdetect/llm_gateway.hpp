#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace factdetect {

struct LlmRequest {
    std::string model;
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 256;
    std::optional<std::vector<std::string>> stop;
};

enum class BackendKind { Http, Scripted };

std::string_view to_string(BackendKind k) noexcept;

struct LlmResponse {
    std::string text;
    bool from_cache = false;
    BackendKind backend = BackendKind::Scripted;
    double latency_ms = 0.0;
};

// Byte string hashed by cache_key. Fields in fixed order, separated by 0x1F:
// model, system (empty when absent), user, temperature ("%.6f"), max_tokens,
// stop (entries joined by 0x1E, empty when absent).
std::string canonical_encoding(const LlmRequest& req);

// Lowercase hex SHA-256 of canonical_encoding(req).
std::string cache_key(const LlmRequest& req);

std::string sha256_hex(std::string_view bytes);

// Per-stage max_tokens budgets.
struct StageBudgets {
    int phrase_matching = 256;
    int question_generation = 96;
    int fact_generation = 128;
    int reasonability = 8;
    int verification = 512;
    int direct_generation = 256;
};

// One chat-completion provider. Implementations must be safe to call concurrently.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const LlmRequest& req) = 0;
    virtual BackendKind kind() const noexcept = 0;
};

// POST {endpoint}/chat/completions, OpenAI wire format.
class HttpChatBackend final : public ChatBackend {
public:
    HttpChatBackend(std::string endpoint, std::string api_key,
                    std::chrono::seconds timeout = std::chrono::seconds(120));

    std::string chat(const LlmRequest& req) override;
    BackendKind kind() const noexcept override { return BackendKind::Http; }

    static nlohmann::json request_body(const LlmRequest& req);

private:
    std::string endpoint_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

// Offline backend driven by a JSONL fixture. Each line is either
//   {"key": "<cache key>", "response": "..."}
//   {"match": {"user_contains": "..." | ["...", ...]}, "response": "..."}
// Lookup order: exact key, then the first substring rule in file order (all listed
// substrings must occur in the user prompt).
class ScriptedBackend final : public ChatBackend {
public:
    struct Rule {
        std::vector<std::string> user_contains;
        std::string response;
    };

    ScriptedBackend(std::unordered_map<std::string, std::string> exact, std::vector<Rule> rules, bool strict);

    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& fixture, bool strict = true);

    std::string chat(const LlmRequest& req) override;
    BackendKind kind() const noexcept override { return BackendKind::Scripted; }

    long calls() const noexcept { return calls_.load(); }

private:
    std::unordered_map<std::string, std::string> exact_;
    std::vector<Rule> rules_;
    bool strict_;
    std::atomic<long> calls_{0};
};

// Content-addressed response store: {dir}/{namespace}/{key[0:2]}/{key}.json, written
// via temp file + rename. With no directory it is memory-only.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

    std::optional<nlohmann::json> get(std::string_view ns, const std::string& key);
    void put(std::string_view ns, const std::string& key, const nlohmann::json& value);

    const std::optional<std::filesystem::path>& dir() const noexcept { return dir_; }

private:
    std::filesystem::path path_for(std::string_view ns, const std::string& key) const;

    std::optional<std::filesystem::path> dir_;
    std::mutex mu_;
    std::unordered_map<std::string, nlohmann::json> memory_;
};

struct RetryPolicy {
    int max_retries = 3;
    // Delay before retry i (0-based) is base_delay * 2^i: 1s, 2s, 4s by default.
    std::chrono::milliseconds base_delay{1000};
};

struct GatewayOptions {
    int parallelism = 4;
    RetryPolicy retry;
};

struct GatewayStats {
    long requests = 0;
    long backend_calls = 0;
    long cache_hits = 0;
    long retries = 0;
};

// Cached, retrying, concurrency-bounded front for a ChatBackend.
class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

    // Cache first; on miss, call the backend (bounded by parallelism) and store the response.
    LlmResponse complete(const LlmRequest& req, std::string_view ns = "default");

    GatewayStats stats() const noexcept;
    BackendKind backend_kind() const noexcept { return backend_->kind(); }
    const GatewayOptions& options() const noexcept { return options_; }

private:
    std::string call_with_retry(const LlmRequest& req);

    std::shared_ptr<ChatBackend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    GatewayOptions options_;
    std::counting_semaphore<> slots_;
    std::atomic<long> requests_{0}, backend_calls_{0}, cache_hits_{0}, retries_{0};
};

// Retries apply to timeouts / connection failures (status 0), 429 and 5xx.
bool is_retryable_status(int status) noexcept;

}  // namespace factdetect
