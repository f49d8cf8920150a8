#include "factdetect/llm_gateway.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "factdetect/datamodel.hpp"
#include "factdetect/errors.hpp"

namespace factdetect {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind k) noexcept {
    return k == BackendKind::Http ? "http" : "scripted";
}

std::string canonical_encoding(const LlmRequest& req) {
    constexpr char unit_sep = '\x1F';
    constexpr char record_sep = '\x1E';
    char temp[64];
    std::snprintf(temp, sizeof temp, "%.6f", req.temperature);

    std::string out;
    out.reserve(req.model.size() + req.user.size() + 64);
    out += req.model;
    out += unit_sep;
    if (req.system) out += *req.system;
    out += unit_sep;
    out += req.user;
    out += unit_sep;
    out += temp;
    out += unit_sep;
    out += std::to_string(req.max_tokens);
    out += unit_sep;
    if (req.stop) {
        for (std::size_t i = 0; i < req.stop->size(); ++i) {
            if (i) out += record_sep;
            out += (*req.stop)[i];
        }
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string cache_key(const LlmRequest& req) {
    return sha256_hex(canonical_encoding(req));
}

// --- scripted -------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::unordered_map<std::string, std::string> exact, std::vector<Rule> rules,
                                 bool strict)
    : exact_(std::move(exact)), rules_(std::move(rules)), strict_(strict) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const fs::path& fixture, bool strict) {
    std::unordered_map<std::string, std::string> exact;
    std::vector<Rule> rules;
    JsonlFile file;
    try {
        file = read_jsonl(fixture);
    } catch (const DataError& e) {
        throw ConfigError(std::string("malformed fixture: ") + e.what());
    }
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        const auto& j = file.records[i];
        auto where = fixture.string() + ": entry " + std::to_string(i + 1);
        if (!j.is_object() || !j.contains("response") || !j["response"].is_string())
            throw ConfigError("malformed fixture: " + where + ": needs a string \"response\"");
        auto response = j["response"].get<std::string>();
        if (j.contains("key")) {
            exact.emplace(j["key"].get<std::string>(), std::move(response));
        } else if (j.contains("match") && j["match"].contains("user_contains")) {
            const auto& uc = j["match"]["user_contains"];
            Rule rule;
            if (uc.is_string())
                rule.user_contains.push_back(uc.get<std::string>());
            else if (uc.is_array())
                rule.user_contains = uc.get<std::vector<std::string>>();
            else
                throw ConfigError("malformed fixture: " + where + ": user_contains must be a string or list");
            rule.response = std::move(response);
            rules.push_back(std::move(rule));
        } else {
            throw ConfigError("malformed fixture: " + where + ": needs \"key\" or \"match\"");
        }
    }
    return std::make_shared<ScriptedBackend>(std::move(exact), std::move(rules), strict);
}

std::string ScriptedBackend::chat(const LlmRequest& req) {
    calls_.fetch_add(1);
    if (auto it = exact_.find(cache_key(req)); it != exact_.end()) return it->second;
    for (const auto& rule : rules_) {
        bool all = true;
        for (const auto& needle : rule.user_contains) {
            if (req.user.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return rule.response;
    }
    if (strict_) throw FixtureMiss("fixture miss for prompt: " + req.user.substr(0, 80));
    return {};
}

// --- cache ----------------------------------------------------------------

ResponseCache::ResponseCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {
    if (dir_) fs::create_directories(*dir_);
}

fs::path ResponseCache::path_for(std::string_view ns, const std::string& key) const {
    return *dir_ / std::string(ns) / key.substr(0, 2) / (key + ".json");
}

std::optional<json> ResponseCache::get(std::string_view ns, const std::string& key) {
    auto mkey = std::string(ns) + '/' + key;
    {
        std::lock_guard lock(mu_);
        if (auto it = memory_.find(mkey); it != memory_.end()) return it->second;
    }
    if (!dir_) return std::nullopt;
    std::ifstream in(path_for(ns, key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    json value;
    try {
        value = json::parse(ss.str());
    } catch (const json::parse_error&) {
        return std::nullopt;  // torn or foreign file; treat as a miss
    }
    std::lock_guard lock(mu_);
    memory_.emplace(mkey, value);
    return value;
}

void ResponseCache::put(std::string_view ns, const std::string& key, const json& value) {
    {
        std::lock_guard lock(mu_);
        memory_[std::string(ns) + '/' + key] = value;
    }
    if (!dir_) return;
    auto target = path_for(ns, key);
    fs::create_directories(target.parent_path());
    std::ostringstream tmp_name;
    tmp_name << target.filename().string() << ".tmp." << std::this_thread::get_id() << '.'
             << std::random_device{}();
    auto tmp = target.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write cache file " + tmp.string());
        out << value.dump() << '\n';
    }
    fs::rename(tmp, target);
}

// --- gateway --------------------------------------------------------------

bool is_retryable_status(int status) noexcept {
    return status == 0 || status == 429 || status >= 500;
}

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
                       GatewayOptions options)
    : backend_(std::move(backend)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(options),
      slots_(std::max(1, options.parallelism)) {
    if (options_.parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

std::string LlmGateway::call_with_retry(const LlmRequest& req) {
    for (int attempt = 0;; ++attempt) {
        slots_.acquire();
        try {
            backend_calls_.fetch_add(1);
            auto text = backend_->chat(req);
            slots_.release();
            return text;
        } catch (const TransportError& e) {
            slots_.release();
            if (attempt >= options_.retry.max_retries || !is_retryable_status(e.status())) throw;
            retries_.fetch_add(1);
            std::this_thread::sleep_for(options_.retry.base_delay * (1LL << attempt));
        } catch (...) {
            slots_.release();
            throw;
        }
    }
}

LlmResponse LlmGateway::complete(const LlmRequest& req, std::string_view ns) {
    if (req.user.empty()) throw ConfigError("LLM request with empty prompt");
    requests_.fetch_add(1);
    auto key = cache_key(req);
    if (auto hit = cache_->get(ns, key)) {
        cache_hits_.fetch_add(1);
        return {hit->at("text").get<std::string>(), true, backend_->kind(), 0.0};
    }
    auto start = std::chrono::steady_clock::now();
    auto text = call_with_retry(req);
    std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    cache_->put(ns, key, json{{"key", key}, {"model", req.model}, {"user", req.user}, {"text", text}});
    return {std::move(text), false, backend_->kind(), elapsed.count()};
}

GatewayStats LlmGateway::stats() const noexcept {
    return {requests_.load(), backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace factdetect
