#include "http_client.hpp"

#include <httplib.h>

#include "factdetect/errors.hpp"
#include "factdetect/llm_gateway.hpp"

namespace factdetect {

namespace detail {

namespace {

struct SplitUrl {
    std::string scheme_host_port;
    std::string base_path;
};

SplitUrl split_url(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must start with http:// or https://: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    SplitUrl out;
    out.scheme_host_port = endpoint.substr(0, path_start);
    out.base_path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    return out;
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         const std::string& api_key, std::chrono::seconds timeout) {
    auto url = split_url(endpoint);
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(url.base_path + path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to " + endpoint + path + " failed: " + httplib::to_string(res.error()), 0);
    if (res->status >= 400)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint + path + ": " +
                                 res->body.substr(0, 200),
                             res->status);
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw BackendError("non-JSON response from " + endpoint + path);
    }
}

}  // namespace detail

HttpChatBackend::HttpChatBackend(std::string endpoint, std::string api_key, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

nlohmann::json HttpChatBackend::request_body(const LlmRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    if (req.system) messages.push_back({{"role", "system"}, {"content", *req.system}});
    messages.push_back({{"role", "user"}, {"content", req.user}});
    nlohmann::json body{{"model", req.model},
                        {"messages", messages},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_tokens}};
    if (req.stop) body["stop"] = *req.stop;
    return body;
}

std::string HttpChatBackend::chat(const LlmRequest& req) {
    auto resp = detail::post_json(endpoint_, "/chat/completions", request_body(req), api_key_, timeout_);
    try {
        const auto& content = resp.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError("chat response lacks choices[0].message.content");
    }
}

}  // namespace factdetect
