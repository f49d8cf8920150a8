#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace factdetect::detail {

// POSTs a JSON body to {endpoint}{path}. Throws TransportError with the HTTP status
// (0 when there was no response) on failure; returns the parsed response body.
nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         const std::string& api_key, std::chrono::seconds timeout);

}  // namespace factdetect::detail
