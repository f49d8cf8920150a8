#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace factdetect::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
// Trims and collapses every run of ASCII whitespace into one space.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
bool istarts_with(std::string_view s, std::string_view prefix) noexcept;
bool icontains(std::string_view haystack, std::string_view needle);

// Removes a leading list marker: "1.", "1)", "(1)", "-", "*", "•" plus following spaces.
// Returns the remainder and sets had_marker when a marker was found.
std::string_view strip_list_marker(std::string_view line, bool* had_marker = nullptr) noexcept;

// Removes a leading "Label:" when the label matches one of the given names case-insensitively.
std::string_view strip_label(std::string_view line, std::initializer_list<std::string_view> labels) noexcept;

// Lowercase alphanumeric tokens, split on anything else.
std::vector<std::string> tokenize(std::string_view s);

}  // namespace factdetect::text
