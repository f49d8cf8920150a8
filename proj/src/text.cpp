#include "factdetect/text.hpp"

#include <algorithm>
#include <cctype>

namespace factdetect::text {

namespace {

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) noexcept {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.push_back(s.substr(start));
            break;
        }
        auto line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

bool istarts_with(std::string_view s, std::string_view prefix) noexcept {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (lower(s[i]) != lower(prefix[i])) return false;
    return true;
}

bool icontains(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string_view strip_list_marker(std::string_view line, bool* had_marker) noexcept {
    auto s = trim(line);
    bool found = false;
    constexpr std::string_view bullet = "\xE2\x80\xA2";  // U+2022
    if (s.starts_with(bullet)) {
        s.remove_prefix(bullet.size());
        found = true;
    } else if (!s.empty() && (s.front() == '-' || s.front() == '*') &&
               (s.size() == 1 || is_space(s[1]))) {
        s.remove_prefix(1);
        found = true;
    } else {
        std::size_t i = 0;
        bool paren = false;
        if (i < s.size() && s[i] == '(') {
            paren = true;
            ++i;
        }
        std::size_t digits = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
            ++digits;
        }
        if (digits > 0 && digits <= 3 && i < s.size() &&
            (s[i] == ')' || (!paren && (s[i] == '.' || s[i] == '-' || s[i] == ':')))) {
            // "1.5 mg" is a number, not a marker.
            bool decimal = s[i] == '.' && i + 1 < s.size() &&
                           std::isdigit(static_cast<unsigned char>(s[i + 1]));
            // "1-year" is a compound word; dash and colon markers need a following space.
            bool glued = (s[i] == '-' || s[i] == ':') && i + 1 < s.size() && !is_space(s[i + 1]);
            if (!decimal && !glued) {
                s.remove_prefix(i + 1);
                found = true;
            }
        }
    }
    if (had_marker) *had_marker = found;
    return trim(s);
}

std::string_view strip_label(std::string_view line, std::initializer_list<std::string_view> labels) noexcept {
    auto s = trim(line);
    for (auto label : labels) {
        if (!istarts_with(s, label)) continue;
        auto rest = trim(s.substr(label.size()));
        if (!rest.empty() && rest.front() == ':') return trim(rest.substr(1));
    }
    return s;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        auto uc = static_cast<unsigned char>(c);
        // Bytes >= 0x80 belong to UTF-8 sequences and are kept inside tokens.
        if (std::isalnum(uc) || uc >= 0x80) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace factdetect::text
