#include "factdetect/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

#include "factdetect/datamodel.hpp"
#include "factdetect/errors.hpp"
#include "factdetect/text.hpp"

namespace factdetect {

namespace {

constexpr std::pair<std::string_view, std::string_view> kResources[] = {
#include "resources.inc"
};

bool is_name_char(char c) noexcept { return (c >= 'a' && c <= 'z') || c == '_'; }

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_name_char(tmpl[j])) ++j;
            if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
                std::string name(tmpl.substr(i + 1, j - i - 1));
                auto it = vars.find(name);
                if (it == vars.end()) throw ConfigError("template placeholder {" + name + "} has no value");
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::optional<std::string_view> builtin_resource(std::string_view path) {
    for (const auto& [name, body] : kResources)
        if (name == path) return body;
    return std::nullopt;
}

std::vector<std::string> builtin_resource_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : kResources) out.emplace_back(name);
    return out;
}

const std::vector<std::string>& TemplateSet::required_names() {
    static const std::vector<std::string> names = {
        "phrase_match",    "question_gen",     "reasonability", "fuse_fact",      "direct_generate",
        "task_three_way",  "task_binary",      "task_factuality", "verify_vanilla", "verify_cot",
        "verify_augfactdetect"};
    return names;
}

TemplateSet TemplateSet::builtin(std::string_view id) {
    TemplateSet set;
    set.id_ = std::string(id);
    for (const auto& name : required_names()) {
        auto path = "templates/" + set.id_ + "/" + name + ".txt";
        auto body = builtin_resource(path);
        if (!body) throw ConfigError("no built-in template set '" + set.id_ + "' (missing " + path + ")");
        set.texts_.emplace(name, std::string(*body));
    }
    return set;
}

TemplateSet TemplateSet::from_dir(const std::filesystem::path& dir) {
    TemplateSet set;
    set.id_ = dir.filename().string();
    if (set.id_.empty()) set.id_ = dir.parent_path().filename().string();
    for (const auto& name : required_names()) {
        auto path = dir / (name + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("template directory lacks " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        set.texts_.emplace(name, ss.str());
    }
    return set;
}

const std::string& TemplateSet::get(std::string_view name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) throw ConfigError("unknown template '" + std::string(name) + "'");
    return it->second;
}

std::vector<nlohmann::json> load_exemplars(std::string_view id_or_path) {
    std::string body;
    std::string origin(id_or_path);
    if (auto builtin = builtin_resource("exemplars/" + std::string(id_or_path) + ".jsonl")) {
        body = std::string(*builtin);
    } else {
        std::ifstream in{std::filesystem::path(origin), std::ios::binary};
        if (!in) throw ConfigError("unknown exemplar set '" + origin + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        body = ss.str();
    }
    std::vector<nlohmann::json> out;
    std::size_t lineno = 0;
    for (auto line : text::split_lines(body)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error&) {
            throw ConfigError(origin + ": line " + std::to_string(lineno) + ": malformed exemplar");
        }
    }
    return out;
}

}  // namespace factdetect
