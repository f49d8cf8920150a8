#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace factdetect {

// Replaces every {name} placeholder (name = [a-z_]+) in one pass; substituted values are
// not rescanned. Throws ConfigError for a placeholder with no value. Braces that do not
// form a placeholder are kept literally.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// Resource compiled into the library, addressed by repository-relative path
// ("templates/v1/phrase_match.txt", "exemplars/verify_v1.jsonl").
std::optional<std::string_view> builtin_resource(std::string_view path);
std::vector<std::string> builtin_resource_names();

// The prompt files a pipeline needs, by file name without extension.
class TemplateSet {
public:
    static constexpr const char* kDefaultId = "v1";
    static const std::vector<std::string>& required_names();

    static TemplateSet builtin(std::string_view id = kDefaultId);
    // Loads {dir}/{name}.txt for every required name; the set id is the directory name.
    static TemplateSet from_dir(const std::filesystem::path& dir);

    const std::string& get(std::string_view name) const;
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
    std::map<std::string, std::string, std::less<>> texts_;
};

// Few-shot exemplars: a JSONL file of objects. Built-in ids: verify_v1, factuality_v1, direct_v1.
// Anything else is treated as a file path.
std::vector<nlohmann::json> load_exemplars(std::string_view id_or_path);

}  // namespace factdetect
