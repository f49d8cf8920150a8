#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "factdetect/verify.hpp"
#include "support.hpp"

// Frozen inputs behind tests/golden/*.txt. Set FACTDETECT_UPDATE_GOLDEN=1 to rewrite.
namespace golden {

inline const factdetect::ClaimEvidencePair& pair() {
    static const factdetect::ClaimEvidencePair p{
        "g1", "Daily walking lowers resting blood pressure.",
        "In a 12-week trial, adults who walked 30 minutes a day had lower resting systolic pressure than controls.",
        std::nullopt, factdetect::Verdict::Supported, "golden"};
    return p;
}

inline const std::vector<factdetect::ShortFact>& facts() {
    static const std::vector<factdetect::ShortFact> f = [] {
        std::vector<factdetect::ShortFact> v(2);
        v[0].text = "Adults walked 30 minutes a day for 12 weeks.";
        v[0].label = factdetect::FactLabel::NotImportant;
        v[1].text = "Walking lowered resting systolic pressure compared with controls.";
        v[1].label = factdetect::FactLabel::Important;
        return v;
    }();
    return f;
}

inline std::string render(factdetect::Strategy s) {
    factdetect::StrategyConfig cfg;
    cfg.strategy = s;
    cfg.model = "m";
    auto needs = cfg.needs_facts();
    return factdetect::build_prompt(pair(), needs ? &facts() : nullptr, cfg, factdetect::TemplateSet::builtin()).text;
}

inline std::filesystem::path file_for(factdetect::Strategy s) {
    return testsupport::data_dir() / "golden" / ("prompt_" + std::string(factdetect::to_string(s)) + ".txt");
}

// Empty string when the rendering matches; a description of the mismatch otherwise.
inline std::string check(factdetect::Strategy s) {
    auto rendered = render(s);
    auto path = file_for(s);
    if (std::getenv("FACTDETECT_UPDATE_GOLDEN")) testsupport::write_file(path, rendered);
    if (!std::filesystem::exists(path)) return "missing golden file " + path.string();
    auto expected = testsupport::read_file(path);
    if (expected == rendered) return {};
    std::size_t i = 0;
    while (i < expected.size() && i < rendered.size() && expected[i] == rendered[i]) ++i;
    return path.filename().string() + " differs at byte " + std::to_string(i);
}

}  // namespace golden
