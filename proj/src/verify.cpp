#include "factdetect/verify.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "factdetect/errors.hpp"
#include "factdetect/factgen.hpp"
#include "factdetect/parallel.hpp"
#include "factdetect/text.hpp"

namespace factdetect {

namespace {

std::string display_name(const nlohmann::json& label) {
    auto s = label.get<std::string>();
    if (s == "SUPPORT") return "Supported";
    if (s == "CONTRADICT") return "Contradicted";
    if (s == "NEI") return "Not Enough Info";
    if (s == "YES") return "Yes";
    if (s == "NO") return "No";
    throw ConfigError("exemplar has unknown verdict '" + s + "'");
}

// Position just past "<label>[ *_]*:" when the line holds the label, searching
// case-insensitively from the left. Leading markdown (*, #, spaces) is tolerated.
std::optional<std::size_t> label_end(std::string_view line, std::string_view label) {
    auto lower = text::to_lower(line);
    std::size_t from = 0;
    while (true) {
        auto at = lower.find(label, from);
        if (at == std::string::npos) return std::nullopt;
        std::size_t i = at + label.size();
        while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t' || lower[i] == '*' || lower[i] == '_')) ++i;
        if (i < lower.size() && lower[i] == ':') return i + 1;
        from = at + 1;
    }
}

// Label at the start of the line, ignoring markdown and list markers.
std::optional<std::size_t> leading_label_end(std::string_view line, std::string_view label) {
    std::size_t skip = 0;
    while (skip < line.size() && (line[skip] == ' ' || line[skip] == '*' || line[skip] == '#' || line[skip] == '_' ||
                                  line[skip] == '\t'))
        ++skip;
    auto rest = line.substr(skip);
    if (!text::istarts_with(rest, label)) return std::nullopt;
    auto end = label_end(rest.substr(0, std::min(rest.size(), label.size() + 8)), label);
    if (!end) return std::nullopt;
    return skip + *end;
}

bool has_word(std::string_view lower, std::string_view word) {
    std::size_t from = 0;
    while (true) {
        auto at = lower.find(word, from);
        if (at == std::string_view::npos) return false;
        bool left = at == 0 || !std::isalnum(static_cast<unsigned char>(lower[at - 1]));
        auto end = at + word.size();
        bool right = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
        if (left && right) return true;
        from = at + 1;
    }
}

std::optional<PredictedLabel> map_verdict(std::string_view token, bool factuality) {
    auto l = text::to_lower(token);
    if (factuality) {
        // Earliest whole-word yes/no wins.
        std::size_t best = std::string::npos;
        std::optional<PredictedLabel> out;
        for (auto [word, value] : {std::pair{"yes", BinaryAnswer::Yes}, std::pair{"no", BinaryAnswer::No}}) {
            std::size_t from = 0;
            while (true) {
                auto at = l.find(word, from);
                if (at == std::string::npos) break;
                auto end = at + std::string_view(word).size();
                bool left = at == 0 || !std::isalnum(static_cast<unsigned char>(l[at - 1]));
                bool right = end >= l.size() || !std::isalnum(static_cast<unsigned char>(l[end]));
                if (left && right) {
                    if (at < best) {
                        best = at;
                        out = value;
                    }
                    break;
                }
                from = at + 1;
            }
        }
        return out;
    }
    if (l.find("not enough") != std::string::npos || has_word(l, "nei") || l.find("insufficient") != std::string::npos)
        return Verdict::Nei;
    if (l.find("contradict") != std::string::npos || l.find("refut") != std::string::npos)
        return Verdict::Contradicted;
    if (l.find("support") != std::string::npos) return Verdict::Supported;
    return std::nullopt;
}

std::vector<std::string> split_fact_items(std::string_view content) {
    std::vector<std::string> out;
    auto body = text::trim(content);
    if (body.empty()) return out;
    try {
        auto arr = nlohmann::json::parse("[" + std::string(body) + "]");
        bool all_strings = std::all_of(arr.begin(), arr.end(), [](const auto& v) { return v.is_string(); });
        if (all_strings) {
            for (const auto& v : arr) {
                auto s = text::trim(v.get<std::string>());
                if (!s.empty()) out.emplace_back(s);
            }
            return out;
        }
    } catch (const nlohmann::json::exception&) {
    }
    // Facts may contain commas; sentence-final periods are the safer separator.
    std::string_view sep = body.find("., ") != std::string_view::npos ? "., " : ", ";
    std::size_t start = 0;
    while (start <= body.size()) {
        auto at = body.find(sep, start);
        auto piece = body.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start);
        std::string item(text::trim(piece));
        if (sep == "., " && at != std::string_view::npos) item.push_back('.');
        if (!text::trim(item).empty()) out.push_back(std::move(item));
        if (at == std::string_view::npos) break;
        start = at + sep.size();
    }
    return out;
}

std::string normalize_fact(std::string_view s) { return text::collapse_whitespace(s); }

}  // namespace

ParsedVerdict parse_verdict(std::string_view raw, bool factuality_mode) noexcept {
    ParsedVerdict out;
    out.verdict = factuality_mode ? PredictedLabel(BinaryAnswer::No) : PredictedLabel(Verdict::Nei);
    try {
        auto lines = text::split_lines(raw);

        std::optional<std::size_t> verdict_line;
        for (std::size_t i = lines.size(); i-- > 0;) {
            if (label_end(lines[i], "verdict")) {
                verdict_line = i;
                break;
            }
        }
        if (verdict_line) {
            auto line = lines[*verdict_line];
            std::string token(line.substr(*label_end(line, "verdict")));
            auto stripped = text::trim(token);
            while (!stripped.empty() && (stripped.front() == '*' || stripped.front() == '_'))
                stripped = text::trim(stripped.substr(1));
            if (stripped.empty()) {
                for (std::size_t j = *verdict_line + 1; j < lines.size(); ++j) {
                    if (!text::trim(lines[j]).empty()) {
                        token = std::string(lines[j]);
                        break;
                    }
                }
            }
            if (auto v = map_verdict(token, factuality_mode)) {
                out.verdict = *v;
                out.parse_ok = true;
            }
        }

        // Relevant Facts: bracketed list (possibly multi-line), inline list, or following lines.
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto end = leading_label_end(lines[i], "relevant facts");
            if (!end) continue;
            auto rest = text::trim(lines[i].substr(*end));
            if (!rest.empty() && rest.front() == '[') {
                std::string content(rest.substr(1));
                std::size_t j = i;
                while (content.find(']') == std::string::npos && ++j < lines.size()) {
                    if (leading_label_end(lines[j], "explanation") || leading_label_end(lines[j], "verdict")) break;
                    content += "\n";
                    content += lines[j];
                }
                auto close = content.rfind(']');
                if (close != std::string::npos) content.resize(close);
                std::string joined;
                for (auto l : text::split_lines(content)) {
                    auto item = text::strip_list_marker(l);
                    if (item.empty()) continue;
                    if (!joined.empty()) joined += ", ";
                    joined += item;
                }
                out.relevant_facts = split_fact_items(joined);
            } else if (!rest.empty()) {
                out.relevant_facts = split_fact_items(rest);
            } else {
                for (std::size_t j = i + 1; j < lines.size(); ++j) {
                    if (leading_label_end(lines[j], "explanation") || leading_label_end(lines[j], "verdict")) break;
                    auto item = text::strip_list_marker(lines[j]);
                    if (!item.empty()) out.relevant_facts.emplace_back(item);
                }
            }
            break;
        }

        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto end = leading_label_end(lines[i], "explanation");
            if (!end) continue;
            std::string expl(lines[i].substr(*end));
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                if (leading_label_end(lines[j], "verdict") || leading_label_end(lines[j], "relevant facts")) break;
                expl += "\n";
                expl += lines[j];
            }
            auto trimmed = text::trim(expl);
            if (!trimmed.empty()) out.explanation = std::string(trimmed);
            break;
        }
    } catch (...) {
        ParsedVerdict fallback;
        fallback.verdict = factuality_mode ? PredictedLabel(BinaryAnswer::No) : PredictedLabel(Verdict::Nei);
        return fallback;
    }
    return out;
}

// --- config / prompt rendering ---------------------------------------------

void StrategyConfig::validate() const {
    if (shots < 0) throw ConfigError("shots must be >= 0");
    if (binary_mode && factuality_mode) throw ConfigError("binary and factuality modes are mutually exclusive");
    if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
}

std::string StrategyConfig::resolved_exemplar_set() const {
    if (!exemplar_set.empty()) return exemplar_set;
    return factuality_mode ? "factuality_v1" : "verify_v1";
}

PromptBuilder::PromptBuilder(TemplateSet templates, StrategyConfig config)
    : templates_(std::move(templates)), config_(std::move(config)) {
    config_.validate();
    for (auto& ex : load_exemplars(config_.resolved_exemplar_set())) {
        if (exemplars_.size() == static_cast<std::size_t>(config_.shots)) break;
        if (config_.binary_mode && ex.value("verdict", "") == "NEI") continue;
        exemplars_.push_back(std::move(ex));
    }
    if (exemplars_.size() < static_cast<std::size_t>(config_.shots))
        throw ConfigError("exemplar set '" + config_.resolved_exemplar_set() + "' has fewer than " +
                          std::to_string(config_.shots) + " usable exemplars");
}

std::string PromptBuilder::exemplar_block(Strategy strategy) const {
    const bool fact = config_.factuality_mode;
    const std::string claim_name = fact ? "Statement" : "Claim";
    const std::string evidence_name = fact ? "Document" : "Evidence";
    std::string block;
    for (const auto& ex : exemplars_) {
        block += claim_name + ": " + ex.at("claim").get<std::string>() + "\n";
        block += evidence_name + ": " + ex.at("evidence").get<std::string>() + "\n";
        switch (strategy) {
            case Strategy::Vanilla:
                break;
            case Strategy::Cot:
                block += "Let's think step by step.\n";
                block += "Explanation: " + ex.at("explanation").get<std::string>() + "\n";
                break;
            case Strategy::Direct:
            case Strategy::AugFactDetect: {
                block += "Facts:\n";
                std::size_t n = 0;
                for (const auto& f : ex.at("facts")) block += std::to_string(++n) + ". " + f.get<std::string>() + "\n";
                block += "Relevant Facts: [";
                bool first = true;
                for (const auto& f : ex.at("relevant_facts")) {
                    if (!first) block += ", ";
                    block += f.get<std::string>();
                    first = false;
                }
                block += "]\n";
                block += "Explanation: " + ex.at("explanation").get<std::string>() + "\n";
                break;
            }
        }
        block += "Verdict: " + display_name(ex.at("verdict")) + "\n\n";
    }
    return block;
}

std::string PromptBuilder::render(Strategy strategy, const ClaimEvidencePair& pair,
                                  const std::vector<std::string>& facts) const {
    const bool fact = config_.factuality_mode;
    std::string task_name = fact ? "task_factuality" : config_.binary_mode ? "task_binary" : "task_three_way";
    std::string facts_block;
    for (std::size_t i = 0; i < facts.size(); ++i) facts_block += std::to_string(i + 1) + ". " + facts[i] + "\n";
    if (facts.empty()) facts_block = "(none)\n";

    std::map<std::string, std::string> vars{
        {"task", std::string(text::trim(templates_.get(task_name)))},
        {"exemplars", exemplar_block(strategy)},
        {"claim_name", fact ? "Statement" : "Claim"},
        {"evidence_name", fact ? "Document" : "Evidence"},
        {"evidence_name_lower", fact ? "document" : "evidence"},
        {"claim", pair.claim},
        {"evidence", pair.evidence},
        {"facts", facts_block},
    };
    std::string tmpl = strategy == Strategy::Vanilla ? "verify_vanilla"
                       : strategy == Strategy::Cot   ? "verify_cot"
                                                     : "verify_augfactdetect";
    return render_template(templates_.get(tmpl), vars);
}

RenderedPrompt PromptBuilder::build(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts) const {
    RenderedPrompt out;
    auto strategy = config_.strategy;
    if (config_.needs_facts()) {
        if (!facts)
            throw DataError("strategy " + std::string(to_string(strategy)) + " needs facts for pair " + pair.id);
        for (const auto& f : *facts) {
            if (config_.important_only) {
                if (!f.label) throw DataError("important-only needs labeled facts (pair " + pair.id + ")");
                if (*f.label != FactLabel::Important) continue;
            }
            out.offered_facts.push_back(f.text);
        }
        if (strategy == Strategy::AugFactDetect && out.offered_facts.empty()) {
            out.fallback = true;
            strategy = Strategy::Vanilla;
        }
    }
    out.text = render(strategy, pair, out.offered_facts);
    return out;
}

RenderedPrompt build_prompt(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts,
                            const StrategyConfig& config, const TemplateSet& templates) {
    return PromptBuilder(templates, config).build(pair, facts);
}

// --- verifier --------------------------------------------------------------

Verifier::Verifier(LlmGateway& gateway, TemplateSet templates, StrategyConfig config, Diagnostics* diagnostics)
    : gateway_(gateway), builder_(std::move(templates), std::move(config)), diagnostics_(diagnostics) {}

void Verifier::note(const std::string& name, long by) {
    if (diagnostics_) diagnostics_->increment(name, by);
}

Prediction Verifier::verify_pair(const ClaimEvidencePair& pair, const std::vector<ShortFact>* facts, int run) {
    const auto& cfg = builder_.config();
    if (run < 1) throw ConfigError("run index must be >= 1");
    auto prompt = builder_.build(pair, facts);

    LlmRequest req;
    req.model = cfg.model;
    req.user = prompt.text;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    auto ns = "run-" + std::to_string(run);
    auto raw = gateway_.complete(req, ns).text;
    auto parsed = parse_verdict(raw, cfg.factuality_mode);
    if (!parsed.parse_ok && cfg.retry_unparseable) {
        note("parse_retry");
        raw = gateway_.complete(req, ns + "-retry").text;
        parsed = parse_verdict(raw, cfg.factuality_mode);
    }
    if (!parsed.parse_ok) note("parse_failure");

    if (cfg.binary_mode && std::holds_alternative<Verdict>(parsed.verdict) &&
        std::get<Verdict>(parsed.verdict) == Verdict::Nei) {
        parsed.verdict = Verdict::Contradicted;
        note("nei_coerced");
    }

    // Resolve numeric references ("1", "2") to the offered facts, then flag anything not offered.
    std::vector<std::string> offered_norm;
    for (const auto& f : prompt.offered_facts) offered_norm.push_back(normalize_fact(f));
    for (auto& item : parsed.relevant_facts) {
        auto t = text::trim(item);
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
        if (ec == std::errc() && ptr == t.data() + t.size() && n >= 1 && n <= prompt.offered_facts.size())
            item = prompt.offered_facts[n - 1];
    }
    if (parsed.parse_ok && cfg.strategy == Strategy::AugFactDetect) {
        for (const auto& item : parsed.relevant_facts)
            if (std::find(offered_norm.begin(), offered_norm.end(), normalize_fact(item)) == offered_norm.end())
                note("hallucinated_fact");
    }

    Prediction p;
    p.pair_id = pair.id;
    p.strategy = cfg.strategy;
    p.model = cfg.model;
    p.run = run;
    p.verdict = parsed.verdict;
    p.relevant_facts = std::move(parsed.relevant_facts);
    p.explanation = std::move(parsed.explanation);
    p.raw = std::move(raw);
    p.parse_ok = parsed.parse_ok;
    p.fallback = prompt.fallback;
    if (p.fallback) note("augfactdetect_fallback");
    return p;
}

std::vector<Prediction> Verifier::verify_dataset(std::span<const ClaimEvidencePair> pairs, const FactsById* facts,
                                                 int runs, int parallelism, const PredictionSink& sink,
                                                 std::size_t chunk_size) {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    std::vector<const std::vector<ShortFact>*> facts_for(pairs.size(), nullptr);
    if (builder_.config().needs_facts()) {
        if (!facts) throw DataError("strategy " + std::string(to_string(builder_.config().strategy)) + " needs a facts file");
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            auto it = facts->find(pairs[i].id);
            if (it == facts->end()) throw DataError("facts file has no entry for pair " + pairs[i].id);
            facts_for[i] = &it->second;
        }
    }

    const std::size_t total = pairs.size() * static_cast<std::size_t>(runs);
    if (chunk_size == 0) chunk_size = total ? total : 1;
    std::vector<Prediction> all;
    all.reserve(total);
    for (std::size_t begin = 0; begin < total; begin += chunk_size) {
        const std::size_t count = std::min(chunk_size, total - begin);
        std::vector<Prediction> results(count);
        auto outcome = run_tasks(count, parallelism, [&](std::size_t k) {
            std::size_t task = begin + k;
            int run = static_cast<int>(task / pairs.size()) + 1;
            std::size_t i = task % pairs.size();
            results[k] = verify_pair(pairs[i], facts_for[i], run);
        });
        std::vector<Prediction> finished;
        for (std::size_t k = 0; k < count; ++k)
            if (outcome.done[k]) finished.push_back(std::move(results[k]));
        if (sink && !finished.empty()) sink(finished);
        for (auto& p : finished) all.push_back(std::move(p));
        if (outcome.error) rethrow_with_pair(outcome.error, pairs[(begin + outcome.error_index) % pairs.size()].id);
    }
    return all;
}

}  // namespace factdetect
