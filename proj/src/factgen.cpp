#include "factdetect/factgen.hpp"

#include <algorithm>
#include <unordered_set>

#include "factdetect/parallel.hpp"
#include "factdetect/text.hpp"

namespace factdetect {

namespace {

std::string_view strip_quotes(std::string_view s) {
    s = text::trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        s = text::trim(s.substr(1, s.size() - 2));
    return s;
}

}  // namespace

// --- parsers --------------------------------------------------------------

std::vector<AnswerPair> parse_answer_pairs(std::string_view raw, std::string_view claim, std::size_t max_pairs) {
    std::vector<AnswerPair> out;
    for (auto line : text::split_lines(raw)) {
        if (out.size() >= max_pairs) break;
        auto body = text::strip_list_marker(line);
        auto delim = body.find("||");
        if (delim == std::string_view::npos) continue;
        auto cp = strip_quotes(body.substr(0, delim));
        auto ep = strip_quotes(body.substr(delim + 2));
        if (cp.empty() || ep.empty()) continue;
        AnswerPair ap;
        ap.claim_phrase = std::string(cp);
        ap.evidence_phrase = std::string(ep);
        ap.index = out.size();
        ap.claim_phrase_in_claim = text::icontains(claim, cp);
        out.push_back(std::move(ap));
    }
    return out;
}

std::optional<std::string> parse_question(std::string_view raw) {
    for (auto line : text::split_lines(raw)) {
        auto q = strip_quotes(text::strip_label(text::strip_list_marker(line), {"question", "q"}));
        if (q.empty()) continue;
        std::string out(q);
        if (out.back() != '?') out.push_back('?');
        return out;
    }
    return std::nullopt;
}

bool parse_reasonable(std::string_view raw) {
    auto s = text::strip_label(raw, {"judgement", "judgment", "answer", "output"});
    std::string token;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!token.empty()) {
            break;
        }
    }
    return token == "reasonable" || token == "yes";
}

std::optional<std::string> parse_fused_sentence(std::string_view raw) {
    for (auto line : text::split_lines(raw)) {
        auto s = strip_quotes(text::strip_label(text::strip_list_marker(line), {"sentence", "fact"}));
        if (!s.empty()) return std::string(s);
    }
    return std::nullopt;
}

std::vector<std::string> parse_fact_list(std::string_view raw) {
    std::vector<std::string> marked, plain;
    for (auto line : text::split_lines(raw)) {
        bool had_marker = false;
        auto body = strip_quotes(text::strip_list_marker(line, &had_marker));
        if (body.empty()) continue;
        (had_marker ? marked : plain).emplace_back(body);
    }
    return marked.empty() ? plain : marked;
}

std::size_t dedup_facts(std::vector<ShortFact>& facts) {
    std::unordered_set<std::string> seen;
    auto before = facts.size();
    std::erase_if(facts, [&](const ShortFact& f) { return !seen.insert(dedup_key(f.text)).second; });
    return before - facts.size();
}

[[noreturn]] void rethrow_with_pair(const std::exception_ptr& error, const std::string& pair_id) {
    auto prefix = "pair " + pair_id + ": ";
    try {
        std::rethrow_exception(error);
    } catch (const TransportError& e) {
        throw TransportError(prefix + e.what(), e.status());
    } catch (const FixtureMiss& e) {
        throw FixtureMiss(prefix + e.what());
    } catch (const BackendError& e) {
        throw BackendError(prefix + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const std::exception& e) {
        throw Error(prefix + e.what());
    }
}

// --- generator ------------------------------------------------------------

FactGenerator::FactGenerator(LlmGateway& gateway, TemplateSet templates, PipelineConfig config,
                             Diagnostics* diagnostics)
    : gateway_(gateway), templates_(std::move(templates)), config_(std::move(config)), diagnostics_(diagnostics) {
    if (config_.max_answer_pairs < 1) throw ConfigError("max_answer_pairs must be >= 1");
    direct_exemplars_ = load_exemplars(config_.direct_exemplars);
    if (config_.direct_shots < 0 || static_cast<std::size_t>(config_.direct_shots) > direct_exemplars_.size())
        throw ConfigError("direct exemplar set '" + config_.direct_exemplars + "' has fewer than " +
                          std::to_string(config_.direct_shots) + " entries");
}

void FactGenerator::note(const std::string& name) {
    if (diagnostics_) diagnostics_->increment(name);
}

std::string FactGenerator::call(const std::string& prompt, int max_tokens) {
    LlmRequest req;
    req.model = config_.model;
    req.user = prompt;
    req.temperature = config_.temperature;
    req.max_tokens = max_tokens;
    return gateway_.complete(req, config_.cache_namespace).text;
}

std::string FactGenerator::phrase_prompt(const ClaimEvidencePair& pair) const {
    return render_template(templates_.get("phrase_match"), {{"claim", pair.claim}, {"evidence", pair.evidence}});
}

std::string FactGenerator::question_prompt(std::string_view claim, std::string_view claim_phrase) const {
    return render_template(templates_.get("question_gen"),
                           {{"context", std::string(claim)}, {"answer", std::string(claim_phrase)}});
}

std::string FactGenerator::reasonability_prompt(std::string_view question, std::string_view evidence_phrase) const {
    return render_template(templates_.get("reasonability"),
                           {{"question", std::string(question)}, {"answer", std::string(evidence_phrase)}});
}

std::string FactGenerator::fusion_prompt(std::string_view question, std::string_view evidence_phrase) const {
    return render_template(templates_.get("fuse_fact"),
                           {{"question", std::string(question)}, {"answer", std::string(evidence_phrase)}});
}

std::string FactGenerator::direct_prompt(const ClaimEvidencePair& pair) const {
    std::string block;
    for (int i = 0; i < config_.direct_shots; ++i) {
        const auto& ex = direct_exemplars_[static_cast<std::size_t>(i)];
        block += "Evidence: " + ex.at("evidence").get<std::string>() + "\nShort sentences:\n";
        for (const auto& f : ex.at("facts")) block += "- " + f.get<std::string>() + "\n";
        block += "\n";
    }
    return render_template(templates_.get("direct_generate"), {{"exemplars", block}, {"evidence", pair.evidence}});
}

std::vector<AnswerPair> FactGenerator::extract_answer_pairs(const ClaimEvidencePair& pair) {
    auto raw = call(phrase_prompt(pair), config_.budgets.phrase_matching);
    auto pairs = parse_answer_pairs(raw, pair.claim, static_cast<std::size_t>(config_.max_answer_pairs));
    if (pairs.empty()) note("no_answer_pairs");
    for (const auto& ap : pairs)
        if (!ap.claim_phrase_in_claim) note("claim_phrase_not_in_claim");
    return pairs;
}

std::string FactGenerator::generate_question(std::string_view claim, std::string_view claim_phrase) {
    if (text::trim(claim_phrase).empty()) throw DataError("empty claim phrase");
    auto q = parse_question(call(question_prompt(claim, claim_phrase), config_.budgets.question_generation));
    if (!q) throw EmptyQuestion();
    return *q;
}

bool FactGenerator::check_reasonable(std::string_view question, std::string_view evidence_phrase) {
    return parse_reasonable(call(reasonability_prompt(question, evidence_phrase), config_.budgets.reasonability));
}

std::optional<std::string> FactGenerator::fuse_fact(std::string_view question, std::string_view evidence_phrase) {
    auto s = parse_fused_sentence(call(fusion_prompt(question, evidence_phrase), config_.budgets.fact_generation));
    if (!s) note("blank_fusion");
    return s;
}

std::optional<ShortFact> FactGenerator::run_chain(const ClaimEvidencePair& pair, const AnswerPair& ap) {
    std::string question;
    try {
        question = generate_question(pair.claim, ap.claim_phrase);
    } catch (const EmptyQuestion&) {
        note("empty_question");
        return std::nullopt;
    }
    if (!check_reasonable(question, ap.evidence_phrase)) {
        note("unreasonable");
        return std::nullopt;
    }
    auto sentence = fuse_fact(question, ap.evidence_phrase);
    if (!sentence) return std::nullopt;
    ShortFact fact;
    fact.text = std::move(*sentence);
    fact.question = std::move(question);
    fact.claim_phrase = ap.claim_phrase;
    fact.evidence_phrase = ap.evidence_phrase;
    return fact;
}

std::vector<ShortFact> FactGenerator::assemble(std::vector<std::optional<ShortFact>> chain_results) {
    std::vector<ShortFact> facts;
    for (auto& r : chain_results)
        if (r) facts.push_back(std::move(*r));
    if (config_.dedup) {
        auto dropped = dedup_facts(facts);
        if (dropped && diagnostics_) diagnostics_->increment("duplicate_fact", static_cast<long>(dropped));
    }
    return facts;
}

std::vector<ShortFact> FactGenerator::run_pipeline(const ClaimEvidencePair& pair, int parallelism) {
    auto answer_pairs = extract_answer_pairs(pair);
    std::vector<std::optional<ShortFact>> results(answer_pairs.size());
    auto outcome = run_tasks(answer_pairs.size(), parallelism,
                             [&](std::size_t i) { results[i] = run_chain(pair, answer_pairs[i]); });
    outcome.rethrow_if_error();
    return assemble(std::move(results));
}

std::vector<ShortFact> FactGenerator::direct_generate(const ClaimEvidencePair& pair) {
    auto raw = call(direct_prompt(pair), config_.budgets.direct_generation);
    std::vector<ShortFact> facts;
    for (auto& line : parse_fact_list(raw)) {
        ShortFact f;
        f.text = std::move(line);
        f.source = FactSource::Direct;
        facts.push_back(std::move(f));
    }
    if (config_.dedup) {
        auto dropped = dedup_facts(facts);
        if (dropped && diagnostics_) diagnostics_->increment("duplicate_fact", static_cast<long>(dropped));
    }
    return facts;
}

std::vector<PairFacts> FactGenerator::generate_dataset(std::span<const ClaimEvidencePair> pairs, bool direct,
                                                       int parallelism, const FactsSink& sink,
                                                       std::size_t chunk_size) {
    std::vector<PairFacts> all;
    all.reserve(pairs.size());
    if (chunk_size == 0) chunk_size = pairs.size() ? pairs.size() : 1;

    for (std::size_t begin = 0; begin < pairs.size(); begin += chunk_size) {
        auto chunk = pairs.subspan(begin, std::min(chunk_size, pairs.size() - begin));
        std::vector<PairFacts> results(chunk.size());
        std::vector<char> complete(chunk.size(), 0);
        std::exception_ptr error;
        std::size_t error_pair = 0;

        if (direct) {
            auto outcome = run_tasks(chunk.size(), parallelism, [&](std::size_t i) {
                results[i] = {chunk[i].id, direct_generate(chunk[i])};
            });
            complete = outcome.done;
            error = outcome.error;
            error_pair = outcome.error_index;
        } else {
            // Stage 1 for every pair, then every (pair, answer pair) chain as one flat task list.
            std::vector<std::vector<AnswerPair>> answer_pairs(chunk.size());
            auto stage1 = run_tasks(chunk.size(), parallelism,
                                    [&](std::size_t i) { answer_pairs[i] = extract_answer_pairs(chunk[i]); });
            std::vector<std::pair<std::size_t, std::size_t>> chains;
            for (std::size_t i = 0; i < chunk.size(); ++i)
                if (stage1.done[i])
                    for (std::size_t k = 0; k < answer_pairs[i].size(); ++k) chains.emplace_back(i, k);
            std::vector<std::optional<ShortFact>> chain_out(chains.size());
            TaskOutcome stage2;
            if (stage1.ok()) {
                stage2 = run_tasks(chains.size(), parallelism, [&](std::size_t t) {
                    auto [i, k] = chains[t];
                    chain_out[t] = run_chain(chunk[i], answer_pairs[i][k]);
                });
            } else {
                stage2.done.assign(chains.size(), 0);
            }
            std::size_t t = 0;
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                if (!stage1.done[i]) continue;
                bool ok = true;
                std::vector<std::optional<ShortFact>> mine;
                for (std::size_t k = 0; k < answer_pairs[i].size(); ++k, ++t) {
                    ok = ok && stage2.done[t];
                    mine.push_back(std::move(chain_out[t]));
                }
                if (ok) {
                    results[i] = {chunk[i].id, assemble(std::move(mine))};
                    complete[i] = 1;
                }
            }
            if (!stage1.ok()) {
                error = stage1.error;
                error_pair = stage1.error_index;
            } else if (!stage2.ok()) {
                error = stage2.error;
                error_pair = chains[stage2.error_index].first;
            }
        }

        std::vector<PairFacts> finished;
        for (std::size_t i = 0; i < chunk.size(); ++i)
            if (complete[i]) finished.push_back(results[i]);
        if (sink && !finished.empty()) sink(finished);
        for (auto& pf : finished) all.push_back(std::move(pf));
        if (error) rethrow_with_pair(error, chunk[error_pair].id);
    }
    return all;
}

}  // namespace factdetect
