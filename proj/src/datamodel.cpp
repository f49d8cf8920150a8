#include "factdetect/datamodel.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "factdetect/errors.hpp"
#include "factdetect/text.hpp"

namespace factdetect {

namespace fs = std::filesystem;

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Supported: return "SUPPORT";
        case Verdict::Contradicted: return "CONTRADICT";
        case Verdict::Nei: return "NEI";
    }
    return "NEI";
}

std::string_view to_string(BinaryAnswer a) noexcept {
    return a == BinaryAnswer::Yes ? "YES" : "NO";
}

Verdict parse_verdict_label(std::string_view s) {
    if (s == "SUPPORT") return Verdict::Supported;
    if (s == "CONTRADICT") return Verdict::Contradicted;
    if (s == "NEI") return Verdict::Nei;
    throw DataError("unknown label '" + std::string(s) + "'");
}

BinaryAnswer parse_binary_label(std::string_view s) {
    if (s == "YES") return BinaryAnswer::Yes;
    if (s == "NO") return BinaryAnswer::No;
    throw DataError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(FactLabel l) noexcept {
    return l == FactLabel::Important ? "important" : "not_important";
}

FactLabel parse_fact_label(std::string_view s) {
    if (s == "important") return FactLabel::Important;
    if (s == "not_important") return FactLabel::NotImportant;
    throw DataError("unknown fact label '" + std::string(s) + "'");
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Vanilla: return "vanilla";
        case Strategy::Cot: return "cot";
        case Strategy::Direct: return "direct";
        case Strategy::AugFactDetect: return "augfactdetect";
    }
    return "vanilla";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "vanilla") return Strategy::Vanilla;
    if (s == "cot") return Strategy::Cot;
    if (s == "direct") return Strategy::Direct;
    if (s == "augfactdetect") return Strategy::AugFactDetect;
    throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

DatasetFormat parse_dataset_format(std::string_view s) {
    if (s == "normalized") return DatasetFormat::Normalized;
    if (s == "scifact") return DatasetFormat::SciFact;
    if (s == "healthver") return DatasetFormat::HealthVer;
    throw ConfigError("unknown dataset format '" + std::string(s) + "'");
}

std::string dedup_key(std::string_view t) {
    return text::to_lower(text::collapse_whitespace(t));
}

// --- JSON mapping ---------------------------------------------------------

namespace {

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

std::string string_or_empty(const json& j, const char* key) {
    return optional_string(j, key).value_or("");
}

}  // namespace

void to_json(json& j, const ClaimEvidencePair& p) {
    j = json{{"id", p.id},
             {"claim", p.claim},
             {"evidence", p.evidence},
             {"title", optional_to_json(p.title)},
             {"label", p.gold ? json(std::string(to_string(*p.gold))) : json(nullptr)},
             {"dataset", p.dataset}};
}

void from_json(const json& j, ClaimEvidencePair& p) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    if (!j.contains("id") || !j.contains("claim") || !j.contains("evidence"))
        throw DataError("record needs id, claim and evidence");
    const auto& id = j.at("id");
    p.id = id.is_string() ? id.get<std::string>() : id.dump();
    p.claim = j.at("claim").get<std::string>();
    p.evidence = j.at("evidence").get<std::string>();
    p.title = optional_string(j, "title");
    auto label = optional_string(j, "label");
    p.gold = label ? std::optional(parse_verdict_label(*label)) : std::nullopt;
    p.dataset = string_or_empty(j, "dataset");
}

void to_json(json& j, const ShortFact& f) {
    j = json{{"text", f.text},
             {"question", f.question},
             {"claim_phrase", f.claim_phrase},
             {"evidence_phrase", f.evidence_phrase},
             {"sim", optional_to_json(f.sim)},
             {"label", f.label ? json(std::string(to_string(*f.label))) : json(nullptr)},
             {"source", f.source == FactSource::Direct ? "direct" : "pipeline"}};
}

void from_json(const json& j, ShortFact& f) {
    f.text = j.at("text").get<std::string>();
    f.question = string_or_empty(j, "question");
    f.claim_phrase = string_or_empty(j, "claim_phrase");
    f.evidence_phrase = string_or_empty(j, "evidence_phrase");
    auto sim = j.find("sim");
    f.sim = (sim == j.end() || sim->is_null()) ? std::nullopt : std::optional(sim->get<double>());
    auto label = optional_string(j, "label");
    f.label = label ? std::optional(parse_fact_label(*label)) : std::nullopt;
    f.source = string_or_empty(j, "source") == "direct" ? FactSource::Direct : FactSource::Pipeline;
    if (f.label && !f.sim) throw DataError("fact has a label but no sim");
}

void to_json(json& j, const PairFacts& pf) {
    j = json{{"pair_id", pf.pair_id}, {"facts", pf.facts}};
}

void from_json(const json& j, PairFacts& pf) {
    pf.pair_id = j.at("pair_id").get<std::string>();
    pf.facts = j.at("facts").get<std::vector<ShortFact>>();
}

void to_json(json& j, const Prediction& p) {
    json verdict = std::visit([](auto v) { return json(std::string(to_string(v))); }, p.verdict);
    j = json{{"pair_id", p.pair_id},
             {"strategy", std::string(to_string(p.strategy))},
             {"model", p.model},
             {"run", p.run},
             {"verdict", verdict},
             {"relevant_facts", p.relevant_facts},
             {"explanation", optional_to_json(p.explanation)},
             {"raw", p.raw},
             {"parse_ok", p.parse_ok},
             {"fallback", p.fallback}};
}

void from_json(const json& j, Prediction& p) {
    p.pair_id = j.at("pair_id").get<std::string>();
    p.strategy = parse_strategy(j.at("strategy").get<std::string>());
    p.model = string_or_empty(j, "model");
    p.run = j.at("run").get<int>();
    auto v = j.at("verdict").get<std::string>();
    if (v == "YES" || v == "NO")
        p.verdict = parse_binary_label(v);
    else
        p.verdict = parse_verdict_label(v);
    p.relevant_facts = j.value("relevant_facts", std::vector<std::string>{});
    p.explanation = optional_string(j, "explanation");
    p.raw = string_or_empty(j, "raw");
    p.parse_ok = j.value("parse_ok", false);
    p.fallback = j.value("fallback", false);
}

// --- JSONL ----------------------------------------------------------------

json make_metadata(std::string_view kind, const json& config) {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return json{{"_meta",
                 {{"schema_version", kSchemaVersion},
                  {"kind", std::string(kind)},
                  {"created_at", buf},
                  {"config", config}}}};
}

bool is_metadata(const json& line) {
    return line.is_object() && line.size() == 1 && line.contains("_meta");
}

JsonlFile read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    JsonlFile out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(path.string() + ": line " + std::to_string(lineno) + ": malformed JSON (" +
                            e.what() + ")");
        }
        if (out.records.empty() && !out.metadata && is_metadata(j)) {
            const auto& meta = j.at("_meta");
            if (meta.value("schema_version", -1) != kSchemaVersion)
                throw DataError(path.string() + ": unsupported schema_version " +
                                meta.value("schema_version", json(nullptr)).dump());
            out.metadata = meta;
            continue;
        }
        out.records.push_back(std::move(j));
    }
    return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records, const std::optional<json>& metadata) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    if (metadata) out << metadata->dump() << '\n';
    for (const auto& r : records) out << r.dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

void append_jsonl(const fs::path& path, const std::vector<json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to " + path.string());
    for (const auto& r : records) out << r.dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<PairFacts> load_facts(const fs::path& path) {
    auto file = read_jsonl(path);
    std::vector<PairFacts> out;
    out.reserve(file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        try {
            out.push_back(file.records[i].get<PairFacts>());
        } catch (const std::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Prediction> load_predictions(const fs::path& path) {
    auto file = read_jsonl(path);
    std::vector<Prediction> out;
    out.reserve(file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        try {
            out.push_back(file.records[i].get<Prediction>());
        } catch (const std::exception& e) {
            throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

// --- validation -----------------------------------------------------------

std::vector<std::string> validate_pair(const ClaimEvidencePair& pair) {
    std::vector<std::string> diags;
    if (text::trim(pair.id).empty()) diags.emplace_back("empty id");
    if (text::trim(pair.claim).empty()) diags.emplace_back("empty claim");
    if (text::trim(pair.evidence).empty()) diags.emplace_back("empty evidence");
    return diags;
}

// --- loaders --------------------------------------------------------------

namespace {

struct RawLine {
    std::size_t lineno;
    json value;
};

std::vector<RawLine> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<RawLine> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            if (out.empty() && is_metadata(j)) continue;
            out.push_back({lineno, std::move(j)});
        } catch (const json::parse_error&) {
            throw DataError(path.string() + ": line " + std::to_string(lineno) + ": malformed JSON");
        }
    }
    return out;
}

std::string id_string(const json& j) {
    return j.is_string() ? j.get<std::string>() : j.dump();
}

void check_and_add(std::vector<ClaimEvidencePair>& out, std::unordered_set<std::string>& seen,
                   ClaimEvidencePair pair, const std::string& where) {
    auto diags = validate_pair(pair);
    if (!diags.empty()) throw DataError(where + ": " + diags.front());
    if (!seen.insert(pair.id).second) throw DataError(where + ": duplicate id '" + pair.id + "'");
    out.push_back(std::move(pair));
}

std::vector<ClaimEvidencePair> load_normalized(const fs::path& path) {
    std::vector<ClaimEvidencePair> out;
    std::unordered_set<std::string> seen;
    for (auto& [lineno, j] : read_lines(path)) {
        auto where = path.string() + ": line " + std::to_string(lineno);
        ClaimEvidencePair pair;
        try {
            pair = j.get<ClaimEvidencePair>();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        check_and_add(out, seen, std::move(pair), where);
    }
    return out;
}

struct CorpusDoc {
    std::string title;
    std::vector<std::string> sentences;
};

std::vector<ClaimEvidencePair> load_scifact(const fs::path& claims_path, const LoadOptions& options) {
    auto corpus_path = options.corpus.value_or(claims_path.parent_path() / "corpus.jsonl");
    std::string tag = options.dataset_tag.value_or("scifact");

    auto claims = read_lines(claims_path);
    for (const auto& [lineno, j] : claims) {
        if (!j.contains("evidence"))
            throw DataError(claims_path.string() + ": line " + std::to_string(lineno) +
                            ": claim has no gold evidence field; the SciFact test split carries no "
                            "claim-evidence pairs, use the dev split instead");
    }

    std::unordered_map<std::string, CorpusDoc> corpus;
    for (auto& [lineno, j] : read_lines(corpus_path)) {
        try {
            CorpusDoc doc{j.at("title").get<std::string>(), j.at("abstract").get<std::vector<std::string>>()};
            corpus.emplace(id_string(j.at("doc_id")), std::move(doc));
        } catch (const json::exception& e) {
            throw DataError(corpus_path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    auto join_sentences = [](const std::vector<std::string>& sents) {
        std::string out;
        for (const auto& s : sents) {
            auto t = text::trim(s);
            if (t.empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out.append(t);
        }
        return out;
    };

    std::vector<ClaimEvidencePair> out;
    std::unordered_set<std::string> seen;
    for (const auto& [lineno, j] : claims) {
        auto where = claims_path.string() + ": line " + std::to_string(lineno);
        std::string claim_id, claim;
        try {
            claim_id = id_string(j.at("id"));
            claim = j.at("claim").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        auto lookup = [&](const std::string& doc_id) -> const CorpusDoc& {
            auto it = corpus.find(doc_id);
            if (it == corpus.end())
                throw DataError(where + ": claim " + claim_id + " references doc_id " + doc_id +
                                " missing from corpus");
            return it->second;
        };

        const auto& evidence = j.at("evidence");
        if (evidence.empty()) {
            if (!options.scifact_include_nei) continue;
            for (const auto& doc_id_j : j.value("cited_doc_ids", json::array())) {
                auto doc_id = id_string(doc_id_j);
                const auto& doc = lookup(doc_id);
                check_and_add(out, seen,
                              {claim_id + "-" + doc_id + "-nei", claim, join_sentences(doc.sentences), doc.title,
                               Verdict::Nei, tag},
                              where);
            }
            continue;
        }
        // Object iteration is key-sorted; follow cited_doc_ids order when present.
        std::vector<std::string> doc_order;
        for (const auto& d : j.value("cited_doc_ids", json::array())) {
            auto id = id_string(d);
            if (evidence.contains(id)) doc_order.push_back(id);
        }
        for (const auto& [doc_id, _] : evidence.items())
            if (std::find(doc_order.begin(), doc_order.end(), doc_id) == doc_order.end())
                doc_order.push_back(doc_id);

        for (const auto& doc_id : doc_order) {
            const auto& doc = lookup(doc_id);
            const auto& sets = evidence.at(doc_id);
            for (std::size_t k = 0; k < sets.size(); ++k) {
                const auto& set = sets[k];
                std::vector<std::string> sents;
                for (const auto& idx : set.at("sentences")) {
                    auto i = idx.get<std::size_t>();
                    if (i >= doc.sentences.size())
                        throw DataError(where + ": claim " + claim_id + " sentence index " + std::to_string(i) +
                                        " out of range for doc " + doc_id);
                    sents.push_back(doc.sentences[i]);
                }
                auto label = set.at("label").get<std::string>();
                Verdict gold = label == "SUPPORT"      ? Verdict::Supported
                               : label == "CONTRADICT" ? Verdict::Contradicted
                                                       : parse_verdict_label(label);
                check_and_add(out, seen,
                              {claim_id + "-" + doc_id + "-" + std::to_string(k), claim, join_sentences(sents),
                               doc.title, gold, tag},
                              where);
            }
        }
    }
    return out;
}

Verdict healthver_label(std::string_view raw) {
    auto l = text::to_lower(text::trim(raw));
    if (l == "supports" || l == "support" || l == "supported") return Verdict::Supported;
    if (l == "refutes" || l == "refute" || l == "refuted" || l == "contradict" || l == "contradicts" ||
        l == "contradicted")
        return Verdict::Contradicted;
    if (l == "neutral" || l == "nei" || l == "not enough info") return Verdict::Nei;
    throw DataError("unknown label '" + std::string(raw) + "'");
}

// RFC 4180 rows; quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field.push_back(c);
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ClaimEvidencePair> load_healthver(const fs::path& path, const LoadOptions& options) {
    std::string tag = options.dataset_tag.value_or("healthver");
    std::vector<ClaimEvidencePair> out;
    std::unordered_set<std::string> seen;

    auto make = [&](std::optional<std::string> id, std::string claim, std::string evidence,
                    std::optional<std::string> label, std::size_t lineno) {
        auto where = path.string() + ": line " + std::to_string(lineno);
        ClaimEvidencePair p;
        p.id = id.value_or("healthver-" + std::to_string(lineno));
        p.claim = std::move(claim);
        p.evidence = std::move(evidence);
        p.dataset = tag;
        try {
            if (label) p.gold = healthver_label(*label);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        check_and_add(out, seen, std::move(p), where);
    };

    if (path.extension() == ".csv") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open " + path.string());
        auto rows = parse_csv(in);
        if (rows.empty()) return out;
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < rows[0].size(); ++i) col[text::to_lower(text::trim(rows[0][i]))] = i;
        for (const char* need : {"claim", "evidence"})
            if (!col.count(need)) throw DataError(path.string() + ": missing column '" + need + "'");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() == 1 && text::trim(row[0]).empty()) continue;
            auto cell = [&](const char* name) -> std::optional<std::string> {
                auto it = col.find(name);
                if (it == col.end() || it->second >= row.size()) return std::nullopt;
                return row[it->second];
            };
            make(cell("id"), cell("claim").value_or(""), cell("evidence").value_or(""), cell("label"), r + 1);
        }
        return out;
    }

    for (auto& [lineno, j] : read_lines(path)) {
        try {
            std::optional<std::string> id;
            if (j.contains("id") && !j["id"].is_null()) id = id_string(j["id"]);
            make(id, j.at("claim").get<std::string>(), j.at("evidence").get<std::string>(),
                 optional_string(j, "label"), lineno);
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<ClaimEvidencePair> load_pairs(const fs::path& path, DatasetFormat format, const LoadOptions& options) {
    switch (format) {
        case DatasetFormat::Normalized: return load_normalized(path);
        case DatasetFormat::SciFact: return load_scifact(path, options);
        case DatasetFormat::HealthVer: return load_healthver(path, options);
    }
    return {};
}

}  // namespace factdetect
