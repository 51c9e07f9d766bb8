#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/pricing.hpp"

namespace routefuse {

enum class Pattern { Direct, Think };

inline std::string to_string(Pattern p) {
    switch (p) {
        case Pattern::Direct: return "direct";
        case Pattern::Think: return "think";
    }
    detail::fail("invalid Pattern value");
}

inline Pattern pattern_from_string(const std::string& s) {
    if (s == "direct") return Pattern::Direct;
    if (s == "think") return Pattern::Think;
    detail::fail("unknown pattern: " + s);
}

/// One logged routing outcome: a query sent to one model under one
/// prompting pattern, with the scored result.
struct RoutingRecord {
    std::string task_name;
    std::string task_description;
    std::string query_id;
    std::string query;
    std::string ground_truth;
    std::string metric;
    std::string llm_name;
    Pattern pattern = Pattern::Direct;
    int64_t input_tokens = 0;
    int64_t output_tokens = 0;
    double performance = 0.0;  // in [0,1]
    double cost = 0.0;         // dollars
    std::string response;
    std::optional<double> judge_score;   // in [0,1]; absence is not zero
    std::vector<double> query_embedding; // empty means absent
    std::vector<double> task_embedding;

    bool operator==(const RoutingRecord&) const = default;
};

/// Dataset-level header persisted on the first line of the JSONL file.
struct DatasetMeta {
    int embedding_dim = 0;  // 0 means no embeddings expected
    std::string token_counter = "bytes4";
    std::vector<LlmProfile> llm_profiles;
    // split name -> sorted query ids
    std::map<std::string, std::vector<std::string>> splits;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<RoutingRecord> records;
};

inline ordered_json record_to_json(const RoutingRecord& r) {
    ordered_json j;
    j["task_name"] = r.task_name;
    j["task_description"] = r.task_description;
    j["query_id"] = r.query_id;
    j["query"] = r.query;
    j["ground_truth"] = r.ground_truth;
    j["metric"] = r.metric;
    j["llm_name"] = r.llm_name;
    j["pattern"] = to_string(r.pattern);
    j["input_tokens"] = r.input_tokens;
    j["output_tokens"] = r.output_tokens;
    j["performance"] = r.performance;
    j["cost"] = r.cost;
    j["response"] = r.response;
    if (r.judge_score) j["judge_score"] = *r.judge_score;
    if (!r.query_embedding.empty()) j["query_embedding"] = r.query_embedding;
    if (!r.task_embedding.empty()) j["task_embedding"] = r.task_embedding;
    return j;
}

inline RoutingRecord record_from_json(const json& j) {
    RoutingRecord r;
    r.task_name = j.at("task_name").get<std::string>();
    r.task_description = j.at("task_description").get<std::string>();
    r.query_id = j.at("query_id").get<std::string>();
    r.query = j.at("query").get<std::string>();
    r.ground_truth = j.at("ground_truth").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.llm_name = j.at("llm_name").get<std::string>();
    r.pattern = pattern_from_string(j.at("pattern").get<std::string>());
    r.input_tokens = j.at("input_tokens").get<int64_t>();
    r.output_tokens = j.at("output_tokens").get<int64_t>();
    r.performance = j.at("performance").get<double>();
    r.cost = j.at("cost").get<double>();
    r.response = j.at("response").get<std::string>();
    if (j.contains("judge_score") && !j["judge_score"].is_null())
        r.judge_score = j["judge_score"].get<double>();
    if (j.contains("query_embedding"))
        r.query_embedding = j["query_embedding"].get<std::vector<double>>();
    if (j.contains("task_embedding"))
        r.task_embedding = j["task_embedding"].get<std::vector<double>>();
    return r;
}

namespace detail {

inline constexpr const char* kMetaPrefix = "#meta ";

inline ordered_json meta_to_json(const DatasetMeta& m) {
    ordered_json j;
    j["embedding_dim"] = m.embedding_dim;
    j["token_counter"] = m.token_counter;
    ordered_json profiles = ordered_json::array();
    for (const auto& p : m.llm_profiles) profiles.push_back(profile_to_json(p));
    j["llm_profiles"] = std::move(profiles);
    ordered_json splits = ordered_json::object();
    for (const auto& [name, ids] : m.splits) splits[name] = ids;
    j["splits"] = std::move(splits);
    return j;
}

inline DatasetMeta meta_from_json(const json& j) {
    DatasetMeta m;
    m.embedding_dim = j.value("embedding_dim", 0);
    m.token_counter = j.value("token_counter", std::string("bytes4"));
    if (j.contains("llm_profiles"))
        for (const auto& pj : j["llm_profiles"]) m.llm_profiles.push_back(profile_from_json(pj));
    if (j.contains("splits"))
        for (const auto& [name, ids] : j["splits"].items())
            m.splits[name] = ids.get<std::vector<std::string>>();
    return m;
}

// Minimal RFC-4180 parser: quoted fields may contain commas, newlines,
// and doubled quotes. Returns one row per logical record.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            row_has_content = true;
        } else if (c == ',') {
            end_field();
            row_has_content = true;
        } else if (c == '\n') {
            if (row_has_content || !field.empty() || !row.empty()) end_row();
        } else if (c == '\r') {
            // swallowed; \r\n handled by the \n branch
        } else {
            field += c;
            row_has_content = true;
        }
        ++i;
    }
    if (in_quotes) fail("csv: unterminated quoted field");
    if (row_has_content || !field.empty() || !row.empty()) end_row();
    return rows;
}

// Embeddings in CSV cells: JSON array text or semicolon-separated numbers.
inline std::vector<double> parse_embedding_cell(const std::string& cell) {
    std::vector<double> out;
    if (cell.empty()) return out;
    if (cell.front() == '[') {
        for (const auto& v : json::parse(cell)) out.push_back(v.get<double>());
        return out;
    }
    size_t start = 0;
    while (start <= cell.size()) {
        size_t end = cell.find(';', start);
        std::string piece = cell.substr(start, end == std::string::npos ? end : end - start);
        if (!piece.empty()) out.push_back(std::stod(piece));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace detail

/// Structural validation. Cost reconciliation against the pricing table
/// runs only when the meta carries profiles.
inline void validate_dataset(const Dataset& ds) {
    std::set<std::tuple<std::string, std::string, Pattern>> keys;
    std::map<std::string, const RoutingRecord*> first_of_query;
    std::map<std::string, const LlmProfile*> profiles;
    for (const auto& p : ds.meta.llm_profiles) profiles[p.name] = &p;

    for (const auto& r : ds.records) {
        const std::string where = "record (" + r.query_id + ", " + r.llm_name + ", " +
                                  to_string(r.pattern) + ")";
        if (r.query_id.empty() || r.llm_name.empty() || r.task_name.empty())
            detail::fail(where + ": empty identifier field");
        if (r.performance < 0.0 || r.performance > 1.0)
            detail::fail(where + ": performance outside [0,1]");
        if (r.judge_score && (*r.judge_score < 0.0 || *r.judge_score > 1.0))
            detail::fail(where + ": judge_score outside [0,1]");
        if (r.input_tokens < 0 || r.output_tokens < 0)
            detail::fail(where + ": negative token count");
        if (r.cost < 0.0) detail::fail(where + ": negative cost");
        if (!keys.insert({r.query_id, r.llm_name, r.pattern}).second)
            detail::fail(where + ": duplicate (query_id, llm_name, pattern)");

        auto [it, fresh] = first_of_query.try_emplace(r.query_id, &r);
        if (!fresh) {
            const RoutingRecord& f = *it->second;
            if (r.query != f.query || r.task_name != f.task_name ||
                r.ground_truth != f.ground_truth || r.metric != f.metric)
                detail::fail(where + ": query fields disagree with earlier record of same query");
        }

        if (ds.meta.embedding_dim > 0) {
            for (const auto* e : {&r.query_embedding, &r.task_embedding})
                if (!e->empty() && static_cast<int>(e->size()) != ds.meta.embedding_dim)
                    detail::fail(where + ": embedding dimension != meta embedding_dim");
        }

        if (!profiles.empty()) {
            auto pit = profiles.find(r.llm_name);
            if (pit == profiles.end()) detail::fail(where + ": no profile for llm_name");
            double expect = estimate_cost(r.input_tokens, r.output_tokens, *pit->second);
            if (std::abs(r.cost - expect) > 1e-9)
                detail::fail(where + ": cost " + detail::format_fixed(r.cost, 12) +
                             " disagrees with pricing estimate " +
                             detail::format_fixed(expect, 12));
        }
    }
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::string out = detail::kMetaPrefix + detail::meta_to_json(ds.meta).dump() + "\n";
    for (const auto& r : ds.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    detail::write_file(path, out);
}

inline Dataset load_jsonl_dataset(const std::string& path) {
    Dataset ds;
    auto lines = detail::split_lines(detail::read_file(path));
    size_t start = 0;
    if (!lines.empty() && lines[0].rfind(detail::kMetaPrefix, 0) == 0) {
        ds.meta = detail::meta_from_json(
            json::parse(lines[0].substr(std::string(detail::kMetaPrefix).size())));
        start = 1;
    }
    for (size_t i = start; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            ds.records.push_back(record_from_json(json::parse(lines[i])));
        } catch (const std::exception& e) {
            detail::fail(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return ds;
}

/// CSV ingestion path. Header row names mirror the JSONL field names;
/// judge_score may be blank (absent), embeddings are JSON arrays or
/// semicolon-separated numbers.
inline Dataset load_csv_dataset(const std::string& path) {
    auto rows = detail::parse_csv(detail::read_file(path));
    if (rows.empty()) detail::fail("csv: no header row in " + path);
    const auto& header = rows[0];
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    auto need = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) detail::fail("csv: missing column " + name);
        return it->second;
    };
    auto maybe = [&](const std::string& name) -> std::optional<size_t> {
        auto it = col.find(name);
        if (it == col.end()) return std::nullopt;
        return it->second;
    };

    size_t c_task = need("task_name"), c_desc = need("task_description");
    size_t c_qid = need("query_id"), c_query = need("query"), c_gt = need("ground_truth");
    size_t c_metric = need("metric"), c_llm = need("llm_name"), c_pat = need("pattern");
    size_t c_in = need("input_tokens"), c_out = need("output_tokens");
    size_t c_perf = need("performance"), c_cost = need("cost"), c_resp = need("response");
    auto c_judge = maybe("judge_score");
    auto c_qemb = maybe("query_embedding");
    auto c_temb = maybe("task_embedding");

    Dataset ds;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        auto cell = [&](size_t c) -> const std::string& {
            static const std::string empty;
            return c < row.size() ? row[c] : empty;
        };
        RoutingRecord r;
        r.task_name = cell(c_task);
        r.task_description = cell(c_desc);
        r.query_id = cell(c_qid);
        r.query = cell(c_query);
        r.ground_truth = cell(c_gt);
        r.metric = cell(c_metric);
        r.llm_name = cell(c_llm);
        r.pattern = pattern_from_string(cell(c_pat));
        r.input_tokens = std::stoll(cell(c_in));
        r.output_tokens = std::stoll(cell(c_out));
        r.performance = std::stod(cell(c_perf));
        r.cost = std::stod(cell(c_cost));
        r.response = cell(c_resp);
        if (c_judge && !cell(*c_judge).empty()) r.judge_score = std::stod(cell(*c_judge));
        if (c_qemb) r.query_embedding = detail::parse_embedding_cell(cell(*c_qemb));
        if (c_temb) r.task_embedding = detail::parse_embedding_cell(cell(*c_temb));
        ds.records.push_back(std::move(r));
    }
    for (const auto& r : ds.records) {
        if (!r.query_embedding.empty()) {
            ds.meta.embedding_dim = static_cast<int>(r.query_embedding.size());
            break;
        }
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, const std::string& format = "") {
    std::string fmt = format;
    if (fmt.empty()) {
        if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") fmt = "csv";
        else fmt = "jsonl";
    }
    if (fmt == "jsonl") return load_jsonl_dataset(path);
    if (fmt == "csv") return load_csv_dataset(path);
    detail::fail("unknown dataset format: " + fmt);
}

/// Assigns whole queries to named splits. Fractions must sum to at most 1;
/// any remainder stays unassigned. Same seed, same ids, same split.
inline void split_dataset(Dataset& ds, const std::vector<std::pair<std::string, double>>& fractions,
                          uint64_t seed) {
    double total = 0.0;
    for (const auto& [name, f] : fractions) {
        if (f < 0.0) detail::fail("split fraction for " + name + " is negative");
        total += f;
    }
    if (total > 1.0 + 1e-12) detail::fail("split fractions sum to more than 1");

    std::set<std::string> id_set;
    for (const auto& r : ds.records) id_set.insert(r.query_id);
    std::vector<std::string> ids(id_set.begin(), id_set.end());
    std::mt19937_64 rng(seed);
    detail::deterministic_shuffle(ids, rng);

    ds.meta.splits.clear();
    const size_t n = ids.size();
    size_t cursor = 0;
    double cum = 0.0;
    for (const auto& [name, f] : fractions) {
        cum += f;
        size_t boundary = std::min(n, static_cast<size_t>(std::floor(cum * static_cast<double>(n) + 0.5)));
        std::vector<std::string> assigned(ids.begin() + static_cast<ptrdiff_t>(cursor),
                                          ids.begin() + static_cast<ptrdiff_t>(boundary));
        std::sort(assigned.begin(), assigned.end());
        ds.meta.splits[name] = std::move(assigned);
        cursor = boundary;
    }
}

/// All records for one query, ordered by (llm_name, pattern).
struct QueryGroup {
    std::string query_id;
    std::vector<const RoutingRecord*> records;

    const RoutingRecord& front() const { return *records.front(); }
    const std::string& query() const { return front().query; }
    const std::string& task_name() const { return front().task_name; }
    const std::string& task_description() const { return front().task_description; }
    const std::string& ground_truth() const { return front().ground_truth; }
    const std::string& metric() const { return front().metric; }

    // First non-empty embedding in the group.
    const std::vector<double>& query_embedding() const {
        for (const auto* r : records)
            if (!r->query_embedding.empty()) return r->query_embedding;
        return front().query_embedding;
    }
    const std::vector<double>& task_embedding() const {
        for (const auto* r : records)
            if (!r->task_embedding.empty()) return r->task_embedding;
        return front().task_embedding;
    }
};

/// Groups records by query_id, ordered by query_id. When `split` is given,
/// only queries assigned to that split are returned.
inline std::vector<QueryGroup> group_by_query(const Dataset& ds, const std::string& split = "") {
    const std::vector<std::string>* keep = nullptr;
    if (!split.empty()) {
        auto it = ds.meta.splits.find(split);
        if (it == ds.meta.splits.end()) detail::fail("no split named: " + split);
        keep = &it->second;
    }
    std::map<std::string, QueryGroup> groups;
    for (const auto& r : ds.records) {
        if (keep && !std::binary_search(keep->begin(), keep->end(), r.query_id)) continue;
        auto& g = groups[r.query_id];
        g.query_id = r.query_id;
        g.records.push_back(&r);
    }
    std::vector<QueryGroup> out;
    out.reserve(groups.size());
    for (auto& [id, g] : groups) {
        std::sort(g.records.begin(), g.records.end(),
                  [](const RoutingRecord* a, const RoutingRecord* b) {
                      if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
                      return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
                  });
        out.push_back(std::move(g));
    }
    return out;
}

/// Benchmark domain for a task name. Matching ignores case and
/// punctuation so "Natural Questions" and "naturalquestions" agree.
inline std::string task_domain(const std::string& task_name) {
    std::string key;
    for (unsigned char c : task_name)
        if (std::isalnum(c)) key += static_cast<char>(std::tolower(c));
    static const std::map<std::string, std::string> domains = {
        {"gsm8k", "math"},           {"math", "math"},
        {"mbpp", "code"},            {"humaneval", "code"},
        {"commonsenseqa", "commonsense"}, {"arc", "commonsense"},
        {"hellaswag", "commonsense"},     {"openbookqa", "commonsense"},
        {"naturalquestions", "world"},    {"triviaqa", "world"},
        {"squad", "read"},           {"boolq", "read"},
        {"mmlu", "popular"},         {"gpqa", "popular"},
    };
    auto it = domains.find(key);
    return it == domains.end() ? "other" : it->second;
}

/// Fixed column order for domain-wise reports.
inline const std::vector<std::string>& report_domains() {
    static const std::vector<std::string> d = {"math", "code", "commonsense",
                                               "world", "read", "popular"};
    return d;
}

/// Histogram of per-query judge-score gaps between scale classes.
/// A query contributes to a pair only when it has judge-scored records
/// for both scales of that pair.
struct ScaleGapHistogram {
    int bins = 0;
    std::vector<int64_t> small_minus_medium;
    std::vector<int64_t> medium_minus_large;
    std::vector<int64_t> small_minus_large;
    int64_t queries_considered = 0;
};

inline ScaleGapHistogram scale_gap_histogram(const Dataset& ds, int bins = 20) {
    if (bins <= 0) detail::fail("scale_gap_histogram: bins must be positive");
    if (ds.meta.llm_profiles.empty())
        detail::fail("scale_gap_histogram: dataset meta carries no llm profiles");
    std::map<std::string, Scale> scale_of;
    for (const auto& p : ds.meta.llm_profiles) scale_of[p.name] = p.scale;

    ScaleGapHistogram h;
    h.bins = bins;
    h.small_minus_medium.assign(static_cast<size_t>(bins), 0);
    h.medium_minus_large.assign(static_cast<size_t>(bins), 0);
    h.small_minus_large.assign(static_cast<size_t>(bins), 0);

    auto bin_of = [bins](double gap) {
        // uniform bins over [-1, 1]; gap == 1 lands in the last bin
        int b = static_cast<int>(std::floor((gap + 1.0) / 2.0 * bins));
        return static_cast<size_t>(std::clamp(b, 0, bins - 1));
    };

    for (const auto& g : group_by_query(ds)) {
        double sum[3] = {0, 0, 0};
        int64_t cnt[3] = {0, 0, 0};
        for (const auto* r : g.records) {
            if (!r->judge_score) continue;
            auto it = scale_of.find(r->llm_name);
            if (it == scale_of.end()) detail::fail("no profile for llm_name: " + r->llm_name);
            int s = static_cast<int>(it->second);
            sum[s] += *r->judge_score;
            ++cnt[s];
        }
        auto mean = [&](Scale s) { return sum[static_cast<int>(s)] / cnt[static_cast<int>(s)]; };
        auto has = [&](Scale s) { return cnt[static_cast<int>(s)] > 0; };
        bool contributed = false;
        if (has(Scale::Small) && has(Scale::Medium)) {
            ++h.small_minus_medium[bin_of(mean(Scale::Small) - mean(Scale::Medium))];
            contributed = true;
        }
        if (has(Scale::Medium) && has(Scale::Large)) {
            ++h.medium_minus_large[bin_of(mean(Scale::Medium) - mean(Scale::Large))];
            contributed = true;
        }
        if (has(Scale::Small) && has(Scale::Large)) {
            ++h.small_minus_large[bin_of(mean(Scale::Small) - mean(Scale::Large))];
            contributed = true;
        }
        if (contributed) ++h.queries_considered;
    }
    return h;
}

}  // namespace routefuse
