#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"

namespace routefuse {

enum class SftMode { RouterSft, LabelOnlySft };

inline std::string to_string(SftMode m) {
    switch (m) {
        case SftMode::RouterSft: return "router_sft";
        case SftMode::LabelOnlySft: return "label_only_sft";
    }
    detail::fail("invalid SftMode value");
}

inline SftMode sft_mode_from_string(const std::string& s) {
    if (s == "router_sft") return SftMode::RouterSft;
    if (s == "label_only_sft") return SftMode::LabelOnlySft;
    detail::fail("unknown sft mode: " + s);
}

enum class RankStrategy { TaskPerformance, LlmJudge, Hybrid };

inline std::string to_string(RankStrategy s) {
    switch (s) {
        case RankStrategy::TaskPerformance: return "task_performance";
        case RankStrategy::LlmJudge: return "llm_judge";
        case RankStrategy::Hybrid: return "hybrid";
    }
    detail::fail("invalid RankStrategy value");
}

inline RankStrategy rank_strategy_from_string(const std::string& s) {
    if (s == "task_performance") return RankStrategy::TaskPerformance;
    if (s == "llm_judge") return RankStrategy::LlmJudge;
    if (s == "hybrid") return RankStrategy::Hybrid;
    detail::fail("unknown rank strategy: " + s);
}

struct ExportSpec {
    SftMode mode = SftMode::RouterSft;
    int k = 5;
    RankStrategy strategy = RankStrategy::TaskPerformance;
    bool include_ground_truth = true;      // router_sft only; label_only is all ground truth
    bool include_zero_performance = false; // perf-0 responses excluded by default
    bool direct_only = false;              // both patterns eligible by default
    bool chat_format = false;              // emit chat-message form instead
};

struct SftExample {
    std::string instruction;
    std::string input;  // reserved; empty under the instruction wrapper used here
    std::string output;
    std::string source;  // "llm_response" | "ground_truth"
    std::string source_llm;
    std::optional<Pattern> pattern;
    RankStrategy strategy = RankStrategy::TaskPerformance;
    int rank = 0;  // 0 = ground truth; responses rank from 1
    std::string query_id;
    std::string task_name;
};

namespace detail {

inline bool rank_perf_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (a->performance != b->performance) return a->performance > b->performance;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
}

inline bool rank_judge_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (*a->judge_score != *b->judge_score) return *a->judge_score > *b->judge_score;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
}

// Performance first; judge breaks only exact performance ties.
inline bool rank_hybrid_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (a->performance != b->performance) return a->performance > b->performance;
    if (*a->judge_score != *b->judge_score) return *a->judge_score > *b->judge_score;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
}

inline void rank_records(std::vector<const RoutingRecord*>& records, RankStrategy strategy) {
    if (strategy != RankStrategy::TaskPerformance) {
        for (const auto* r : records)
            if (!r->judge_score)
                fail("rank_responses under " + to_string(strategy) + ": record (" + r->query_id +
                     ", " + r->llm_name + ", " + to_string(r->pattern) + ") has no judge score");
    }
    switch (strategy) {
        case RankStrategy::TaskPerformance:
            std::sort(records.begin(), records.end(), rank_perf_order);
            break;
        case RankStrategy::LlmJudge:
            std::sort(records.begin(), records.end(), rank_judge_order);
            break;
        case RankStrategy::Hybrid:
            std::sort(records.begin(), records.end(), rank_hybrid_order);
            break;
    }
}

}  // namespace detail

/// Full ordering of a query's responses under the export strategy; always
/// a permutation of the group.
inline std::vector<const RoutingRecord*> rank_responses(const QueryGroup& g,
                                                        RankStrategy strategy) {
    std::vector<const RoutingRecord*> records = g.records;
    detail::rank_records(records, strategy);
    return records;
}

inline std::string sft_instruction(const QueryGroup& g) {
    return g.task_description() + "\n\n" + g.query();
}

/// Pure construction of the export, ordered by (query_id, rank). Both
/// modes share the eligibility filters so their totals always align:
/// per query, min(K, eligible) response slots plus one ground truth.
inline std::vector<SftExample> build_sft_examples(const std::vector<QueryGroup>& groups,
                                                  const ExportSpec& spec,
                                                  std::map<std::string, int64_t>* shortfalls = nullptr) {
    if (groups.empty()) detail::fail("export_sft: no query groups");
    if (spec.k <= 0) detail::fail("export_sft: K must be positive");

    std::vector<const QueryGroup*> ordered;
    for (const auto& g : groups) ordered.push_back(&g);
    std::sort(ordered.begin(), ordered.end(),
              [](const QueryGroup* a, const QueryGroup* b) { return a->query_id < b->query_id; });

    std::vector<SftExample> out;
    for (const QueryGroup* g : ordered) {
        std::vector<const RoutingRecord*> eligible;
        for (const auto* r : g->records) {
            if (spec.direct_only && r->pattern != Pattern::Direct) continue;
            if (!spec.include_zero_performance && r->performance == 0.0) continue;
            eligible.push_back(r);
        }
        const int emit = std::min<int>(spec.k, static_cast<int>(eligible.size()));
        if (shortfalls && emit < spec.k) (*shortfalls)[g->query_id] = spec.k - emit;

        auto ground_truth_example = [&](int rank) {
            SftExample e;
            e.instruction = sft_instruction(*g);
            e.output = g->ground_truth();
            e.source = "ground_truth";
            e.strategy = spec.strategy;
            e.rank = rank;
            e.query_id = g->query_id;
            e.task_name = g->task_name();
            return e;
        };

        if (spec.mode == SftMode::LabelOnlySft) {
            for (int rank = 0; rank <= emit; ++rank) out.push_back(ground_truth_example(rank));
            continue;
        }

        if (spec.include_ground_truth) out.push_back(ground_truth_example(0));
        detail::rank_records(eligible, spec.strategy);
        for (int i = 0; i < emit; ++i) {
            const RoutingRecord* r = eligible[static_cast<size_t>(i)];
            SftExample e;
            e.instruction = sft_instruction(*g);
            e.output = r->response;
            e.source = "llm_response";
            e.source_llm = r->llm_name;
            e.pattern = r->pattern;
            e.strategy = spec.strategy;
            e.rank = i + 1;
            e.query_id = g->query_id;
            e.task_name = g->task_name();
            out.push_back(std::move(e));
        }
    }
    return out;
}

struct SftManifest {
    ExportSpec spec;
    int64_t total_examples = 0;
    int64_t total_queries = 0;
    int64_t total_shortfall = 0;
    std::map<std::string, int64_t> shortfalls_by_query;  // only queries short of K
    // (task, source, source_llm) -> emitted examples; source_llm empty for ground truth
    std::map<std::tuple<std::string, std::string, std::string>, int64_t> counts;
    std::string content_hash;  // FNV-1a of the corpus file bytes
};

inline ordered_json sft_example_to_json(const SftExample& e, bool chat_format) {
    ordered_json meta;
    meta["query_id"] = e.query_id;
    meta["task_name"] = e.task_name;
    meta["source"] = e.source;
    if (e.source == "llm_response") {
        meta["source_llm"] = e.source_llm;
        meta["pattern"] = to_string(*e.pattern);
    }
    meta["strategy"] = to_string(e.strategy);
    meta["rank"] = e.rank;

    ordered_json j;
    if (chat_format) {
        j["messages"] = ordered_json::array({{{"role", "user"}, {"content", e.instruction}},
                                             {{"role", "assistant"}, {"content", e.output}}});
    } else {
        j["instruction"] = e.instruction;
        j["input"] = e.input;
        j["output"] = e.output;
    }
    j["meta"] = std::move(meta);
    return j;
}

/// Writes the corpus JSONL and its manifest; returns the manifest.
inline SftManifest export_sft(const std::vector<QueryGroup>& groups, const ExportSpec& spec,
                              const std::string& corpus_path, const std::string& manifest_path) {
    SftManifest manifest;
    manifest.spec = spec;
    manifest.total_queries = static_cast<int64_t>(groups.size());

    std::map<std::string, int64_t> shortfalls;
    auto examples = build_sft_examples(groups, spec, &shortfalls);
    manifest.shortfalls_by_query = std::move(shortfalls);
    for (const auto& [id, n] : manifest.shortfalls_by_query) manifest.total_shortfall += n;
    manifest.total_examples = static_cast<int64_t>(examples.size());

    std::string corpus;
    for (const auto& e : examples) {
        corpus += sft_example_to_json(e, spec.chat_format).dump() + "\n";
        ++manifest.counts[{e.task_name, e.source, e.source_llm}];
    }
    detail::write_file(corpus_path, corpus);
    manifest.content_hash = detail::fnv1a_hex(corpus);

    ordered_json mj;
    mj["spec"] = {{"mode", to_string(spec.mode)},
                  {"k", spec.k},
                  {"strategy", to_string(spec.strategy)},
                  {"include_ground_truth", spec.include_ground_truth},
                  {"include_zero_performance", spec.include_zero_performance},
                  {"direct_only", spec.direct_only},
                  {"chat_format", spec.chat_format},
                  {"instruction_wrapper", "task_description + \"\\n\\n\" + query"}};
    mj["total_examples"] = manifest.total_examples;
    mj["total_queries"] = manifest.total_queries;
    mj["total_shortfall"] = manifest.total_shortfall;
    ordered_json sf = ordered_json::object();
    for (const auto& [id, n] : manifest.shortfalls_by_query) sf[id] = n;
    mj["shortfalls_by_query"] = std::move(sf);
    ordered_json counts = ordered_json::array();
    for (const auto& [key, n] : manifest.counts) {
        const auto& [task, source, llm] = key;
        ordered_json row;
        row["task"] = task;
        row["source"] = source;
        if (!llm.empty()) row["source_llm"] = llm;
        row["count"] = n;
        counts.push_back(std::move(row));
    }
    mj["counts"] = std::move(counts);
    mj["content_hash"] = manifest.content_hash;
    detail::write_file(manifest_path, mj.dump(2) + "\n");
    return manifest;
}

/// Splits groups into disjoint corpora by task; every task must be mapped.
inline std::map<std::string, std::vector<QueryGroup>> domain_partition(
    const std::vector<QueryGroup>& groups, const std::map<std::string, std::string>& partition) {
    std::map<std::string, std::vector<QueryGroup>> out;
    for (const auto& g : groups) {
        auto it = partition.find(g.task_name());
        if (it == partition.end()) detail::fail("domain_partition: unmapped task " + g.task_name());
        out[it->second].push_back(g);
    }
    return out;
}

/// Default split: code-domain tasks train separately from everything else.
inline std::map<std::string, std::string> default_code_partition(
    const std::vector<QueryGroup>& groups) {
    std::map<std::string, std::string> partition;
    for (const auto& g : groups)
        partition[g.task_name()] = task_domain(g.task_name()) == "code" ? "code" : "general";
    return partition;
}

}  // namespace routefuse
