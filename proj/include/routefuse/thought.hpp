#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/gateway.hpp"
#include "routefuse/routers.hpp"

namespace routefuse {

enum class SelectionKind { Performance, Judge, Hybrid };

inline std::string to_string(SelectionKind k) {
    switch (k) {
        case SelectionKind::Performance: return "performance";
        case SelectionKind::Judge: return "judge";
        case SelectionKind::Hybrid: return "hybrid";
    }
    detail::fail("invalid SelectionKind value");
}

inline SelectionKind selection_kind_from_string(const std::string& s) {
    if (s == "performance") return SelectionKind::Performance;
    if (s == "judge") return SelectionKind::Judge;
    if (s == "hybrid") return SelectionKind::Hybrid;
    detail::fail("unknown selection kind: " + s);
}

/// How top responses are picked per query. Hybrid pools the best
/// hybrid_pool by performance, then keeps the top k of those by judge.
struct SelectionStrategy {
    SelectionKind kind = SelectionKind::Performance;
    int k = 3;
    int hybrid_pool = 5;

    bool operator==(const SelectionStrategy&) const = default;
};

inline void validate_strategy(const SelectionStrategy& s) {
    if (s.k <= 0) detail::fail("selection strategy: k must be positive");
    if (s.kind == SelectionKind::Hybrid && s.hybrid_pool < s.k)
        detail::fail("selection strategy: hybrid_pool must be >= k");
}

struct TopKSelection {
    std::vector<const RoutingRecord*> records;
    bool short_group = false;  // group had fewer than k records
};

namespace detail {

inline bool perf_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (a->performance != b->performance) return a->performance > b->performance;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
}

inline bool judge_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (*a->judge_score != *b->judge_score) return *a->judge_score > *b->judge_score;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return static_cast<int>(a->pattern) < static_cast<int>(b->pattern);
}

inline void require_judged(const std::vector<const RoutingRecord*>& records) {
    for (const auto* r : records)
        if (!r->judge_score)
            fail("judge-based selection: record (" + r->query_id + ", " + r->llm_name + ", " +
                 to_string(r->pattern) + ") has no judge score");
}

}  // namespace detail

/// Top responses of one query group under the strategy. A group shorter
/// than k returns everything it has, flagged. Hybrid with
/// hybrid_pool == k is defined as performance selection (stage two picks
/// k of k, a no-op).
inline TopKSelection select_top_k(const QueryGroup& g, const SelectionStrategy& s) {
    validate_strategy(s);
    TopKSelection out;
    std::vector<const RoutingRecord*> pool = g.records;
    SelectionKind kind = s.kind;
    if (kind == SelectionKind::Hybrid && s.hybrid_pool == s.k) kind = SelectionKind::Performance;

    switch (kind) {
        case SelectionKind::Performance:
            std::sort(pool.begin(), pool.end(), detail::perf_order);
            break;
        case SelectionKind::Judge:
            detail::require_judged(pool);
            std::sort(pool.begin(), pool.end(), detail::judge_order);
            break;
        case SelectionKind::Hybrid: {
            std::sort(pool.begin(), pool.end(), detail::perf_order);
            if (pool.size() > static_cast<size_t>(s.hybrid_pool))
                pool.resize(static_cast<size_t>(s.hybrid_pool));
            detail::require_judged(pool);
            std::sort(pool.begin(), pool.end(), detail::judge_order);
            break;
        }
    }
    if (pool.size() > static_cast<size_t>(s.k)) pool.resize(static_cast<size_t>(s.k));
    out.short_group = pool.size() < static_cast<size_t>(s.k);
    out.records = std::move(pool);
    return out;
}

/// Summarizer prompt; the template enumerates exactly three solutions.
/// Payloads are spliced between fixed segments, never re-parsed.
inline std::string render_summarizer_prompt(const std::string& query,
                                            const std::vector<std::string>& responses) {
    if (responses.size() != 3)
        detail::fail("render_summarizer_prompt: expected exactly 3 responses, got " +
                     std::to_string(responses.size()));
    std::string out;
    out +=
        "Given this question and example solutions, extract a concise thought template "
        "that captures the effective reasoning pattern and can serve as guidance:\n"
        "\n"
        "Question: ";
    out += query;
    out += "\n\nHere are 3 high-performing solutions:\n";
    for (size_t i = 0; i < 3; ++i) {
        out += "Solution " + std::to_string(i + 1) + ": ";
        out += responses[i];
        out += '\n';
    }
    out +=
        "\n"
        "Please create a concise and clear thought template (1–5 sentences total) "
        "focusing on:\n"
        "- Core Task Summarization: Identify the core problem type and general approach "
        "needed (1 sentence).\n"
        "- Reasoning Step: Provide a clear chain of thought to address this problem "
        "(1–3 sentences).\n"
        "- Answer Template: Describe the preferred answer format or structure (1 sentence).\n"
        "\n"
        "Your template should be specific enough to guide similar problems but general "
        "enough to work across variations.\n"
        "\n"
        "Thought Template:";
    return out;
}

inline const std::string& summarizer_system_prompt() {
    static const std::string prompt =
        "You are an expert at distilling reasoning patterns into concise thought templates.";
    return prompt;
}

// ---------------------------------------------------------------------------
// Template store
// ---------------------------------------------------------------------------

inline constexpr int kPromptBlockVersion = 1;

struct ThoughtTemplate {
    std::string source_query_id;
    std::string template_text;
    std::vector<RouterLabel> source_llms;  // the records the template came from
    SelectionStrategy strategy;
    std::vector<double> query_embedding;
};

struct TemplateStore {
    std::vector<ThoughtTemplate> templates;
    int embedding_dim = 0;
};

inline void validate_store(const TemplateStore& store) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& t : store.templates) {
        if (t.template_text.empty())
            detail::fail("template store: empty template for " + t.source_query_id);
        if (static_cast<int>(t.query_embedding.size()) != store.embedding_dim)
            detail::fail("template store: embedding dim mismatch for " + t.source_query_id);
        std::string strat = to_string(t.strategy.kind) + "/" + std::to_string(t.strategy.k) + "/" +
                            std::to_string(t.strategy.hybrid_pool);
        if (!seen.insert({t.source_query_id, strat}).second)
            detail::fail("template store: duplicate template for " + t.source_query_id +
                         " under strategy " + strat);
    }
}

struct TemplateBuildResult {
    TemplateStore store;
    std::vector<std::string> pending;  // query ids still lacking a template
};

/// Summarizes the top three responses of every train query into a thought
/// template. Queries already in `existing` are carried over untouched;
/// summarizer failures leave the query pending and the build running.
inline TemplateBuildResult build_template_store(const std::vector<QueryGroup>& train,
                                                const SelectionStrategy& s, Backend& summarizer,
                                                const TemplateStore& existing = {}) {
    validate_strategy(s);
    if (s.k != 3)
        detail::fail("build_template_store: the summarizer template enumerates exactly 3 "
                     "solutions; strategy k must be 3");

    TemplateBuildResult result;
    std::set<std::string> have;
    for (const auto& t : existing.templates) {
        result.store.templates.push_back(t);
        have.insert(t.source_query_id);
    }

    struct Item {
        const QueryGroup* group;
        TopKSelection selection;
    };
    std::vector<Item> work;
    std::mutex mutex;  // guards result
    for (const auto& g : train) {
        if (have.count(g.query_id)) continue;
        if (g.query_embedding().empty())
            detail::fail("build_template_store: query " + g.query_id + " has no embedding");
        if (result.store.embedding_dim == 0)
            result.store.embedding_dim = static_cast<int>(g.query_embedding().size());
        TopKSelection sel = select_top_k(g, s);
        if (sel.records.size() != 3) {
            result.pending.push_back(g.query_id);  // too few responses to summarize
            continue;
        }
        work.push_back({&g, std::move(sel)});
    }
    if (result.store.embedding_dim == 0 && !result.store.templates.empty())
        result.store.embedding_dim = static_cast<int>(result.store.templates[0].query_embedding.size());

    detail::parallel_for(work.size(), summarizer.config().max_in_flight, [&](size_t i) {
        const QueryGroup& g = *work[i].group;
        std::vector<std::string> responses;
        for (const auto* r : work[i].selection.records) responses.push_back(r->response);
        ThoughtTemplate t;
        try {
            t.template_text = summarizer
                                  .complete(summarizer_system_prompt(),
                                            render_summarizer_prompt(g.query(), responses))
                                  .text;
        } catch (const std::exception&) {
            std::lock_guard lock(mutex);
            result.pending.push_back(g.query_id);
            return;
        }
        if (t.template_text.empty()) {
            std::lock_guard lock(mutex);
            result.pending.push_back(g.query_id);
            return;
        }
        t.source_query_id = g.query_id;
        for (const auto* r : work[i].selection.records)
            t.source_llms.push_back({r->llm_name, r->pattern});
        t.strategy = s;
        t.query_embedding = g.query_embedding();
        std::lock_guard lock(mutex);
        result.store.templates.push_back(std::move(t));
    });

    std::sort(result.store.templates.begin(), result.store.templates.end(),
              [](const ThoughtTemplate& a, const ThoughtTemplate& b) {
                  return a.source_query_id < b.source_query_id;
              });
    std::sort(result.pending.begin(), result.pending.end());
    validate_store(result.store);
    return result;
}

struct RetrievedTemplate {
    const ThoughtTemplate* tmpl;
    double similarity;
};

/// Top-d templates by cosine similarity to the probe embedding, ties by
/// source_query_id. The probe's own query id is excluded so evaluating on
/// training queries cannot retrieve its own template.
inline std::vector<RetrievedTemplate> retrieve(const TemplateStore& store,
                                               const std::vector<double>& query_embedding,
                                               int d, const std::string& exclude_query_id = "") {
    if (d <= 0) detail::fail("retrieve: d must be positive");
    if (static_cast<int>(query_embedding.size()) != store.embedding_dim)
        detail::fail("retrieve: probe dim " + std::to_string(query_embedding.size()) +
                     " != store dim " + std::to_string(store.embedding_dim));
    std::vector<RetrievedTemplate> all;
    for (const auto& t : store.templates) {
        if (!exclude_query_id.empty() && t.source_query_id == exclude_query_id) continue;
        all.push_back({&t, detail::cosine_similarity(t.query_embedding, query_embedding)});
    }
    std::sort(all.begin(), all.end(), [](const RetrievedTemplate& a, const RetrievedTemplate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.tmpl->source_query_id < b.tmpl->source_query_id;
    });
    if (all.size() > static_cast<size_t>(d)) all.resize(static_cast<size_t>(d));
    return all;
}

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

enum class Paradigm { ZeroShot, FewShot, ThoughtTemplate };

inline std::string to_string(Paradigm p) {
    switch (p) {
        case Paradigm::ZeroShot: return "zero_shot";
        case Paradigm::FewShot: return "few_shot";
        case Paradigm::ThoughtTemplate: return "thought_template";
    }
    detail::fail("invalid Paradigm value");
}

inline Paradigm paradigm_from_string(const std::string& s) {
    if (s == "zero_shot") return Paradigm::ZeroShot;
    if (s == "few_shot") return Paradigm::FewShot;
    if (s == "thought_template") return Paradigm::ThoughtTemplate;
    detail::fail("unknown paradigm: " + s);
}

/// One retrieved demonstration: the similar past question plus either its
/// raw top responses (few-shot) or its thought template.
struct Demonstration {
    std::string question;
    std::vector<std::string> responses;
    std::string template_text;
};

/// User-prompt text for the three inference paradigms. Zero-shot is the
/// bare query; the other two emit d demonstration blocks then the query.
/// Block layout is stable and versioned by kPromptBlockVersion.
inline std::string assemble_prompt(const std::string& query, Paradigm paradigm,
                                   const std::vector<Demonstration>& demos, int d = 3) {
    if (paradigm == Paradigm::ZeroShot) return query;
    if (d <= 0) detail::fail("assemble_prompt: d must be positive");
    if (demos.size() < static_cast<size_t>(d))
        detail::fail("assemble_prompt: need " + std::to_string(d) + " demonstrations, have " +
                     std::to_string(demos.size()));

    std::string out;
    if (paradigm == Paradigm::FewShot) {
        out += "Here are similar questions with high-performing solutions:\n";
        for (int i = 0; i < d; ++i) {
            const Demonstration& demo = demos[static_cast<size_t>(i)];
            if (demo.responses.empty())
                detail::fail("assemble_prompt: few-shot demonstration " + std::to_string(i + 1) +
                             " carries no responses");
            out += "\nExample " + std::to_string(i + 1) + ":\n";
            out += "Question: " + demo.question + "\n";
            for (size_t j = 0; j < demo.responses.size(); ++j)
                out += "Solution " + std::to_string(j + 1) + ": " + demo.responses[j] + "\n";
        }
    } else {
        out += "Here are similar questions with thought templates that capture effective "
               "reasoning patterns:\n";
        for (int i = 0; i < d; ++i) {
            const Demonstration& demo = demos[static_cast<size_t>(i)];
            if (demo.template_text.empty())
                detail::fail("assemble_prompt: demonstration " + std::to_string(i + 1) +
                             " carries no thought template");
            out += "\nExample " + std::to_string(i + 1) + ":\n";
            out += "Question: " + demo.question + "\n";
            out += "Thought Template: " + demo.template_text + "\n";
        }
    }
    out += "\nNow answer this question:\n";
    out += query;
    return out;
}

// ---------------------------------------------------------------------------
// Store persistence
// ---------------------------------------------------------------------------

inline ordered_json strategy_to_json(const SelectionStrategy& s) {
    return {{"kind", to_string(s.kind)}, {"k", s.k}, {"hybrid_pool", s.hybrid_pool}};
}

inline SelectionStrategy strategy_from_json(const json& j) {
    SelectionStrategy s;
    s.kind = selection_kind_from_string(j.at("kind").get<std::string>());
    s.k = j.at("k").get<int>();
    s.hybrid_pool = j.value("hybrid_pool", 5);
    validate_strategy(s);
    return s;
}

inline void save_template_store(const std::string& path, const TemplateStore& store) {
    ordered_json meta;
    meta["format_version"] = 1;
    meta["block_version"] = kPromptBlockVersion;
    meta["embedding_dim"] = store.embedding_dim;
    std::string out = std::string(detail::kMetaPrefix) + meta.dump() + "\n";
    for (const auto& t : store.templates) {
        ordered_json j;
        j["source_query_id"] = t.source_query_id;
        j["template_text"] = t.template_text;
        ordered_json sources = ordered_json::array();
        for (const auto& l : t.source_llms)
            sources.push_back({{"llm_name", l.llm_name}, {"pattern", to_string(l.pattern)}});
        j["source_llms"] = std::move(sources);
        j["strategy"] = strategy_to_json(t.strategy);
        j["query_embedding"] = t.query_embedding;
        out += j.dump() + "\n";
    }
    detail::write_file_atomic(path, out);
}

inline TemplateStore load_template_store(const std::string& path) {
    TemplateStore store;
    auto lines = detail::split_lines(detail::read_file(path));
    if (lines.empty() || lines[0].rfind(detail::kMetaPrefix, 0) != 0)
        detail::fail("template store: missing meta header in " + path);
    json meta = json::parse(lines[0].substr(std::string(detail::kMetaPrefix).size()));
    if (meta.value("format_version", 0) != 1)
        detail::fail("template store: unsupported format version");
    store.embedding_dim = meta.at("embedding_dim").get<int>();
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        json j = json::parse(lines[i]);
        ThoughtTemplate t;
        t.source_query_id = j.at("source_query_id").get<std::string>();
        t.template_text = j.at("template_text").get<std::string>();
        for (const auto& lj : j.at("source_llms"))
            t.source_llms.push_back({lj.at("llm_name").get<std::string>(),
                                     pattern_from_string(lj.at("pattern").get<std::string>())});
        t.strategy = strategy_from_json(j.at("strategy"));
        t.query_embedding = j.at("query_embedding").get<std::vector<double>>();
        store.templates.push_back(std::move(t));
    }
    validate_store(store);
    return store;
}

}  // namespace routefuse
