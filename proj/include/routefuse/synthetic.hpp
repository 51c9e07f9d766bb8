#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/gateway.hpp"
#include "routefuse/judge.hpp"
#include "routefuse/pricing.hpp"
#include "routefuse/thought.hpp"

namespace routefuse {

/// Synthetic routing-log generators. Offline tests and the bundled demo
/// run entirely on these; nothing here touches the network.

struct FixtureOptions {
    int queries_per_task = 30;
    int embedding_dim = 16;
    uint64_t seed = 20240601;
    double train_fraction = 0.7;
};

inline std::vector<LlmProfile> fixture_profiles() {
    return {
        {"nano-4b", Scale::Small, 4.0, 0.10, 0.10, "small fast general model"},
        {"swift-8b", Scale::Small, 8.0, 0.20, 0.20, "small chat model"},
        {"steady-32b", Scale::Medium, 32.0, 0.80, 0.80, "medium generalist"},
        {"broad-70b", Scale::Medium, 70.0, 0.90, 0.90, "medium instruction model"},
        {"apex-120b", Scale::Large, 120.0, 1.80, 1.80, "large flagship"},
    };
}

namespace detail {

struct FixtureTask {
    std::string name;
    std::string metric;
    std::string description;
};

inline const std::vector<FixtureTask>& fixture_tasks() {
    static const std::vector<FixtureTask> tasks = {
        {"gsm8k", "exact_match_accuracy", "grade school math word problems"},
        {"mbpp", "cem", "basic programming exercises"},
        {"commonsenseqa", "multiple_choice_accuracy", "commonsense multiple choice"},
        {"naturalquestions", "token_f1", "open-domain factoid questions"},
        {"squad", "token_f1", "reading comprehension over passages"},
        {"mmlu", "multiple_choice_accuracy", "multi-subject exam questions"},
        {"arc", "multiple_choice_accuracy", "science multiple choice"},
        {"triviaqa", "exact_match_accuracy", "trivia questions"},
    };
    return tasks;
}

inline std::string fixture_ground_truth(const FixtureTask& task, int i) {
    if (task.metric == "multiple_choice_accuracy") return std::string(1, "ABCDE"[(i * 3 + 1) % 5]);
    if (task.metric == "cem") return "the routine returns " + std::to_string(i * 7 + 3);
    if (task.metric == "token_f1")
        return "city " + std::to_string(i + 1) + " in province " + std::to_string(i * 2 + 5);
    return std::to_string(i * 7 + 13);
}

inline std::vector<double> jittered(const std::vector<double>& center, double radius,
                                    std::mt19937_64& rng) {
    std::vector<double> out(center.size());
    for (size_t d = 0; d < center.size(); ++d)
        out[d] = center[d] + radius * (2.0 * uniform01(rng) - 1.0);
    return out;
}

}  // namespace detail

/// Main fixture: 8 tasks spanning the six report domains, 5 LLMs, both
/// response patterns, judge scores everywhere, costs derived exactly from
/// the embedded price table. Each task has one "expert" LLM so routing is
/// learnable from the task-clustered embeddings.
inline Dataset make_fixture(const FixtureOptions& opts = {}) {
    if (opts.queries_per_task < 1) detail::fail("fixture: queries_per_task < 1");
    if (opts.embedding_dim < 2) detail::fail("fixture: embedding_dim < 2");
    std::mt19937_64 rng(opts.seed);

    Dataset ds;
    ds.meta.embedding_dim = opts.embedding_dim;
    ds.meta.token_counter = "bytes4";
    ds.meta.llm_profiles = fixture_profiles();
    const auto& tasks = detail::fixture_tasks();
    const auto& profiles = ds.meta.llm_profiles;

    for (size_t t = 0; t < tasks.size(); ++t) {
        std::vector<double> query_center(opts.embedding_dim),
            task_center(opts.embedding_dim);
        for (auto& v : query_center) v = 2.0 * (2.0 * detail::uniform01(rng) - 1.0);
        for (auto& v : task_center) v = 2.0 * (2.0 * detail::uniform01(rng) - 1.0);

        for (int i = 0; i < opts.queries_per_task; ++i) {
            char qid[64];
            std::snprintf(qid, sizeof(qid), "%s-q%03d", tasks[t].name.c_str(), i);
            std::string gt = detail::fixture_ground_truth(tasks[t], i);
            std::string query = tasks[t].name + " question " + std::to_string(i) +
                                ": determine the answer for case " + std::to_string(i) + ".";
            auto query_emb = detail::jittered(query_center, 0.25, rng);

            for (size_t m = 0; m < profiles.size(); ++m) {
                bool expert = m == t % profiles.size();
                for (Pattern pattern : {Pattern::Direct, Pattern::Think}) {
                    RoutingRecord r;
                    r.task_name = tasks[t].name;
                    r.task_description = tasks[t].description;
                    r.query_id = qid;
                    r.query = query;
                    r.ground_truth = gt;
                    r.metric = tasks[t].metric;
                    r.llm_name = profiles[m].name;
                    r.pattern = pattern;

                    double u = detail::uniform01(rng);
                    double perf = expert ? 0.7 + 0.3 * u : 0.05 + 0.45 * u;
                    if (!expert && detail::uniform01(rng) < 0.12) perf = 0.0;
                    if (pattern == Pattern::Think) perf = std::min(1.0, perf + 0.05);
                    r.performance = perf;
                    double j = perf - 0.1 + 0.2 * detail::uniform01(rng);
                    r.judge_score = std::min(1.0, std::max(0.0, j));

                    r.input_tokens = 30 + static_cast<int64_t>(rng() % 41);
                    r.output_tokens = pattern == Pattern::Direct
                                          ? 12 + static_cast<int64_t>(rng() % 40)
                                          : 90 + static_cast<int64_t>(rng() % 140);
                    r.cost = estimate_cost(r.input_tokens, r.output_tokens, profiles[m]);

                    r.response = perf >= 0.5
                                     ? (pattern == Pattern::Direct
                                            ? "Answer: " + gt
                                            : "Reasoning for " + std::string(qid) + " by " +
                                                  profiles[m].name +
                                                  ": work through the steps. Final answer: " + gt)
                                     : "Answer: unsure about " + std::string(qid) + " (" +
                                           profiles[m].name + ")";
                    r.query_embedding = query_emb;
                    r.task_embedding = task_center;
                    ds.records.push_back(std::move(r));
                }
            }
        }
    }

    split_dataset(ds, {{"train", opts.train_fraction}, {"test", 1.0 - opts.train_fraction}},
                  opts.seed + 1);
    validate_dataset(ds);
    return ds;
}

/// Planted fixture: two LLMs, oracle label decided by the sign of u.x
/// with |u.x| >= margin, so a linear router can separate it perfectly.
inline Dataset make_planted_fixture(int queries = 400, int dim = 8, double margin = 0.15,
                                    uint64_t seed = 77) {
    if (queries < 4) detail::fail("planted fixture: too few queries");
    if (dim < 1) detail::fail("planted fixture: dim < 1");
    if (margin < 0.0 || margin > 0.9) detail::fail("planted fixture: margin out of range");
    std::mt19937_64 rng(seed);

    Dataset ds;
    ds.meta.embedding_dim = dim;
    ds.meta.llm_profiles = {
        {"planted-a", Scale::Small, 1.0, 0.0, 0.0, "planted label a"},
        {"planted-b", Scale::Small, 2.0, 0.0, 0.0, "planted label b"},
    };

    std::vector<double> u(dim);
    double norm = 0.0;
    for (auto& v : u) {
        v = 2.0 * detail::uniform01(rng) - 1.0;
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) detail::fail("planted fixture: degenerate direction");
    for (auto& v : u) v /= norm;

    for (int i = 0; i < queries; ++i) {
        std::vector<double> x(dim);
        double proj = 0.0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 1000) detail::fail("planted fixture: rejection sampling stalled");
            proj = 0.0;
            for (int d = 0; d < dim; ++d) {
                x[static_cast<size_t>(d)] = 2.0 * detail::uniform01(rng) - 1.0;
                proj += u[static_cast<size_t>(d)] * x[static_cast<size_t>(d)];
            }
            if (std::abs(proj) >= margin) break;
        }
        std::string winner = proj > 0.0 ? "planted-a" : "planted-b";

        char qid[32];
        std::snprintf(qid, sizeof(qid), "planted-q%04d", i);
        for (const auto& p : ds.meta.llm_profiles) {
            RoutingRecord r;
            r.task_name = "planted";
            r.task_description = "linearly separable routing benchmark";
            r.query_id = qid;
            r.query = "planted question " + std::to_string(i);
            r.ground_truth = "yes";
            r.metric = "exact_match_accuracy";
            r.llm_name = p.name;
            r.pattern = Pattern::Direct;
            r.input_tokens = 16;
            r.output_tokens = 8;
            r.performance = p.name == winner ? 1.0 : 0.0;
            r.cost = estimate_cost(r.input_tokens, r.output_tokens, p);
            r.response = p.name == winner ? "yes" : "no";
            r.query_embedding = x;
            ds.records.push_back(std::move(r));
        }
    }

    split_dataset(ds, {{"train", 0.75}, {"test", 0.25}}, seed + 1);
    validate_dataset(ds);
    return ds;
}

/// Scripted backend covering all three offline roles: judge calls get a
/// rubric-anchored score, summarizer calls get a short template, anything
/// else is treated as an answer request and resolved against the fixture's
/// ground truth. Correctness rates differ by prompting paradigm so report
/// rows are distinguishable, and depend only on the query text so results
/// are independent of call order.
inline FakeBackend::Script fixture_script(const Dataset& ds) {
    auto gt_by_query = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& r : ds.records) (*gt_by_query)[r.query] = r.ground_truth;
    return [gt_by_query](const std::string& system_prompt,
                         const std::string& user_prompt) -> std::string {
        if (system_prompt == judge_system_prompt()) {
            static const double anchors[] = {0.0, 0.3, 0.6, 0.8, 1.0};
            double score = anchors[detail::fnv1a(user_prompt) % 5];
            return "<answer>" + detail::format_fixed(score, 1) + "</answer>";
        }
        if (system_prompt == summarizer_system_prompt()) {
            std::string tag = detail::fnv1a_hex(user_prompt).substr(0, 8);
            return "Identify the task family (" + tag +
                   "). Recall the matching worked example and apply its steps to the new "
                   "values. State only the final value in the expected format.";
        }
        std::string query = user_prompt;
        uint64_t threshold = 55;  // zero-shot
        const std::string marker = "\nNow answer this question:\n";
        if (auto pos = user_prompt.rfind(marker); pos != std::string::npos) {
            query = user_prompt.substr(pos + marker.size());
            threshold = user_prompt.find("thought templates that capture") != std::string::npos
                            ? 85   // template-guided
                            : 70;  // few-shot
        }
        auto it = gt_by_query->find(query);
        if (it == gt_by_query->end()) detail::fail("fixture backend: unknown query: " + query);
        uint64_t roll = detail::fnv1a(query + "|" + std::to_string(threshold)) % 100;
        return roll < threshold ? it->second : "I am not sure.";
    };
}

inline std::shared_ptr<FakeBackend> make_fixture_backend(const Dataset& ds,
                                                         std::string name = "fixture-llm",
                                                         int max_in_flight = 8) {
    BackendConfig cfg;
    cfg.name = std::move(name);
    cfg.base_url = "fake://local";
    cfg.model_id = "fixture";
    cfg.max_in_flight = max_in_flight;
    return std::make_shared<FakeBackend>(std::move(cfg), fixture_script(ds));
}

}  // namespace routefuse
