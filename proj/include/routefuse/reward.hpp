#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/pricing.hpp"

namespace routefuse {

/// Scenario weighting of the routing objective:
/// reward = alpha * performance - beta * cost + gamma * judge.
struct ScenarioWeights {
    std::string name;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

inline ScenarioWeights scenario_preset(const std::string& name) {
    if (name == "performance_first") return {"performance_first", 1.0, 0.0, 0.0};
    if (name == "balance") return {"balance", 0.5, 0.5, 0.0};
    if (name == "cost_first") return {"cost_first", 0.2, 0.8, 0.0};
    if (name == "llm_judge") return {"llm_judge", 0.0, 0.0, 1.0};
    detail::fail("unknown scenario preset: " + name);
}

inline std::vector<ScenarioWeights> all_scenario_presets() {
    return {scenario_preset("performance_first"), scenario_preset("balance"),
            scenario_preset("cost_first"), scenario_preset("llm_judge")};
}

struct RewardBreakdown {
    double performance = 0.0;
    double cost = 0.0;   // dollars, never normalized
    double judge = 0.0;
    double reward = 0.0;
};

/// Exact linear combination; cost enters in raw dollars. A missing judge
/// score is an error whenever gamma is nonzero.
inline RewardBreakdown compute_reward(double performance, double cost,
                                      std::optional<double> judge, const ScenarioWeights& w) {
    if (w.alpha == 0.0 && w.beta == 0.0 && w.gamma == 0.0)
        detail::fail("scenario " + w.name + ": all weights are zero");
    RewardBreakdown b;
    b.performance = performance;
    b.cost = cost;
    if (w.gamma != 0.0) {
        if (!judge) detail::fail("scenario " + w.name + ": judge weight is nonzero but judge score is absent");
        b.judge = *judge;
    } else {
        b.judge = judge.value_or(0.0);
    }
    b.reward = w.alpha * b.performance - w.beta * b.cost + w.gamma * b.judge;
    return b;
}

inline RewardBreakdown compute_reward(const RoutingRecord& r, const ScenarioWeights& w) {
    return compute_reward(r.performance, r.cost, r.judge_score, w);
}

/// Per-query optimum: the record with maximal reward. Exact reward ties
/// break toward lower cost, then lexicographic (llm_name, pattern).
inline const RoutingRecord& oracle_route(const QueryGroup& g, const ScenarioWeights& w) {
    if (g.records.empty()) detail::fail("oracle_route: empty query group");
    const RoutingRecord* best = nullptr;
    double best_reward = 0.0;
    for (const auto* r : g.records) {
        double reward = compute_reward(*r, w).reward;
        if (!best) {
            best = r;
            best_reward = reward;
            continue;
        }
        bool take = false;
        if (reward > best_reward) {
            take = true;
        } else if (reward == best_reward) {
            if (r->cost < best->cost) take = true;
            else if (r->cost == best->cost) {
                if (r->llm_name < best->llm_name) take = true;
                else if (r->llm_name == best->llm_name &&
                         static_cast<int>(r->pattern) < static_cast<int>(best->pattern))
                    take = true;
            }
        }
        if (take) {
            best = r;
            best_reward = reward;
        }
    }
    return *best;
}

namespace detail {

struct MeanAccumulator {
    double perf_sum = 0.0, cost_sum = 0.0, judge_sum = 0.0;
    int64_t n = 0, judged = 0;

    void add(const RoutingRecord& r, const ScenarioWeights& w) {
        perf_sum += r.performance;
        cost_sum += r.cost;
        ++n;
        if (r.judge_score) {
            judge_sum += *r.judge_score;
            ++judged;
        } else if (w.gamma != 0.0) {
            fail("scenario " + w.name + ": judge weight is nonzero but record (" + r.query_id +
                 ", " + r.llm_name + ", " + to_string(r.pattern) + ") has no judge score");
        }
    }

    RewardBreakdown mean(const ScenarioWeights& w) const {
        RewardBreakdown b;
        if (n == 0) return b;
        b.performance = perf_sum / static_cast<double>(n);
        b.cost = cost_sum / static_cast<double>(n);
        b.judge = judged > 0 ? judge_sum / static_cast<double>(judged) : 0.0;
        b.reward = w.alpha * b.performance - w.beta * b.cost + w.gamma * b.judge;
        return b;
    }
};

}  // namespace detail

/// Non-adaptive reference points, all at whole-LLM granularity with
/// prompting patterns pooled:
///   BestLLM:    LLM with the highest mean train performance, test means.
///   LLMMean:    mean over LLMs of that LLM's test means.
///   LargestLLM: LLM with the most parameters, test means.
struct BaselineResult {
    std::string llm_name;  // chosen LLM; empty for LLMMean
    RewardBreakdown summary;
};

inline std::map<std::string, BaselineResult> static_baselines(
    const std::vector<QueryGroup>& train, const std::vector<QueryGroup>& test,
    const ScenarioWeights& w, const std::vector<LlmProfile>& profiles) {
    if (train.empty() || test.empty()) detail::fail("static_baselines: empty split");

    // Train-side means never need judge scores, so accumulate them
    // under a gamma-free scenario.
    const ScenarioWeights train_w = scenario_preset("performance_first");
    std::map<std::string, detail::MeanAccumulator> train_acc, test_acc;
    for (const auto& g : train)
        for (const auto* r : g.records) train_acc[r->llm_name].add(*r, train_w);
    for (const auto& g : test)
        for (const auto* r : g.records) test_acc[r->llm_name].add(*r, w);

    for (const auto& [name, acc] : train_acc) {
        (void)acc;
        if (!test_acc.count(name)) detail::fail("static_baselines: " + name + " absent from test split");
    }
    for (const auto& [name, acc] : test_acc) {
        (void)acc;
        if (!train_acc.count(name)) detail::fail("static_baselines: " + name + " absent from train split");
    }

    std::string best_llm;
    double best_train_perf = -1.0;
    for (const auto& [name, acc] : train_acc) {
        double mean_perf = acc.perf_sum / static_cast<double>(acc.n);
        if (mean_perf > best_train_perf) {
            best_train_perf = mean_perf;
            best_llm = name;
        }
    }

    std::string largest_llm;
    double largest_params = -1.0;
    for (const auto& [name, acc] : test_acc) {
        (void)acc;
        const LlmProfile& p = find_profile(profiles, name);
        if (p.parameter_count_b > largest_params) {
            largest_params = p.parameter_count_b;
            largest_llm = name;
        }
    }

    RewardBreakdown mean_of_llms;
    for (const auto& [name, acc] : test_acc) {
        (void)name;
        RewardBreakdown b = acc.mean(w);
        mean_of_llms.performance += b.performance;
        mean_of_llms.cost += b.cost;
        mean_of_llms.judge += b.judge;
    }
    double k = static_cast<double>(test_acc.size());
    mean_of_llms.performance /= k;
    mean_of_llms.cost /= k;
    mean_of_llms.judge /= k;
    mean_of_llms.reward =
        w.alpha * mean_of_llms.performance - w.beta * mean_of_llms.cost + w.gamma * mean_of_llms.judge;

    std::map<std::string, BaselineResult> out;
    out["best_llm"] = {best_llm, test_acc.at(best_llm).mean(w)};
    out["llm_mean"] = {"", mean_of_llms};
    out["largest_llm"] = {largest_llm, test_acc.at(largest_llm).mean(w)};
    return out;
}

}  // namespace routefuse
