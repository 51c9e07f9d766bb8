#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/distill.hpp"
#include "routefuse/gateway.hpp"
#include "routefuse/judge.hpp"
#include "routefuse/pricing.hpp"
#include "routefuse/reward.hpp"
#include "routefuse/routers.hpp"
#include "routefuse/thought.hpp"

namespace routefuse {

/// One experiment method: a static baseline, a trained router, a
/// thought-level inference paradigm, or an SFT corpus export.
struct MethodSpec {
    std::string kind;  // "baseline" | "router" | "thought" | "sft"
    std::string name;  // report row label, unique within a plan

    // baseline: which one
    std::string baseline;  // best_llm | llm_mean | largest_llm | random | oracle

    // router hyperparameters
    RouterKind router_kind = RouterKind::Knn;
    int knn_k = 5;
    int epochs = 30;
    double learning_rate = 0.05;
    double l2 = 1e-4;
    std::vector<int> hidden = {32};
    bool concat_llm_features = false;

    // thought parameters
    Paradigm paradigm = Paradigm::ZeroShot;
    SelectionStrategy strategy;
    int d = 3;

    // sft parameters
    ExportSpec sft;
};

struct ExperimentPlan {
    ScenarioWeights scenario;
    std::string train_split = "train";
    std::string test_split = "test";
    std::vector<MethodSpec> methods;
    std::string output_dir;
    uint64_t seed = 0;
    std::string llm_filter;  // "", "small", "medium", or "large"
    bool direct_only = false;
    std::string answer_backend;      // thought methods
    std::string summarizer_backend;  // defaults to answer_backend
};

/// One routed/evaluated query in a harness run. Baselines pool patterns,
/// so `pattern` may be empty.
struct HarnessDecision {
    std::string query_id;
    std::string chosen;   // llm or backend name; empty for llm_mean
    std::string pattern;  // "direct", "think", or "" when pooled / not applicable
    double performance = 0.0;
    double cost = 0.0;
    std::optional<double> judge;
    double reward = 0.0;
    bool coverage_gap = false;
};

struct ReportRow {
    std::string method;
    std::string status = "ok";  // "ok" | "exported" | "failed: <reason>"
    double performance = 0.0;
    double cost = 0.0;
    double reward = 0.0;
    double llm_score = 0.0;
    int64_t coverage_gaps = 0;
    int64_t queries = 0;
    std::map<std::string, double> domain_means;  // domain -> mean performance
    std::string notes;
    std::vector<HarnessDecision> decisions;
};

struct ReportTable {
    ordered_json metadata;
    std::vector<ReportRow> rows;
};

// ---------------------------------------------------------------------------
// Plan parsing
// ---------------------------------------------------------------------------

inline MethodSpec method_from_json(const json& j) {
    MethodSpec m;
    m.kind = j.at("kind").get<std::string>();
    m.name = j.at("name").get<std::string>();
    if (m.kind == "baseline") {
        m.baseline = j.value("baseline", m.name);
    } else if (m.kind == "router") {
        m.router_kind = router_kind_from_string(j.value("router", m.name));
        m.knn_k = j.value("k", m.knn_k);
        m.epochs = j.value("epochs", m.epochs);
        m.learning_rate = j.value("learning_rate", m.learning_rate);
        m.l2 = j.value("l2", m.l2);
        if (j.contains("hidden")) m.hidden = j["hidden"].get<std::vector<int>>();
        m.concat_llm_features = j.value("concat_llm_features", false);
    } else if (m.kind == "thought") {
        m.paradigm = paradigm_from_string(j.value("paradigm", m.name));
        if (j.contains("strategy")) m.strategy = strategy_from_json(j["strategy"]);
        m.d = j.value("d", 3);
    } else if (m.kind == "sft") {
        m.sft.mode = sft_mode_from_string(j.value("mode", "router_sft"));
        m.sft.k = j.value("k", 5);
        if (j.contains("strategy"))
            m.sft.strategy = rank_strategy_from_string(j["strategy"].get<std::string>());
        m.sft.include_ground_truth = j.value("include_ground_truth", true);
        m.sft.include_zero_performance = j.value("include_zero_performance", false);
        m.sft.direct_only = j.value("direct_only", false);
        m.sft.chat_format = j.value("chat_format", false);
    } else {
        detail::fail("plan: unknown method kind: " + m.kind);
    }
    return m;
}

inline ordered_json method_to_json(const MethodSpec& m) {
    ordered_json j;
    j["kind"] = m.kind;
    j["name"] = m.name;
    if (m.kind == "baseline") {
        j["baseline"] = m.baseline;
    } else if (m.kind == "router") {
        j["router"] = to_string(m.router_kind);
        if (m.router_kind == RouterKind::Knn) j["k"] = m.knn_k;
        if (m.router_kind == RouterKind::Linear || m.router_kind == RouterKind::Mlp) {
            j["epochs"] = m.epochs;
            j["learning_rate"] = m.learning_rate;
        }
        if (m.router_kind == RouterKind::Linear) j["l2"] = m.l2;
        if (m.router_kind == RouterKind::Mlp) j["hidden"] = m.hidden;
        j["concat_llm_features"] = m.concat_llm_features;
    } else if (m.kind == "thought") {
        j["paradigm"] = to_string(m.paradigm);
        j["strategy"] = strategy_to_json(m.strategy);
        j["d"] = m.d;
    } else if (m.kind == "sft") {
        j["mode"] = to_string(m.sft.mode);
        j["k"] = m.sft.k;
        j["strategy"] = to_string(m.sft.strategy);
        j["include_ground_truth"] = m.sft.include_ground_truth;
        j["include_zero_performance"] = m.sft.include_zero_performance;
        j["direct_only"] = m.sft.direct_only;
        j["chat_format"] = m.sft.chat_format;
    }
    return j;
}

inline ExperimentPlan plan_from_json(const json& j) {
    ExperimentPlan p;
    if (j.at("scenario").is_string()) {
        p.scenario = scenario_preset(j["scenario"].get<std::string>());
    } else {
        const auto& s = j["scenario"];
        p.scenario = {s.at("name").get<std::string>(), s.at("alpha").get<double>(),
                      s.at("beta").get<double>(), s.at("gamma").get<double>()};
    }
    p.train_split = j.value("train_split", std::string("train"));
    p.test_split = j.value("test_split", std::string("test"));
    p.output_dir = j.at("output_dir").get<std::string>();
    p.seed = j.value("seed", uint64_t{0});
    p.llm_filter = j.value("llm_filter", std::string{});
    p.direct_only = j.value("direct_only", false);
    p.answer_backend = j.value("answer_backend", std::string{});
    p.summarizer_backend = j.value("summarizer_backend", p.answer_backend);
    for (const auto& mj : j.at("methods")) p.methods.push_back(method_from_json(mj));
    if (p.methods.empty()) detail::fail("plan: methods list is empty");
    std::set<std::string> names;
    for (const auto& m : p.methods)
        if (!names.insert(m.name).second) detail::fail("plan: duplicate method name " + m.name);
    return p;
}

inline ExperimentPlan load_plan(const std::string& path) {
    return plan_from_json(json::parse(detail::read_file(path)));
}

inline ordered_json plan_to_json(const ExperimentPlan& p) {
    ordered_json j;
    j["scenario"] = {{"name", p.scenario.name},
                     {"alpha", p.scenario.alpha},
                     {"beta", p.scenario.beta},
                     {"gamma", p.scenario.gamma}};
    j["train_split"] = p.train_split;
    j["test_split"] = p.test_split;
    j["output_dir"] = p.output_dir;
    j["seed"] = p.seed;
    j["llm_filter"] = p.llm_filter;
    j["direct_only"] = p.direct_only;
    j["answer_backend"] = p.answer_backend;
    j["summarizer_backend"] = p.summarizer_backend;
    ordered_json methods = ordered_json::array();
    for (const auto& m : p.methods) methods.push_back(method_to_json(m));
    j["methods"] = std::move(methods);
    return j;
}

// ---------------------------------------------------------------------------
// Run internals
// ---------------------------------------------------------------------------

namespace detail {

/// Size filter: keep records whose LLM profile matches the scale class.
/// Logged judge scores are reused, never recomputed.
inline Dataset filter_dataset_by_scale(const Dataset& ds, const std::string& llm_filter) {
    if (llm_filter.empty()) return ds;
    Scale want = scale_from_string(llm_filter);
    std::set<std::string> keep;
    for (const auto& p : ds.meta.llm_profiles)
        if (p.scale == want) keep.insert(p.name);
    Dataset out;
    out.meta = ds.meta;
    for (const auto& r : ds.records)
        if (keep.count(r.llm_name)) out.records.push_back(r);
    if (out.records.empty()) fail("llm_filter '" + llm_filter + "' leaves no records");
    return out;
}

inline HarnessDecision to_harness_decision(const RoutingDecision& d) {
    HarnessDecision h;
    h.query_id = d.query_id;
    h.chosen = d.chosen.llm_name;
    h.pattern = to_string(d.chosen.pattern);
    h.performance = d.performance;
    h.cost = d.cost;
    h.judge = d.judge;
    h.reward = d.reward;
    h.coverage_gap = d.coverage_gap;
    return h;
}

inline void aggregate_row(ReportRow& row, const std::map<std::string, std::string>& domain_of) {
    row.queries = static_cast<int64_t>(row.decisions.size());
    if (row.queries == 0) return;
    int64_t judged = 0;
    std::map<std::string, std::pair<double, int64_t>> by_domain;
    for (const auto& d : row.decisions) {
        row.performance += d.performance;
        row.cost += d.cost;
        row.reward += d.reward;
        if (d.judge) {
            row.llm_score += *d.judge;
            ++judged;
        }
        if (d.coverage_gap) ++row.coverage_gaps;
        auto it = domain_of.find(d.query_id);
        if (it != domain_of.end()) {
            by_domain[it->second].first += d.performance;
            ++by_domain[it->second].second;
        }
    }
    row.performance /= static_cast<double>(row.queries);
    row.cost /= static_cast<double>(row.queries);
    row.reward /= static_cast<double>(row.queries);
    row.llm_score = judged > 0 ? row.llm_score / static_cast<double>(judged) : 0.0;
    for (const auto& [domain, acc] : by_domain)
        row.domain_means[domain] = acc.first / static_cast<double>(acc.second);
}

// Mean outcome of one LLM's records within a group, patterns pooled.
// No records at all is a coverage gap.
inline HarnessDecision pooled_decision(const QueryGroup& g, const std::string& llm_name,
                                       const ScenarioWeights& w) {
    HarnessDecision d;
    d.query_id = g.query_id;
    d.chosen = llm_name;
    double perf = 0.0, cost = 0.0, judge_sum = 0.0;
    int64_t n = 0, judged = 0;
    for (const auto* r : g.records) {
        if (!llm_name.empty() && r->llm_name != llm_name) continue;
        perf += r->performance;
        cost += r->cost;
        if (r->judge_score) {
            judge_sum += *r->judge_score;
            ++judged;
        }
        ++n;
    }
    if (n == 0) {
        d.coverage_gap = true;
        return d;
    }
    d.performance = perf / static_cast<double>(n);
    d.cost = cost / static_cast<double>(n);
    if (judged > 0) d.judge = judge_sum / static_cast<double>(judged);
    if (w.gamma != 0.0 && judged < n)
        fail("scenario " + w.name + ": judge weight is nonzero but query " + g.query_id +
             " has unjudged records for " + (llm_name.empty() ? "baseline pool" : llm_name));
    d.reward = compute_reward(d.performance, d.cost, d.judge, w).reward;
    return d;
}

inline void save_decisions(const std::string& path, const ReportRow& row,
                           const ExperimentPlan& plan) {
    ordered_json meta;
    meta["method"] = row.method;
    meta["scenario"] = plan.scenario.name;
    meta["seed"] = plan.seed;
    std::string out = std::string(kMetaPrefix) + meta.dump() + "\n";
    for (const auto& d : row.decisions) {
        ordered_json j;
        j["query_id"] = d.query_id;
        if (!d.chosen.empty()) j["chosen"] = d.chosen;
        if (!d.pattern.empty()) j["pattern"] = d.pattern;
        j["performance"] = d.performance;
        j["cost"] = d.cost;
        if (d.judge) j["judge"] = *d.judge;
        j["reward"] = d.reward;
        j["coverage_gap"] = d.coverage_gap;
        out += j.dump() + "\n";
    }
    write_file(path, out);
}

inline std::vector<HarnessDecision> load_decisions(const std::string& path) {
    std::vector<HarnessDecision> out;
    auto lines = split_lines(read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i].rfind(kMetaPrefix, 0) == 0) continue;
        json j = json::parse(lines[i]);
        HarnessDecision d;
        d.query_id = j.at("query_id").get<std::string>();
        d.chosen = j.value("chosen", std::string{});
        d.pattern = j.value("pattern", std::string{});
        d.performance = j.at("performance").get<double>();
        d.cost = j.at("cost").get<double>();
        if (j.contains("judge")) d.judge = j["judge"].get<double>();
        d.reward = j.at("reward").get<double>();
        d.coverage_gap = j.at("coverage_gap").get<bool>();
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Method runners
// ---------------------------------------------------------------------------

namespace detail {

inline ReportRow run_baseline_method(const MethodSpec& m, const ExperimentPlan& plan,
                                     const std::vector<QueryGroup>& train,
                                     const std::vector<QueryGroup>& test,
                                     const std::vector<LlmProfile>& profiles) {
    ReportRow row;
    row.method = m.name;
    if (m.baseline == "oracle") {
        auto rep = evaluate_oracle(test, plan.scenario);
        for (const auto& d : rep.decisions) row.decisions.push_back(to_harness_decision(d));
        return row;
    }
    if (m.baseline == "random") {
        std::set<RouterLabel> labels;
        for (const auto& g : train)
            for (const auto* r : g.records) labels.insert({r->llm_name, r->pattern});
        auto router = make_random_router({labels.begin(), labels.end()}, plan.scenario, plan.seed);
        auto rep = evaluate_router(router, test, plan.scenario);
        for (const auto& d : rep.decisions) row.decisions.push_back(to_harness_decision(d));
        return row;
    }
    if (m.baseline == "llm_mean") {
        for (const auto& g : test) row.decisions.push_back(pooled_decision(g, "", plan.scenario));
        return row;
    }
    std::string llm;
    if (m.baseline == "best_llm" || m.baseline == "largest_llm") {
        auto baselines = static_baselines(train, test, plan.scenario, profiles);
        llm = baselines.at(m.baseline).llm_name;
    } else {
        fail("unknown baseline: " + m.baseline);
    }
    row.notes = "llm=" + llm;
    for (const auto& g : test) row.decisions.push_back(pooled_decision(g, llm, plan.scenario));
    return row;
}

inline ReportRow run_router_method(const MethodSpec& m, const ExperimentPlan& plan,
                                   const TrainingSet& ts, const std::vector<QueryGroup>& test) {
    ReportRow row;
    row.method = m.name;
    RouterModel model;
    switch (m.router_kind) {
        case RouterKind::Knn: model = train_knn(ts, m.knn_k, plan.scenario); break;
        case RouterKind::Linear:
            model = train_linear(ts, m.epochs, m.learning_rate, m.l2, plan.seed, plan.scenario,
                                 m.concat_llm_features);
            break;
        case RouterKind::Mlp:
            model = train_mlp(ts, m.hidden, m.epochs, m.learning_rate, plan.seed, plan.scenario,
                              m.concat_llm_features);
            break;
        default: fail("router method " + m.name + ": unsupported kind " + to_string(m.router_kind));
    }
    auto rep = evaluate_router(model, test, plan.scenario);
    for (const auto& d : rep.decisions) row.decisions.push_back(to_harness_decision(d));
    return row;
}

inline const std::string& answer_system_prompt() {
    static const std::string prompt = "You are a helpful assistant. Answer the final question.";
    return prompt;
}

inline ReportRow run_thought_method(const MethodSpec& m, const ExperimentPlan& plan,
                                    const std::vector<QueryGroup>& train,
                                    const std::vector<QueryGroup>& test,
                                    const std::vector<LlmProfile>& profiles,
                                    const BackendRegistry& registry,
                                    const TemplateStore* prebuilt_store = nullptr) {
    ReportRow row;
    row.method = m.name;
    if (plan.answer_backend.empty()) fail("thought method " + m.name + ": no answer_backend set");
    Backend& answerer = registry.get(plan.answer_backend);
    const LlmProfile* profile = nullptr;
    for (const auto& p : profiles)
        if (p.name == plan.answer_backend) profile = &p;

    TemplateStore store;
    if (m.paradigm == Paradigm::ThoughtTemplate) {
        if (prebuilt_store) {
            store = *prebuilt_store;
        } else {
            const std::string& summarizer_name = plan.summarizer_backend.empty()
                                                     ? plan.answer_backend
                                                     : plan.summarizer_backend;
            Backend& summarizer = registry.get(summarizer_name);
            auto built = build_template_store(train, m.strategy, summarizer);
            store = std::move(built.store);
            if (!built.pending.empty())
                row.notes = "pending_templates=" + std::to_string(built.pending.size());
        }
    }

    // Train-side lookup for few-shot demonstrations.
    std::map<std::string, const QueryGroup*> train_by_id;
    for (const auto& g : train) train_by_id[g.query_id] = &g;

    std::mutex mutex;
    std::vector<HarnessDecision> decisions(test.size());
    std::vector<std::string> errors;
    parallel_for(test.size(), answerer.config().max_in_flight, [&](size_t i) {
        const QueryGroup& g = test[i];
        try {
            std::vector<Demonstration> demos;
            if (m.paradigm == Paradigm::FewShot) {
                struct Cand {
                    double sim;
                    const QueryGroup* group;
                };
                std::vector<Cand> cands;
                for (const auto& t : train) {
                    if (t.query_id == g.query_id) continue;
                    cands.push_back(
                        {cosine_similarity(t.query_embedding(), g.query_embedding()), &t});
                }
                std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
                    if (a.sim != b.sim) return a.sim > b.sim;
                    return a.group->query_id < b.group->query_id;
                });
                for (int k = 0; k < m.d && k < static_cast<int>(cands.size()); ++k) {
                    Demonstration demo;
                    demo.question = cands[static_cast<size_t>(k)].group->query();
                    auto sel = select_top_k(*cands[static_cast<size_t>(k)].group, m.strategy);
                    for (const auto* r : sel.records) demo.responses.push_back(r->response);
                    demos.push_back(std::move(demo));
                }
            } else if (m.paradigm == Paradigm::ThoughtTemplate) {
                for (const auto& hit : retrieve(store, g.query_embedding(), m.d, g.query_id)) {
                    Demonstration demo;
                    auto it = train_by_id.find(hit.tmpl->source_query_id);
                    demo.question = it != train_by_id.end() ? it->second->query() : "";
                    demo.template_text = hit.tmpl->template_text;
                    demos.push_back(std::move(demo));
                }
            }
            std::string prompt = assemble_prompt(g.query(), m.paradigm, demos, m.d);
            CompletionResult res = answerer.complete(answer_system_prompt(), prompt);
            HarnessDecision d;
            d.query_id = g.query_id;
            d.chosen = plan.answer_backend;
            d.performance = evaluate_response(g.metric(), res.text, g.ground_truth());
            d.cost = profile ? estimate_cost(res.input_tokens, res.output_tokens, *profile) : 0.0;
            d.reward = compute_reward(d.performance, d.cost, std::nullopt, plan.scenario).reward;
            decisions[i] = std::move(d);
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex);
            errors.push_back(g.query_id + ": " + e.what());
        }
    });
    if (!errors.empty())
        fail("thought method " + m.name + ": " + std::to_string(errors.size()) +
             " queries failed, first: " + errors.front());
    row.decisions = std::move(decisions);
    return row;
}

inline ReportRow run_sft_method(const MethodSpec& m, const ExperimentPlan& plan,
                                const std::vector<QueryGroup>& train) {
    ReportRow row;
    row.method = m.name;
    row.status = "exported";
    std::string corpus = plan.output_dir + "/sft_" + m.name + ".jsonl";
    std::string manifest_path = plan.output_dir + "/sft_" + m.name + "_manifest.json";
    SftManifest manifest = export_sft(train, m.sft, corpus, manifest_path);
    row.notes = "examples=" + std::to_string(manifest.total_examples) +
                " shortfall=" + std::to_string(manifest.total_shortfall) + " hash=" +
                manifest.content_hash;
    return row;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run_plan / emit_reports
// ---------------------------------------------------------------------------

/// Executes every method in plan order. A method failure is recorded in
/// its row and the run continues. Decision logs land in output_dir as
/// decisions_<method>.jsonl.
inline ReportTable run_plan(const ExperimentPlan& plan, const Dataset& dataset,
                            const BackendRegistry& registry) {
    Dataset ds = detail::filter_dataset_by_scale(dataset, plan.llm_filter);
    std::filesystem::create_directories(plan.output_dir);

    auto train = group_by_query(ds, plan.train_split);
    auto test = group_by_query(ds, plan.test_split);
    if (plan.direct_only) {
        train = restrict_to_direct(train);
        test = restrict_to_direct(test);
    }
    if (train.empty() || test.empty()) detail::fail("plan: empty train or test split");

    std::map<std::string, std::string> domain_of;
    for (const auto& g : test) domain_of[g.query_id] = task_domain(g.task_name());

    // Shared router supervision, built once.
    std::optional<TrainingSet> training_set;
    auto get_training_set = [&]() -> const TrainingSet& {
        if (!training_set) training_set = build_training_labels(train, plan.scenario);
        return *training_set;
    };

    ReportTable table;
    table.metadata["plan"] = plan_to_json(plan);
    {
        std::string canonical = detail::meta_to_json(ds.meta).dump();
        for (const auto& r : ds.records) canonical += record_to_json(r).dump();
        table.metadata["dataset_hash"] = detail::fnv1a_hex(canonical);
    }
    table.metadata["queries_train"] = train.size();
    table.metadata["queries_test"] = test.size();

    for (const auto& m : plan.methods) {
        ReportRow row;
        try {
            if (m.kind == "baseline") {
                row = detail::run_baseline_method(m, plan, train, test, ds.meta.llm_profiles);
            } else if (m.kind == "router") {
                row = detail::run_router_method(m, plan, get_training_set(), test);
            } else if (m.kind == "thought") {
                row = detail::run_thought_method(m, plan, train, test, ds.meta.llm_profiles,
                                                 registry);
            } else if (m.kind == "sft") {
                row = detail::run_sft_method(m, plan, train);
            } else {
                detail::fail("unknown method kind: " + m.kind);
            }
        } catch (const std::exception& e) {
            row = ReportRow{};
            row.method = m.name;
            row.status = std::string("failed: ") + e.what();
        }
        detail::aggregate_row(row, domain_of);
        if (row.status == "ok" || !row.decisions.empty())
            detail::save_decisions(plan.output_dir + "/decisions_" + m.name + ".jsonl", row, plan);
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Scenario-metric CSV, one row per method. Non-evaluated rows keep
/// their cells empty rather than printing fake zeros.
inline std::string report_scenario_csv(const ReportTable& table) {
    std::string out = "# seed=" + table.metadata["plan"]["seed"].dump() +
                      " scenario=" + table.metadata["plan"]["scenario"]["name"].get<std::string>() +
                      " dataset_hash=" + table.metadata["dataset_hash"].get<std::string>() + "\n";
    out += "method,scenario,performance,cost,reward,llmscore,coverage_gaps\n";
    const std::string scenario = table.metadata["plan"]["scenario"]["name"].get<std::string>();
    for (const auto& row : table.rows) {
        if (row.status == "ok") {
            out += row.method + "," + scenario + "," + detail::format_fixed(row.performance) +
                   "," + detail::format_fixed(row.cost) + "," + detail::format_fixed(row.reward) +
                   "," + detail::format_fixed(row.llm_score) + "," +
                   std::to_string(row.coverage_gaps) + "\n";
        } else {
            out += row.method + "," + scenario + ",,,,,\n";
        }
    }
    return out;
}

/// Per-domain performance CSV: six domain columns plus Average, the
/// unweighted mean of the domain means present.
inline std::string report_domains_csv(const ReportTable& table) {
    std::string out = "# seed=" + table.metadata["plan"]["seed"].dump() +
                      " scenario=" + table.metadata["plan"]["scenario"]["name"].get<std::string>() +
                      " dataset_hash=" + table.metadata["dataset_hash"].get<std::string>() + "\n";
    out += "method";
    for (const auto& d : report_domains()) out += "," + d;
    out += ",average\n";
    for (const auto& row : table.rows) {
        out += row.method;
        double sum = 0.0;
        int present = 0;
        for (const auto& d : report_domains()) {
            auto it = row.domain_means.find(d);
            if (row.status == "ok" && it != row.domain_means.end()) {
                out += "," + detail::format_fixed(it->second);
                sum += it->second;
                ++present;
            } else {
                out += ",";
            }
        }
        out += present > 0 ? "," + detail::format_fixed(sum / present) : ",";
        out += "\n";
    }
    return out;
}

inline ordered_json report_to_json(const ReportTable& table) {
    ordered_json j;
    j["metadata"] = table.metadata;
    ordered_json rows = ordered_json::array();
    for (const auto& row : table.rows) {
        ordered_json r;
        r["method"] = row.method;
        r["status"] = row.status;
        if (row.status == "ok") {
            r["performance"] = row.performance;
            r["cost"] = row.cost;
            r["reward"] = row.reward;
            r["llmscore"] = row.llm_score;
            r["coverage_gaps"] = row.coverage_gaps;
            r["queries"] = row.queries;
            ordered_json domains = ordered_json::object();
            for (const auto& [d, v] : row.domain_means) domains[d] = v;
            r["domain_performance"] = std::move(domains);
        }
        if (!row.notes.empty()) r["notes"] = row.notes;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline std::string report_markdown(const ReportTable& table) {
    const std::string scenario = table.metadata["plan"]["scenario"]["name"].get<std::string>();
    std::string out = "# Routing report\n\n";
    out += "Scenario: " + scenario + "  \n";
    out += "Seed: " + table.metadata["plan"]["seed"].dump() + "  \n";
    out += "Dataset hash: " + table.metadata["dataset_hash"].get<std::string>() + "\n\n";
    out += "## Scenario metrics\n\n";
    out += "| Method | Performance | Cost | Reward | LLMScore | Gaps | Status |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const auto& row : table.rows) {
        if (row.status == "ok") {
            out += "| " + row.method + " | " + detail::format_fixed(row.performance, 4) + " | " +
                   detail::format_fixed(row.cost, 4) + " | " + detail::format_fixed(row.reward, 4) +
                   " | " + detail::format_fixed(row.llm_score, 4) + " | " +
                   std::to_string(row.coverage_gaps) + " | ok |\n";
        } else {
            out += "| " + row.method + " |  |  |  |  |  | " + row.status + " |\n";
        }
    }
    out += "\n## Per-domain performance\n\n| Method |";
    for (const auto& d : report_domains()) out += " " + d + " |";
    out += " average |\n|---|";
    for (size_t i = 0; i < report_domains().size() + 1; ++i) out += "---|";
    out += "\n";
    for (const auto& row : table.rows) {
        out += "| " + row.method + " |";
        double sum = 0.0;
        int present = 0;
        for (const auto& d : report_domains()) {
            auto it = row.domain_means.find(d);
            if (row.status == "ok" && it != row.domain_means.end()) {
                out += " " + detail::format_fixed(it->second, 4) + " |";
                sum += it->second;
                ++present;
            } else {
                out += "  |";
            }
        }
        out += present > 0 ? " " + detail::format_fixed(sum / present, 4) + " |\n" : "  |\n";
    }
    return out;
}

/// Writes the requested report files into output_dir.
inline void emit_reports(const ReportTable& table, const std::string& output_dir,
                         const std::vector<std::string>& formats = {"csv", "json", "markdown"}) {
    std::filesystem::create_directories(output_dir);
    for (const auto& fmt : formats) {
        if (fmt == "csv") {
            detail::write_file(output_dir + "/report_scenario.csv", report_scenario_csv(table));
            detail::write_file(output_dir + "/report_domains.csv", report_domains_csv(table));
        } else if (fmt == "json") {
            detail::write_file(output_dir + "/report.json", report_to_json(table).dump(2) + "\n");
        } else if (fmt == "markdown") {
            detail::write_file(output_dir + "/report.md", report_markdown(table));
        } else {
            detail::fail("unknown report format: " + fmt);
        }
    }
}

}  // namespace routefuse
