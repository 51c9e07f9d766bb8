// Command-line frontend over the routing-fusion library: ingest logs,
// assign splits, judge responses, train and evaluate routers, build
// thought-template stores, export SFT corpora, collect fresh responses,
// and run full experiment plans.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "routefuse/routefuse.hpp"

using namespace routefuse;

namespace {

BackendConfig backend_config_from_json(const json& bj) {
    BackendConfig cfg;
    cfg.name = bj.at("name").get<std::string>();
    cfg.base_url = bj.at("base_url").get<std::string>();
    cfg.model_id = bj.at("model_id").get<std::string>();
    cfg.api_key_env = bj.value("api_key_env", std::string{});
    cfg.max_in_flight = bj.value("max_in_flight", 4);
    cfg.timeout_seconds = bj.value("timeout_seconds", 60.0);
    cfg.max_output_tokens = bj.value("max_output_tokens", 1024);
    cfg.max_retries = bj.value("max_retries", 3);
    cfg.backoff_seconds = bj.value("backoff_seconds", 0.25);
    return cfg;
}

/// Registry from an optional backend config file, plus scripted stand-ins
/// for any requested names that are still missing when --fake is given.
BackendRegistry build_registry(const std::string& backends_path, bool fake,
                               const Dataset* fake_source,
                               const std::vector<std::string>& wanted) {
    BackendRegistry reg;
    if (!backends_path.empty()) {
        json j = json::parse(detail::read_file(backends_path));
        for (const auto& bj : j.at("backends"))
            reg.add(std::make_shared<HttpBackend>(backend_config_from_json(bj)));
    }
    if (fake) {
        if (!fake_source) detail::fail("--fake requires a dataset to script answers from");
        for (const auto& name : wanted)
            if (!name.empty() && !reg.has(name)) reg.add(make_fixture_backend(*fake_source, name));
    }
    return reg;
}

std::vector<QuerySpec> load_queries(const std::string& path) {
    std::vector<QuerySpec> out;
    auto lines = detail::split_lines(detail::read_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        json j = json::parse(lines[i]);
        QuerySpec q;
        q.task_name = j.at("task_name").get<std::string>();
        q.task_description = j.value("task_description", std::string{});
        q.query_id = j.at("query_id").get<std::string>();
        q.query = j.at("query").get<std::string>();
        q.ground_truth = j.at("ground_truth").get<std::string>();
        q.metric = j.at("metric").get<std::string>();
        if (j.contains("query_embedding"))
            q.query_embedding = j["query_embedding"].get<std::vector<double>>();
        if (j.contains("task_embedding"))
            q.task_embedding = j["task_embedding"].get<std::vector<double>>();
        out.push_back(std::move(q));
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"LLM routing-log fusion toolkit"};
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "Convert a CSV or JSONL log to canonical JSONL");
    std::string in_path, out_path, profiles_path, token_counter = "bytes4";
    ingest->add_option("input", in_path, "CSV or JSONL routing log")->required();
    ingest->add_option("-o,--out", out_path, "Output canonical JSONL")->required();
    ingest->add_option("--profiles", profiles_path, "LLM profiles JSONL to embed");
    ingest->add_option("--token-counter", token_counter, "Token counter name");

    // ---- split ----
    auto* split = app.add_subcommand("split", "Assign query-level splits");
    std::string split_in, split_out;
    std::vector<std::string> split_specs;
    uint64_t split_seed = 7;
    split->add_option("input", split_in, "Canonical JSONL dataset")->required();
    split->add_option("-o,--out", split_out, "Output dataset")->required();
    split->add_option("-s,--split", split_specs, "name=fraction (repeatable)")->required();
    split->add_option("--seed", split_seed, "Shuffle seed");

    // ---- judge ----
    auto* judge_cmd = app.add_subcommand("judge", "LLM-as-judge scoring");
    auto* judge_score = judge_cmd->add_subcommand("score", "Score unjudged records into a patch");
    std::string js_in, js_out, js_backends, js_backend_name;
    bool js_fake = false;
    int js_retries = 2;
    judge_score->add_option("input", js_in, "Canonical JSONL dataset")->required();
    judge_score->add_option("-o,--out", js_out, "Output patch JSONL")->required();
    judge_score->add_option("--backends", js_backends, "Backend config JSON");
    judge_score->add_option("--backend", js_backend_name, "Judge backend name")->required();
    judge_score->add_option("--retries", js_retries, "Parse retries");
    judge_score->add_flag("--fake", js_fake, "Use the scripted offline backend");
    auto* judge_apply = judge_cmd->add_subcommand("apply", "Apply a judge patch to a dataset");
    std::string ja_in, ja_patch, ja_out;
    judge_apply->add_option("input", ja_in, "Canonical JSONL dataset")->required();
    judge_apply->add_option("patch", ja_patch, "Patch JSONL")->required();
    judge_apply->add_option("-o,--out", ja_out, "Output dataset")->required();
    judge_cmd->require_subcommand(1);

    // ---- router ----
    auto* router_cmd = app.add_subcommand("router", "Train and evaluate query-level routers");
    auto* router_train = router_cmd->add_subcommand("train", "Train a router");
    std::string rt_in, rt_out, rt_kind = "knn", rt_scenario = "balance", rt_split = "train";
    int rt_k = 5, rt_epochs = 30;
    double rt_lr = 0.05, rt_l2 = 1e-4;
    std::vector<int> rt_hidden = {32};
    uint64_t rt_seed = 7;
    bool rt_concat = false;
    router_train->add_option("input", rt_in, "Canonical JSONL dataset")->required();
    router_train->add_option("-o,--out", rt_out, "Output model JSON")->required();
    router_train->add_option("--kind", rt_kind, "knn | linear | mlp");
    router_train->add_option("--scenario", rt_scenario, "Scenario preset name");
    router_train->add_option("--split", rt_split, "Training split");
    router_train->add_option("-k", rt_k, "KNN neighbors");
    router_train->add_option("--epochs", rt_epochs, "Training epochs");
    router_train->add_option("--learning-rate", rt_lr, "Learning rate");
    router_train->add_option("--l2", rt_l2, "L2 penalty (linear)");
    router_train->add_option("--hidden", rt_hidden, "MLP hidden sizes");
    router_train->add_option("--seed", rt_seed, "Training seed");
    router_train->add_flag("--concat-llm-features", rt_concat, "Score (query, LLM) pairs");
    auto* router_eval = router_cmd->add_subcommand("eval", "Evaluate a saved router");
    std::string re_in, re_model, re_split = "test", re_out;
    router_eval->add_option("input", re_in, "Canonical JSONL dataset")->required();
    router_eval->add_option("model", re_model, "Router model JSON")->required();
    router_eval->add_option("--split", re_split, "Evaluation split");
    router_eval->add_option("-o,--out", re_out, "Optional decisions JSONL");
    router_cmd->require_subcommand(1);

    // ---- thoughts ----
    auto* thoughts = app.add_subcommand("thoughts", "Thought-template store operations");
    auto* th_build = thoughts->add_subcommand("build", "Summarize top responses into templates");
    std::string tb_in, tb_out, tb_backends, tb_backend, tb_split = "train", tb_strategy = "performance";
    int tb_k = 3, tb_pool = 5;
    bool tb_fake = false;
    th_build->add_option("input", tb_in, "Canonical JSONL dataset")->required();
    th_build->add_option("-o,--out", tb_out, "Output template store JSONL")->required();
    th_build->add_option("--backends", tb_backends, "Backend config JSON");
    th_build->add_option("--backend", tb_backend, "Summarizer backend name")->required();
    th_build->add_option("--split", tb_split, "Source split");
    th_build->add_option("--strategy", tb_strategy, "performance | judge | hybrid");
    th_build->add_option("--hybrid-pool", tb_pool, "Hybrid first-stage pool size");
    th_build->add_flag("--fake", tb_fake, "Use the scripted offline backend");
    auto* th_answer = thoughts->add_subcommand("answer", "Answer a split with retrieved guidance");
    std::string ta_in, ta_store, ta_backends, ta_backend, ta_split = "test",
                ta_train_split = "train", ta_out, ta_paradigm = "thought_template";
    int ta_d = 3;
    bool ta_fake = false;
    th_answer->add_option("input", ta_in, "Canonical JSONL dataset")->required();
    th_answer->add_option("--store", ta_store, "Template store (thought_template paradigm)");
    th_answer->add_option("--train-split", ta_train_split, "Demonstration source split");
    th_answer->add_option("--backends", ta_backends, "Backend config JSON");
    th_answer->add_option("--backend", ta_backend, "Answering backend name")->required();
    th_answer->add_option("--split", ta_split, "Split to answer");
    th_answer->add_option("--paradigm", ta_paradigm, "zero_shot | few_shot | thought_template");
    th_answer->add_option("-d", ta_d, "Retrieved templates / demonstrations");
    th_answer->add_option("-o,--out", ta_out, "Optional answers JSONL");
    th_answer->add_flag("--fake", ta_fake, "Use the scripted offline backend");
    thoughts->require_subcommand(1);

    // ---- sft ----
    auto* sft_cmd = app.add_subcommand("sft", "SFT corpus building");
    auto* sft_export = sft_cmd->add_subcommand("export", "Export an SFT corpus with manifest");
    std::string se_in, se_out, se_manifest, se_mode = "router_sft", se_strategy = "task_performance",
                se_split = "train";
    int se_k = 5;
    bool se_no_gt = false, se_zero = false, se_direct = false, se_chat = false;
    sft_export->add_option("input", se_in, "Canonical JSONL dataset")->required();
    sft_export->add_option("-o,--out", se_out, "Output corpus JSONL")->required();
    sft_export->add_option("--manifest", se_manifest, "Manifest path (default <out>.manifest.json)");
    sft_export->add_option("--mode", se_mode, "router_sft | label_only_sft");
    sft_export->add_option("-k", se_k, "Top responses per query");
    sft_export->add_option("--strategy", se_strategy, "task_performance | llm_judge | hybrid");
    sft_export->add_option("--split", se_split, "Source split");
    sft_export->add_flag("--no-ground-truth", se_no_gt, "Drop the ground-truth example");
    sft_export->add_flag("--include-zero-performance", se_zero, "Keep zero-performance responses");
    sft_export->add_flag("--direct-only", se_direct, "Use only direct-pattern responses");
    sft_export->add_flag("--chat-format", se_chat, "Emit chat messages instead of plain fields");
    sft_cmd->require_subcommand(1);

    // ---- collect ----
    auto* collect_cmd = app.add_subcommand("collect", "Collect responses from live backends");
    std::string co_queries, co_profiles, co_backends, co_out, co_hook;
    std::vector<std::string> co_names;
    int co_checkpoint = 32;
    bool co_direct_only = false;
    collect_cmd->add_option("queries", co_queries, "Query specs JSONL")->required();
    collect_cmd->add_option("-o,--out", co_out, "Output dataset JSONL")->required();
    collect_cmd->add_option("--profiles", co_profiles, "LLM profiles JSONL")->required();
    collect_cmd->add_option("--backends", co_backends, "Backend config JSON")->required();
    collect_cmd->add_option("--backend", co_names, "Backend names to query (repeatable)")
        ->required();
    collect_cmd->add_option("--checkpoint-every", co_checkpoint, "Records between checkpoints");
    collect_cmd->add_option("--external-hook", co_hook, "external_hook metric command");
    collect_cmd->add_flag("--direct-only", co_direct_only, "Skip the think pattern");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "Static baselines and oracle summary");
    std::string rp_in, rp_scenario = "balance", rp_train = "train", rp_test = "test";
    report_cmd->add_option("input", rp_in, "Canonical JSONL dataset")->required();
    report_cmd->add_option("--scenario", rp_scenario, "Scenario preset name");
    report_cmd->add_option("--train-split", rp_train, "Train split name");
    report_cmd->add_option("--test-split", rp_test, "Test split name");

    // ---- harness ----
    auto* harness_cmd = app.add_subcommand("harness", "Experiment plans");
    auto* harness_run = harness_cmd->add_subcommand("run", "Execute a plan and emit reports");
    std::string hr_plan, hr_data, hr_backends;
    bool hr_fake = false;
    harness_run->add_option("plan", hr_plan, "Plan JSON")->required();
    harness_run->add_option("--data", hr_data, "Canonical JSONL dataset")->required();
    harness_run->add_option("--backends", hr_backends, "Backend config JSON");
    harness_run->add_flag("--fake", hr_fake, "Use scripted offline backends");
    harness_cmd->require_subcommand(1);

    // ---- fixture ----
    auto* fixture_cmd = app.add_subcommand("fixture", "Write a synthetic routing log");
    std::string fx_out;
    bool fx_planted = false;
    uint64_t fx_seed = 0;
    fixture_cmd->add_option("-o,--out", fx_out, "Output dataset JSONL")->required();
    fixture_cmd->add_flag("--planted", fx_planted, "Linearly separable routing benchmark");
    fixture_cmd->add_option("--seed", fx_seed, "Generator seed (0 = default)");

    CLI11_PARSE(app, argc, argv);

    if (ingest->parsed()) {
        Dataset ds = load_dataset(in_path);
        ds.meta.token_counter = token_counter;
        if (!profiles_path.empty()) ds.meta.llm_profiles = load_profiles(profiles_path);
        validate_dataset(ds);
        save_dataset(out_path, ds);
        std::cout << "wrote " << ds.records.size() << " records to " << out_path << "\n";
        return 0;
    }
    if (split->parsed()) {
        Dataset ds = load_dataset(split_in);
        std::vector<std::pair<std::string, double>> fractions;
        for (const auto& s : split_specs) {
            auto eq = s.find('=');
            if (eq == std::string::npos) detail::fail("split spec must be name=fraction: " + s);
            fractions.emplace_back(s.substr(0, eq), std::stod(s.substr(eq + 1)));
        }
        split_dataset(ds, fractions, split_seed);
        save_dataset(split_out, ds);
        for (const auto& [name, ids] : ds.meta.splits)
            std::cout << name << ": " << ids.size() << " queries\n";
        return 0;
    }
    if (judge_score->parsed()) {
        Dataset ds = load_dataset(js_in);
        auto reg = build_registry(js_backends, js_fake, &ds, {js_backend_name});
        std::vector<JudgeRequest> requests;
        std::vector<const RoutingRecord*> targets;
        for (const auto& r : ds.records) {
            if (r.judge_score) continue;
            requests.push_back({r.query, r.ground_truth, r.response});
            targets.push_back(&r);
        }
        auto results = score_batch(requests, reg.get(js_backend_name), js_retries);
        std::vector<JudgePatchEntry> patch;
        size_t failed = 0;
        for (size_t i = 0; i < results.size(); ++i) {
            if (results[i].parse_status == ParseStatus::Failed) {
                ++failed;
                continue;
            }
            patch.push_back({targets[i]->query_id, targets[i]->llm_name, targets[i]->pattern,
                             results[i].score});
        }
        save_judge_patch(js_out, patch);
        std::cout << "scored " << patch.size() << " records (" << failed << " failed) into "
                  << js_out << "\n";
        return failed == 0 ? 0 : 1;
    }
    if (judge_apply->parsed()) {
        Dataset ds = load_dataset(ja_in);
        size_t n = apply_judge_patch(ds, load_judge_patch(ja_patch));
        validate_dataset(ds);
        save_dataset(ja_out, ds);
        std::cout << "applied " << n << " judge scores\n";
        return 0;
    }
    if (router_train->parsed()) {
        Dataset ds = load_dataset(rt_in);
        auto w = scenario_preset(rt_scenario);
        auto ts = build_training_labels(group_by_query(ds, rt_split), w);
        RouterModel model;
        RouterKind kind = router_kind_from_string(rt_kind);
        if (kind == RouterKind::Knn) model = train_knn(ts, rt_k, w);
        else if (kind == RouterKind::Linear)
            model = train_linear(ts, rt_epochs, rt_lr, rt_l2, rt_seed, w, rt_concat);
        else if (kind == RouterKind::Mlp)
            model = train_mlp(ts, rt_hidden, rt_epochs, rt_lr, rt_seed, w, rt_concat);
        else detail::fail("router train: unsupported kind " + rt_kind);
        save_router(rt_out, model);
        std::cout << "training accuracy: " << detail::format_fixed(training_accuracy(model, ts), 4)
                  << "\n";
        return 0;
    }
    if (router_eval->parsed()) {
        Dataset ds = load_dataset(re_in);
        RouterModel model = load_router(re_model);
        auto report = evaluate_router(model, group_by_query(ds, re_split), model.scenario);
        std::cout << router_report_header() << "\n" << router_report_row(report) << "\n";
        if (!re_out.empty()) {
            std::string out;
            for (const auto& d : report.decisions) {
                ordered_json j;
                j["query_id"] = d.query_id;
                j["llm_name"] = d.chosen.llm_name;
                j["pattern"] = to_string(d.chosen.pattern);
                j["reward"] = d.reward;
                j["coverage_gap"] = d.coverage_gap;
                out += j.dump() + "\n";
            }
            detail::write_file(re_out, out);
        }
        return 0;
    }
    if (th_build->parsed()) {
        Dataset ds = load_dataset(tb_in);
        auto reg = build_registry(tb_backends, tb_fake, &ds, {tb_backend});
        SelectionStrategy strategy{selection_kind_from_string(tb_strategy), tb_k, tb_pool};
        auto built = build_template_store(group_by_query(ds, tb_split), strategy,
                                          reg.get(tb_backend));
        save_template_store(tb_out, built.store);
        std::cout << "templates: " << built.store.templates.size()
                  << " pending: " << built.pending.size() << "\n";
        return 0;
    }
    if (th_answer->parsed()) {
        Dataset ds = load_dataset(ta_in);
        auto reg = build_registry(ta_backends, ta_fake, &ds, {ta_backend});
        ExperimentPlan plan;
        plan.scenario = scenario_preset("performance_first");
        plan.train_split = ta_train_split;
        plan.test_split = ta_split;
        plan.answer_backend = ta_backend;
        plan.summarizer_backend = ta_backend;
        plan.output_dir = ".";
        MethodSpec m;
        m.kind = "thought";
        m.name = ta_paradigm;
        m.paradigm = paradigm_from_string(ta_paradigm);
        m.d = ta_d;
        auto train = group_by_query(ds, ta_train_split);
        auto test = group_by_query(ds, ta_split);
        TemplateStore store;
        const TemplateStore* prebuilt = nullptr;
        if (!ta_store.empty()) {
            store = load_template_store(ta_store);
            prebuilt = &store;
        }
        ReportRow row = detail::run_thought_method(m, plan, train, test, ds.meta.llm_profiles, reg,
                                                   prebuilt);
        double mean = 0.0;
        std::string out;
        for (const auto& d : row.decisions) {
            mean += d.performance;
            ordered_json j;
            j["query_id"] = d.query_id;
            j["performance"] = d.performance;
            out += j.dump() + "\n";
        }
        if (!row.decisions.empty()) mean /= static_cast<double>(row.decisions.size());
        if (!ta_out.empty()) detail::write_file(ta_out, out);
        std::cout << ta_paradigm << " mean performance: " << detail::format_fixed(mean, 4) << "\n";
        return 0;
    }
    if (sft_export->parsed()) {
        Dataset ds = load_dataset(se_in);
        ExportSpec spec;
        spec.mode = sft_mode_from_string(se_mode);
        spec.k = se_k;
        spec.strategy = rank_strategy_from_string(se_strategy);
        spec.include_ground_truth = !se_no_gt;
        spec.include_zero_performance = se_zero;
        spec.direct_only = se_direct;
        spec.chat_format = se_chat;
        if (se_manifest.empty()) se_manifest = se_out + ".manifest.json";
        auto manifest = export_sft(group_by_query(ds, se_split), spec, se_out, se_manifest);
        std::cout << "examples: " << manifest.total_examples
                  << " shortfall: " << manifest.total_shortfall << " hash: "
                  << manifest.content_hash << "\n";
        return 0;
    }
    if (collect_cmd->parsed()) {
        auto reg = build_registry(co_backends, false, nullptr, {});
        CollectOptions opts;
        if (co_direct_only) opts.patterns = {Pattern::Direct};
        opts.checkpoint_every = co_checkpoint;
        opts.external_hook_cmd = co_hook;
        auto stats = collect(reg, load_profiles(co_profiles), load_queries(co_queries), co_names,
                             co_out, opts);
        std::cout << "requested: " << stats.requested << " collected: " << stats.collected
                  << " already present: " << stats.already_present << " failed: " << stats.failed
                  << "\n";
        for (const auto& f : stats.failures) std::cout << "  " << f << "\n";
        return stats.failed == 0 ? 0 : 1;
    }
    if (report_cmd->parsed()) {
        Dataset ds = load_dataset(rp_in);
        auto w = scenario_preset(rp_scenario);
        auto train = group_by_query(ds, rp_train);
        auto test = group_by_query(ds, rp_test);
        auto baselines = static_baselines(train, test, w, ds.meta.llm_profiles);
        std::cout << "method,llm,performance,cost,reward,llmscore\n";
        for (const auto& [name, b] : baselines) {
            std::cout << name << "," << b.llm_name << ","
                      << detail::format_fixed(b.summary.performance) << ","
                      << detail::format_fixed(b.summary.cost) << ","
                      << detail::format_fixed(b.summary.reward) << ","
                      << detail::format_fixed(b.summary.judge) << "\n";
        }
        auto oracle = evaluate_oracle(test, w);
        std::cout << "oracle,," << detail::format_fixed(oracle.performance) << ","
                  << detail::format_fixed(oracle.cost) << ","
                  << detail::format_fixed(oracle.reward) << ","
                  << detail::format_fixed(oracle.llm_score) << "\n";
        return 0;
    }
    if (harness_run->parsed()) {
        ExperimentPlan plan = load_plan(hr_plan);
        Dataset ds = load_dataset(hr_data);
        auto reg = build_registry(hr_backends, hr_fake, &ds,
                                  {plan.answer_backend, plan.summarizer_backend});
        auto table = run_plan(plan, ds, reg);
        emit_reports(table, plan.output_dir);
        for (const auto& row : table.rows)
            std::cout << row.method << ": " << row.status
                      << (row.status == "ok"
                              ? " reward=" + detail::format_fixed(row.reward, 4)
                              : "")
                      << "\n";
        return 0;
    }
    if (fixture_cmd->parsed()) {
        Dataset ds;
        if (fx_planted) {
            ds = fx_seed ? make_planted_fixture(400, 8, 0.15, fx_seed) : make_planted_fixture();
        } else {
            FixtureOptions opts;
            if (fx_seed) opts.seed = fx_seed;
            ds = make_fixture(opts);
        }
        save_dataset(fx_out, ds);
        std::cout << "wrote " << ds.records.size() << " records to " << fx_out << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
