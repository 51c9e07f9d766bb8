// Acceptance gate. Each test case carries exactly one tag and CMake
// registers one ctest entry per tag, so every release criterion reports
// its own pass/fail line. Reference values are asserted with non-fatal
// checks where a discrepancy should be visible rather than fatal.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "routefuse/distill.hpp"
#include "routefuse/harness.hpp"
#include "routefuse/judge.hpp"
#include "routefuse/synthetic.hpp"
#include "support/fixture.hpp"

using namespace routefuse;
using Catch::Matchers::WithinAbs;

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string slurp_or_empty(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "";
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// [reward_arithmetic]
// ---------------------------------------------------------------------------

TEST_CASE("reward combination reproduces the reference scenario values", "[reward_arithmetic]") {
    auto balance = compute_reward(0.556, 0.0681, std::nullopt, scenario_preset("balance"));
    CHECK_THAT(balance.reward, WithinAbs(0.244, 0.001));  // 0.5*0.556 - 0.5*0.0681 = 0.24395

    // 0.2*0.431 - 0.8*0.0047 is exactly 0.08244, which misses the quoted
    // reference 0.0823 by 0.00014, outside the stated 0.0001 tolerance.
    // The quoted value can only come from inputs carrying more digits than
    // the ones published next to it. Kept as an honest failing check
    // instead of widening the tolerance.
    auto cost_first = compute_reward(0.431, 0.0047, std::nullopt, scenario_preset("cost_first"));
    CHECK_THAT(cost_first.reward, WithinAbs(0.0823, 0.0001));
}

// ---------------------------------------------------------------------------
// [oracle_dominance]
// ---------------------------------------------------------------------------

TEST_CASE("oracle bounds trained routers which bound the random policy", "[oracle_dominance]") {
    Stopwatch clock;
    Dataset ds = make_fixture();
    auto train = group_by_query(ds, "train");
    auto test = group_by_query(ds, "test");

    std::set<std::string> llms;
    std::set<Pattern> patterns;
    for (const auto& r : ds.records) {
        llms.insert(r.llm_name);
        patterns.insert(r.pattern);
    }
    REQUIRE(train.size() + test.size() >= 200);
    REQUIRE(llms.size() >= 5);
    REQUIRE(patterns.size() == 2);

    for (const auto& w : all_scenario_presets()) {
        CAPTURE(w.name);
        auto ts = build_training_labels(train, w);
        auto oracle = evaluate_oracle(test, w);
        auto random = evaluate_router(make_random_router(ts.label_space, w, 31), test, w);

        const std::vector<RouterReport> routed = {
            evaluate_router(train_knn(ts, 5, w), test, w),
            evaluate_router(train_linear(ts, 30, 0.1, 1e-4, 9001, w), test, w),
            evaluate_router(train_mlp(ts, {32}, 30, 0.05, 9001, w), test, w),
        };
        CHECK(oracle.reward >= random.reward - 1e-9);
        for (const auto& r : routed) {
            CAPTURE(r.method);
            CHECK(oracle.reward >= r.reward - 1e-9);
            CHECK(r.reward >= random.reward);
        }
    }

    // A 1-nearest-neighbor router memorizes its training set exactly.
    auto pf = scenario_preset("performance_first");
    auto ts = build_training_labels(train, pf);
    CHECK(training_accuracy(train_knn(ts, 1, pf), ts) == 1.0);

    CHECK(clock.seconds() < 10.0);
}

// ---------------------------------------------------------------------------
// [router_learnability]
// ---------------------------------------------------------------------------

TEST_CASE("routers recover planted structure and the mlp gradient is exact",
          "[router_learnability]") {
    Stopwatch clock;
    Dataset ds = make_planted_fixture(400, 8, 0.15, 77);
    auto w = scenario_preset("performance_first");
    auto ts = build_training_labels(group_by_query(ds, "train"), w);
    auto held_out = build_training_labels(group_by_query(ds, "test"), w);

    auto linear = train_linear(ts, 40, 0.1, 1e-4, 123, w);
    CHECK(training_accuracy(linear, held_out) >= 0.95);

    auto net = train_mlp(ts, {16}, 60, 0.1, 123, w);
    CHECK(training_accuracy(net, held_out) >= 0.95);

    // Finite differences against the analytic batch gradient, probed at a
    // partially trained point so the weights are away from the init.
    auto probe = train_mlp(ts, {16}, 3, 0.05, 99, w);
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    auto check_param = [&](std::vector<double>& slot, size_t i, double analytic,
                           std::span<const TrainingExample> batch) {
        const double eps = 1e-5;
        const double saved = slot[i];
        slot[i] = saved + eps;
        double up = mlp::loss_only(probe, batch);
        slot[i] = saved - eps;
        double down = mlp::loss_only(probe, batch);
        slot[i] = saved;
        double numeric = (up - down) / (2.0 * eps);
        // Floored denominator keeps vanishing gradients from inflating
        // the ratio past the resolution of central differences.
        double rel = std::abs(analytic - numeric) /
                     std::max(1e-8, std::abs(analytic) + std::abs(numeric));
        worst = std::max(worst, rel);
    };
    for (int b = 0; b < 10; ++b) {
        std::vector<TrainingExample> batch;
        for (int i = 0; i < 8; ++i)
            batch.push_back(ts.examples[rng() % ts.examples.size()]);
        auto grads = mlp::loss_and_gradients(probe, batch);
        for (size_t layer = 0; layer < probe.mlp_weights.size(); ++layer) {
            for (size_t i = 0; i < probe.mlp_weights[layer].size(); ++i)
                check_param(probe.mlp_weights[layer], i, grads.dweights[layer][i], batch);
            for (size_t i = 0; i < probe.mlp_biases[layer].size(); ++i)
                check_param(probe.mlp_biases[layer], i, grads.dbiases[layer][i], batch);
        }
    }
    CHECK(worst < 1e-4);

    CHECK(clock.seconds() < 60.0);
}

// ---------------------------------------------------------------------------
// [selection_equivalence]
// ---------------------------------------------------------------------------

namespace {

// Ordering contract restated from scratch: performance descending, then
// cost ascending, then llm name, then direct before think. Judge orderings
// start from the judge score instead.
int pattern_rank(const RoutingRecord* r) { return r->pattern == Pattern::Direct ? 0 : 1; }

bool ref_perf_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (a->performance != b->performance) return a->performance > b->performance;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return pattern_rank(a) < pattern_rank(b);
}

bool ref_judge_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (*a->judge_score != *b->judge_score) return *a->judge_score > *b->judge_score;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return pattern_rank(a) < pattern_rank(b);
}

bool ref_hybrid_order(const RoutingRecord* a, const RoutingRecord* b) {
    if (a->performance != b->performance) return a->performance > b->performance;
    if (*a->judge_score != *b->judge_score) return *a->judge_score > *b->judge_score;
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->llm_name != b->llm_name) return a->llm_name < b->llm_name;
    return pattern_rank(a) < pattern_rank(b);
}

std::vector<const RoutingRecord*> ref_select(const QueryGroup& g, const SelectionStrategy& s) {
    std::vector<const RoutingRecord*> pool = g.records;
    SelectionKind kind = s.kind;
    if (kind == SelectionKind::Hybrid && s.hybrid_pool == s.k) kind = SelectionKind::Performance;
    if (kind == SelectionKind::Performance) {
        std::sort(pool.begin(), pool.end(), ref_perf_order);
    } else if (kind == SelectionKind::Judge) {
        std::sort(pool.begin(), pool.end(), ref_judge_order);
    } else {
        std::sort(pool.begin(), pool.end(), ref_perf_order);
        if (pool.size() > static_cast<size_t>(s.hybrid_pool))
            pool.resize(static_cast<size_t>(s.hybrid_pool));
        std::sort(pool.begin(), pool.end(), ref_judge_order);
    }
    if (pool.size() > static_cast<size_t>(s.k)) pool.resize(static_cast<size_t>(s.k));
    return pool;
}

std::vector<const RoutingRecord*> ref_rank(const QueryGroup& g, RankStrategy strategy) {
    std::vector<const RoutingRecord*> records = g.records;
    switch (strategy) {
        case RankStrategy::TaskPerformance:
            std::sort(records.begin(), records.end(), ref_perf_order);
            break;
        case RankStrategy::LlmJudge:
            std::sort(records.begin(), records.end(), ref_judge_order);
            break;
        case RankStrategy::Hybrid:
            std::sort(records.begin(), records.end(), ref_hybrid_order);
            break;
    }
    return records;
}

}  // namespace

TEST_CASE("top-k selection and response ranking match exhaustive references",
          "[selection_equivalence]") {
    Stopwatch clock;
    std::mt19937_64 rng(20260814);
    // Discrete value grids so ties at every ordering stage are frequent.
    const double perf_grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    const double cost_grid[] = {0.01, 0.02, 0.03};
    const double judge_grid[] = {0.2, 0.5, 0.8};
    const std::string llm_names[] = {"llm-a", "llm-b", "llm-c", "llm-d",
                                     "llm-e", "llm-f", "llm-g", "llm-h"};

    for (int trial = 0; trial < 1000; ++trial) {
        // Sample distinct (llm, pattern) arms so every ordering is total.
        std::vector<int> arms(16);
        std::iota(arms.begin(), arms.end(), 0);
        for (size_t i = arms.size() - 1; i > 0; --i)
            std::swap(arms[i], arms[rng() % (i + 1)]);
        const size_t n = 1 + rng() % 12;

        std::vector<testsupport::RecordSpec> specs;
        for (size_t i = 0; i < n; ++i) {
            testsupport::RecordSpec s;
            s.query_id = "q";
            s.llm_name = llm_names[static_cast<size_t>(arms[i]) / 2];
            s.pattern = arms[i] % 2 == 0 ? Pattern::Direct : Pattern::Think;
            s.performance = perf_grid[rng() % 5];
            s.cost = cost_grid[rng() % 3];
            s.judge = judge_grid[rng() % 3];
            specs.push_back(std::move(s));
        }
        Dataset ds = testsupport::make_dataset(specs);
        auto groups = group_by_query(ds);
        REQUIRE(groups.size() == 1);
        const QueryGroup& g = groups[0];

        for (SelectionKind kind :
             {SelectionKind::Performance, SelectionKind::Judge, SelectionKind::Hybrid}) {
            SelectionStrategy s;
            s.kind = kind;
            s.k = 1 + static_cast<int>(rng() % 6);
            s.hybrid_pool = s.k + static_cast<int>(rng() % 4);
            auto got = select_top_k(g, s);
            auto want = ref_select(g, s);
            REQUIRE(got.records == want);
            CHECK(got.short_group == (want.size() < static_cast<size_t>(s.k)));
        }
        for (RankStrategy strategy :
             {RankStrategy::TaskPerformance, RankStrategy::LlmJudge, RankStrategy::Hybrid}) {
            REQUIRE(rank_responses(g, strategy) == ref_rank(g, strategy));
        }
    }
    CHECK(clock.seconds() < 5.0);
}

// ---------------------------------------------------------------------------
// [retrieval_equivalence]
// ---------------------------------------------------------------------------

namespace {

// Cosine restated from its definition; zero vectors score 0.
double ref_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

}  // namespace

TEST_CASE("template retrieval matches a full similarity scan", "[retrieval_equivalence]") {
    Stopwatch clock;
    std::mt19937_64 rng(8861);
    auto coord = [&] { return 2.0 * detail::uniform01(rng) - 1.0; };

    for (int trial = 0; trial < 500; ++trial) {
        const int dim = 8 + static_cast<int>(rng() % 377);  // 8..384
        const size_t n = 1 + rng() % 40;

        TemplateStore store;
        store.embedding_dim = dim;
        for (size_t j = 0; j < n; ++j) {
            ThoughtTemplate t;
            char id[32];
            std::snprintf(id, sizeof(id), "q%03zu", j);
            t.source_query_id = id;
            t.template_text = "template for " + t.source_query_id;
            if (j > 0 && rng() % 100 < 35) {
                t.query_embedding = store.templates[rng() % j].query_embedding;  // forced tie
            } else {
                t.query_embedding.resize(static_cast<size_t>(dim));
                for (auto& v : t.query_embedding) v = coord();
            }
            store.templates.push_back(std::move(t));
        }

        std::vector<double> probe(static_cast<size_t>(dim));
        const uint64_t probe_kind = rng() % 100;
        if (probe_kind < 10) {
            probe = store.templates[rng() % n].query_embedding;  // exact hit
        } else if (probe_kind < 15) {
            std::fill(probe.begin(), probe.end(), 0.0);  // zero norm: all sims collapse to 0
        } else {
            for (auto& v : probe) v = coord();
        }

        const int d = 1 + static_cast<int>(rng() % (n + 3));  // sometimes saturates the store
        std::string exclude;
        if (rng() % 100 < 30) exclude = store.templates[rng() % n].source_query_id;

        auto got = retrieve(store, probe, d, exclude);

        std::vector<std::pair<const ThoughtTemplate*, double>> want;
        for (const auto& t : store.templates) {
            if (!exclude.empty() && t.source_query_id == exclude) continue;
            want.push_back({&t, ref_cosine(t.query_embedding, probe)});
        }
        std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first->source_query_id < b.first->source_query_id;
        });
        if (want.size() > static_cast<size_t>(d)) want.resize(static_cast<size_t>(d));

        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].tmpl == want[i].first);
            CHECK_THAT(got[i].similarity, WithinAbs(want[i].second, 1e-12));
        }
    }
    CHECK(clock.seconds() < 5.0);
}

// ---------------------------------------------------------------------------
// [prompt_fidelity]
// ---------------------------------------------------------------------------

TEST_CASE("rendered prompts are byte-identical to their golden files", "[prompt_fidelity]") {
    const std::string golden_dir = ROUTEFUSE_GOLDEN_DIR;

    std::string judge_golden = detail::read_file(golden_dir + "/judge_prompt.txt");
    JudgeRequest request;
    request.query = "What is 2+2?";
    request.ground_truth = "4";
    request.response = "The answer is 4.";
    CHECK(render_judge_prompt(request) == judge_golden);
    // The anchor the reply parser depends on closes the prompt.
    CHECK(judge_golden.rfind("<answer>SCORE</answer>") == judge_golden.size() - 22);

    std::string summarizer_golden = detail::read_file(golden_dir + "/summarizer_prompt.txt");
    std::vector<std::string> solutions = {
        "17 + 25 = 42.",
        "Add the tens then the ones: 17 + 25 = 42.",
        "The sum is 42.",
    };
    CHECK(render_summarizer_prompt("What is 17 + 25?", solutions) == summarizer_golden);
    CHECK(summarizer_golden.rfind("Thought Template:") == summarizer_golden.size() - 17);
}

// ---------------------------------------------------------------------------
// [sft_accounting]
// ---------------------------------------------------------------------------

TEST_CASE("sft export accounting reconciles across modes", "[sft_accounting]") {
    Stopwatch clock;
    FixtureOptions opts;
    opts.queries_per_task = 10;
    Dataset ds = make_fixture(opts);
    auto groups = group_by_query(ds, "train");
    REQUIRE(!groups.empty());

    std::map<std::string, std::string> response_of;  // query|llm|pattern -> verbatim text
    std::map<std::string, std::string> truth_of;
    for (const auto& r : ds.records) {
        response_of[r.query_id + "|" + r.llm_name + "|" + to_string(r.pattern)] = r.response;
        truth_of[r.query_id] = r.ground_truth;
    }

    // K=5 is mostly satisfiable; K=12 exceeds every group so the shortfall
    // path is exercised on every query.
    for (int k : {5, 12}) {
        CAPTURE(k);
        ExportSpec spec;
        spec.k = k;
        std::map<std::string, int64_t> shortfalls;
        auto router_rows = build_sft_examples(groups, spec, &shortfalls);
        int64_t missing = 0;
        for (const auto& [qid, s] : shortfalls) missing += s;
        CHECK(static_cast<int64_t>(router_rows.size()) ==
              static_cast<int64_t>(k + 1) * static_cast<int64_t>(groups.size()) - missing);

        ExportSpec label_spec = spec;
        label_spec.mode = SftMode::LabelOnlySft;
        auto label_rows = build_sft_examples(groups, label_spec, nullptr);
        REQUIRE(label_rows.size() == router_rows.size());

        for (size_t i = 0; i < router_rows.size(); ++i) {
            const auto& r = router_rows[i];
            const auto& l = label_rows[i];
            REQUIRE(l.query_id == r.query_id);
            REQUIRE(l.rank == r.rank);
            REQUIRE(l.source == "ground_truth");
            REQUIRE(l.output == truth_of.at(l.query_id));
            if (r.source == "llm_response") {
                REQUIRE(r.output ==
                        response_of.at(r.query_id + "|" + r.source_llm + "|" +
                                       to_string(*r.pattern)));
            } else {
                REQUIRE(r.rank == 0);
                REQUIRE(r.output == truth_of.at(r.query_id));
            }
        }
    }

    // File-level export agrees with the in-memory construction.
    auto out = fresh_dir("routefuse_accept_sft");
    ExportSpec spec;
    spec.k = 5;
    auto corpus = (out / "corpus.jsonl").string();
    auto manifest = export_sft(groups, spec, corpus, (out / "manifest.json").string());
    auto rows = build_sft_examples(groups, spec, nullptr);
    CHECK(manifest.total_examples == static_cast<int64_t>(rows.size()));
    CHECK(manifest.content_hash == detail::fnv1a_hex(detail::read_file(corpus)));

    CHECK(clock.seconds() < 5.0);
}

// ---------------------------------------------------------------------------
// [cost_model]
// ---------------------------------------------------------------------------

TEST_CASE("cost model reproduces the published price table", "[cost_model]") {
    auto profiles = load_profiles(std::string(ROUTEFUSE_DATA_DIR) + "/llm_profiles.jsonl");

    // Dollars for one million input plus one million output tokens.
    const std::vector<std::pair<std::string, double>> expected = {
        {"gemma-2-9b", 0.40},
        {"qwen2-7b", 0.40},
        {"gemma-7b", 0.40},
        {"codegemma-7b", 0.40},
        {"mistral-7b", 0.40},
        {"llama-3.1-8b", 0.40},
        {"granite-8b", 0.40},
        {"llama-3-chatqa-8b", 0.40},
        {"qwen2.5-7b", 0.40},
        {"mistral-nemo-12b", 0.60},
        {"granite-code-34b", 1.60},
        {"llama-3.3-nemotron-super-49b", 1.80},
        {"llama-3.1-nemotron-51b", 1.80},
        {"mixtral-8x7b", 1.20},
        {"llama-3.1-70b", 1.80},
        {"llama-3-chatqa-70b", 1.80},
        {"llama-3-70b", 1.80},
        {"palmyra-creative-122b", 3.60},
        {"mixtral-8x22b", 2.40},
        {"deepseek-r1-671b", 2.74},
    };
    REQUIRE(profiles.size() == expected.size());

    std::map<std::string, const LlmProfile*> by_name;
    for (const auto& p : profiles) by_name[p.name] = &p;
    for (const auto& [name, dollars] : expected) {
        CAPTURE(name);
        REQUIRE(by_name.count(name) == 1);
        CHECK_THAT(estimate_cost(1'000'000, 1'000'000, *by_name.at(name)),
                   WithinAbs(dollars, 1e-9));
    }

    // The one asymmetric profile splits exactly by direction.
    CHECK_THAT(estimate_cost(1'000'000, 0, *by_name.at("deepseek-r1-671b")), WithinAbs(0.55, 1e-9));
    CHECK_THAT(estimate_cost(0, 1'000'000, *by_name.at("deepseek-r1-671b")), WithinAbs(2.19, 1e-9));
}

// ---------------------------------------------------------------------------
// [offline_end_to_end]
// ---------------------------------------------------------------------------

TEST_CASE("offline harness run is complete and reproducible", "[offline_end_to_end]") {
    namespace fs = std::filesystem;
    Stopwatch clock;

    const std::string cli = ROUTEFUSE_CLI_PATH;
    REQUIRE(fs::exists(cli));

    auto base = fresh_dir("routefuse_accept_e2e");
    FixtureOptions opts;
    opts.queries_per_task = 12;
    opts.embedding_dim = 8;
    opts.seed = 4242;
    Dataset ds = make_fixture(opts);
    auto data = base / "fixture.jsonl";
    save_dataset(data.string(), ds);

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.seed = 7;
    plan.answer_backend = "fixture-llm";
    auto baseline = [](const std::string& name) {
        MethodSpec m;
        m.kind = "baseline";
        m.name = name;
        m.baseline = name;
        return m;
    };
    auto router = [](const std::string& name, RouterKind kind) {
        MethodSpec m;
        m.kind = "router";
        m.name = name;
        m.router_kind = kind;
        return m;
    };
    auto thought = [](const std::string& name, Paradigm paradigm) {
        MethodSpec m;
        m.kind = "thought";
        m.name = name;
        m.paradigm = paradigm;
        return m;
    };
    MethodSpec sft;
    sft.kind = "sft";
    sft.name = "corpus";
    plan.methods = {
        baseline("best_llm"),
        baseline("llm_mean"),
        baseline("largest_llm"),
        baseline("random"),
        baseline("oracle"),
        router("knn", RouterKind::Knn),
        router("linear", RouterKind::Linear),
        router("mlp", RouterKind::Mlp),
        thought("zero_shot", Paradigm::ZeroShot),
        thought("few_shot", Paradigm::FewShot),
        thought("thought_template", Paradigm::ThoughtTemplate),
        sft,
    };

    auto run = [&](const fs::path& out_dir, const fs::path& plan_path, const fs::path& log) {
        plan.output_dir = out_dir.string();
        detail::write_file(plan_path.string(), plan_to_json(plan).dump(2) + "\n");
        std::string cmd = cli + " harness run " + plan_path.string() + " --data " + data.string() +
                          " --fake > " + log.string() + " 2>&1";
        int rc = std::system(cmd.c_str());
        INFO(cmd);
        INFO(slurp_or_empty(log));
        REQUIRE(rc == 0);
    };
    auto run1 = base / "run1";
    auto run2 = base / "run2";
    run(run1, base / "plan1.json", base / "log1.txt");
    run(run2, base / "plan2.json", base / "log2.txt");

    // Same seed, different output directories: identical report bytes.
    std::string scenario_csv = detail::read_file((run1 / "report_scenario.csv").string());
    REQUIRE(scenario_csv == detail::read_file((run2 / "report_scenario.csv").string()));
    std::string domains_csv = detail::read_file((run1 / "report_domains.csv").string());
    REQUIRE(domains_csv == detail::read_file((run2 / "report_domains.csv").string()));

    auto scenario_lines = lines_of(scenario_csv);
    REQUIRE(scenario_lines.size() >= 2 + plan.methods.size());
    CHECK(scenario_lines[0].rfind("# seed=7 scenario=balance dataset_hash=", 0) == 0);
    CHECK(scenario_lines[1] == "method,scenario,performance,cost,reward,llmscore,coverage_gaps");

    auto domain_lines = lines_of(domains_csv);
    REQUIRE(domain_lines.size() >= 2);
    CHECK(domain_lines[1] == "method,math,code,commonsense,world,read,popular,average");

    auto report = json::parse(detail::read_file((run1 / "report.json").string()));
    REQUIRE(report.at("rows").size() == plan.methods.size());
    std::vector<std::string> seen;
    for (const auto& row : report.at("rows")) {
        const std::string status = row.at("status").get<std::string>();
        CAPTURE(row.at("method").get<std::string>(), status);
        CHECK((status == "ok" || status == "exported"));
        seen.push_back(row.at("method").get<std::string>());
    }
    std::vector<std::string> expected_methods;
    for (const auto& m : plan.methods) expected_methods.push_back(m.name);
    CHECK(seen == expected_methods);

    CHECK(fs::exists(run1 / "report.md"));
    CHECK(fs::exists(run1 / "sft_corpus.jsonl"));
    CHECK(fs::exists(run1 / "sft_corpus_manifest.json"));

    CHECK(clock.seconds() < 120.0);
}
