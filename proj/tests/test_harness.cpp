#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "routefuse/harness.hpp"
#include "routefuse/synthetic.hpp"
#include "support/fixture.hpp"

using namespace routefuse;
using Catch::Approx;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset small_fixture() {
    return make_fixture({.queries_per_task = 6, .embedding_dim = 8, .seed = 20240601});
}

MethodSpec baseline_method(const std::string& name) {
    MethodSpec m;
    m.kind = "baseline";
    m.name = name;
    m.baseline = name;
    return m;
}

}  // namespace

TEST_CASE("plans parse with defaults and strict method names") {
    json j = {
        {"scenario", "balance"},
        {"output_dir", "/tmp/out"},
        {"methods", json::array({{{"kind", "baseline"}, {"name", "best_llm"}}})},
    };
    auto p = plan_from_json(j);
    CHECK(p.scenario.name == "balance");
    CHECK(p.scenario.alpha == 0.5);
    CHECK(p.train_split == "train");
    CHECK(p.test_split == "test");
    CHECK(p.seed == 0);
    CHECK_FALSE(p.direct_only);
    REQUIRE(p.methods.size() == 1);
    CHECK(p.methods[0].baseline == "best_llm");  // defaults to the method name

    SECTION("custom scenario object") {
        j["scenario"] = {{"name", "tilted"}, {"alpha", 0.7}, {"beta", 0.2}, {"gamma", 0.1}};
        auto custom = plan_from_json(j);
        CHECK(custom.scenario.name == "tilted");
        CHECK(custom.scenario.beta == 0.2);
    }
    SECTION("router method defaults derive from the name") {
        j["methods"] = json::array({{{"kind", "router"}, {"name", "mlp"}}});
        auto rp = plan_from_json(j);
        CHECK(rp.methods[0].router_kind == RouterKind::Mlp);
        CHECK(rp.methods[0].hidden == std::vector<int>{32});
    }
    SECTION("duplicate method names rejected") {
        j["methods"] = json::array({{{"kind", "baseline"}, {"name", "x"}},
                                    {{"kind", "baseline"}, {"name", "x"}}});
        CHECK_THROWS_AS(plan_from_json(j), Error);
    }
    SECTION("empty methods rejected") {
        j["methods"] = json::array();
        CHECK_THROWS_AS(plan_from_json(j), Error);
    }
    SECTION("unknown kind rejected") {
        j["methods"] = json::array({{{"kind", "wizard"}, {"name", "x"}}});
        CHECK_THROWS_AS(plan_from_json(j), Error);
    }
    SECTION("plan json round-trips") {
        auto back = plan_from_json(plan_to_json(p));
        CHECK(back.scenario.name == p.scenario.name);
        CHECK(back.methods.size() == p.methods.size());
        CHECK(back.methods[0].name == p.methods[0].name);
    }
}

TEST_CASE("scale filter keeps only matching llm arms") {
    Dataset ds = small_fixture();
    auto small = detail::filter_dataset_by_scale(ds, "small");
    std::set<std::string> llms;
    for (const auto& r : small.records) llms.insert(r.llm_name);
    CHECK(llms == std::set<std::string>{"nano-4b", "swift-8b"});

    auto large = detail::filter_dataset_by_scale(ds, "large");
    for (const auto& r : large.records) CHECK(r.llm_name == "apex-120b");

    SECTION("no profiles in scale leaves nothing") {
        Dataset bare = testsupport::make_dataset({{"q1", "a"}});
        CHECK_THROWS_AS(detail::filter_dataset_by_scale(bare, "large"), Error);
    }
}

TEST_CASE("a plan run reports every method and persists its decisions") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_run");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    plan.seed = 7;
    plan.methods = {baseline_method("oracle"), baseline_method("best_llm"),
                    baseline_method("llm_mean"), baseline_method("largest_llm"),
                    baseline_method("random")};
    MethodSpec knn;
    knn.kind = "router";
    knn.name = "knn";
    knn.router_kind = RouterKind::Knn;
    knn.knn_k = 5;
    plan.methods.push_back(knn);
    MethodSpec sft;
    sft.kind = "sft";
    sft.name = "sft_export";
    sft.sft.k = 3;
    plan.methods.push_back(sft);

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    REQUIRE(table.rows.size() == 7);

    auto test_groups = group_by_query(ds, "test");
    for (const auto& row : table.rows) {
        INFO(row.method << " -> " << row.status);
        if (row.method == "sft_export") {
            CHECK(row.status == "exported");
        } else {
            CHECK(row.status == "ok");
            CHECK(row.queries == static_cast<int64_t>(test_groups.size()));
            CHECK(row.performance >= 0.0);
            CHECK(row.performance <= 1.0);
            CHECK_FALSE(row.domain_means.empty());
        }
    }
    CHECK(table.metadata["queries_test"] == test_groups.size());
    CHECK(table.metadata["dataset_hash"].is_string());

    SECTION("oracle tops every evaluated method") {
        double oracle_reward = table.rows[0].reward;
        for (size_t i = 1; i + 1 < table.rows.size(); ++i)
            CHECK(oracle_reward >= table.rows[i].reward);
    }
    SECTION("best_llm row agrees with the static baseline computation") {
        auto train_groups = group_by_query(ds, "train");
        auto ref = static_baselines(train_groups, test_groups, plan.scenario,
                                    ds.meta.llm_profiles);
        const auto& row = table.rows[1];
        CHECK(row.performance == Approx(ref.at("best_llm").summary.performance).margin(1e-9));
        CHECK(row.reward == Approx(ref.at("best_llm").summary.reward).margin(1e-9));
        CHECK(row.notes == "llm=" + ref.at("best_llm").llm_name);

        const auto& mean_row = table.rows[2];
        CHECK(mean_row.performance == Approx(ref.at("llm_mean").summary.performance).margin(1e-9));
        const auto& largest_row = table.rows[3];
        CHECK(largest_row.notes == "llm=" + ref.at("largest_llm").llm_name);
    }
    SECTION("decision logs re-derive the report rows") {
        for (const auto& row : table.rows) {
            if (row.status != "ok") continue;
            auto path = out / ("decisions_" + row.method + ".jsonl");
            REQUIRE(std::filesystem::exists(path));
            auto decisions = detail::load_decisions(path.string());
            REQUIRE(static_cast<int64_t>(decisions.size()) == row.queries);
            double perf = 0.0, cost = 0.0, reward = 0.0;
            int64_t gaps = 0;
            for (const auto& d : decisions) {
                perf += d.performance;
                cost += d.cost;
                reward += d.reward;
                gaps += d.coverage_gap ? 1 : 0;
            }
            double n = static_cast<double>(decisions.size());
            CHECK(row.performance == Approx(perf / n).margin(1e-9));
            CHECK(row.cost == Approx(cost / n).margin(1e-9));
            CHECK(row.reward == Approx(reward / n).margin(1e-9));
            CHECK(row.coverage_gaps == gaps);
        }
    }
    SECTION("decision log header names the method") {
        auto first_line = slurp((out / "decisions_oracle.jsonl").string());
        first_line = first_line.substr(0, first_line.find('\n'));
        CHECK(first_line.find("#meta") == 0);
        CHECK(first_line.find("\"oracle\"") != std::string::npos);
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("a failing method does not sink the rest of the plan") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_fail");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    MethodSpec reserved;
    reserved.kind = "router";
    reserved.name = "router_bert";
    reserved.router_kind = RouterKind::RouterBert;
    plan.methods = {reserved, baseline_method("oracle")};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].status.rfind("failed:", 0) == 0);
    CHECK(table.rows[1].status == "ok");

    // the failed row renders with empty metric cells
    auto csv = report_scenario_csv(table);
    CHECK(csv.find("router_bert,balance,,,,,\n") != std::string::npos);
    std::filesystem::remove_all(out);
}

TEST_CASE("thought methods answer through the registered backend") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_thought");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    plan.answer_backend = "fixture-llm";
    for (const char* p : {"zero_shot", "few_shot", "thought_template"}) {
        MethodSpec m;
        m.kind = "thought";
        m.name = p;
        m.paradigm = paradigm_from_string(p);
        m.d = 2;
        plan.methods.push_back(m);
    }

    BackendRegistry reg;
    reg.add(make_fixture_backend(ds, "fixture-llm"));
    auto table = run_plan(plan, ds, reg);
    REQUIRE(table.rows.size() == 3);
    for (const auto& row : table.rows) {
        INFO(row.method << " -> " << row.status);
        CHECK(row.status == "ok");
        CHECK(row.performance >= 0.0);
        CHECK(row.performance <= 1.0);
        // no profile is named after the backend, so cost is unknown-zero
        CHECK(row.cost == 0.0);
        for (const auto& d : row.decisions) CHECK(d.chosen == "fixture-llm");
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("thought methods without a registered backend fail their row only") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_nobackend");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    plan.answer_backend = "missing-llm";
    MethodSpec m;
    m.kind = "thought";
    m.name = "zero_shot";
    m.paradigm = Paradigm::ZeroShot;
    plan.methods = {m, baseline_method("oracle")};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    CHECK(table.rows[0].status.rfind("failed:", 0) == 0);
    CHECK(table.rows[1].status == "ok");
    std::filesystem::remove_all(out);
}

TEST_CASE("reports render csv, json and markdown consistently") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_reports");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("cost_first");
    plan.output_dir = out.string();
    plan.seed = 3;
    plan.methods = {baseline_method("oracle"), baseline_method("random")};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    emit_reports(table, out.string());

    auto csv = slurp((out / "report_scenario.csv").string());
    CHECK(csv.rfind("# seed=3 scenario=cost_first dataset_hash=", 0) == 0);
    CHECK(csv.find("method,scenario,performance,cost,reward,llmscore,coverage_gaps\n") !=
          std::string::npos);
    CHECK(csv.find("oracle,cost_first,") != std::string::npos);

    auto domains = slurp((out / "report_domains.csv").string());
    CHECK(domains.find("method,math,code,commonsense,world,read,popular,average") !=
          std::string::npos);

    auto j = json::parse(slurp((out / "report.json").string()));
    CHECK(j["metadata"]["plan"]["seed"] == 3);
    REQUIRE(j["rows"].size() == 2);
    CHECK(j["rows"][0]["method"] == "oracle");
    CHECK(j["rows"][0]["status"] == "ok");
    CHECK(j["rows"][0].contains("domain_performance"));

    auto md = slurp((out / "report.md").string());
    CHECK(md.find("| Method | Performance |") != std::string::npos);
    CHECK(md.find("| oracle |") != std::string::npos);

    SECTION("unknown format rejected") {
        CHECK_THROWS_AS(emit_reports(table, out.string(), {"pdf"}), Error);
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("an empty report table renders headers only") {
    ReportTable table;
    table.metadata["plan"]["seed"] = 0;
    table.metadata["plan"]["scenario"]["name"] = "balance";
    table.metadata["dataset_hash"] = "0";

    auto csv = report_scenario_csv(table);
    auto lines = detail::split_lines(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[1] == "method,scenario,performance,cost,reward,llmscore,coverage_gaps");
}

TEST_CASE("identical seeds give byte-identical scenario reports") {
    Dataset ds = small_fixture();
    auto out1 = temp_dir("harness_rep1");
    auto out2 = temp_dir("harness_rep2");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.seed = 11;
    plan.methods = {baseline_method("oracle"), baseline_method("random")};
    MethodSpec knn;
    knn.kind = "router";
    knn.name = "knn";
    plan.methods.push_back(knn);

    BackendRegistry reg;
    plan.output_dir = out1.string();
    emit_reports(run_plan(plan, ds, reg), out1.string());
    plan.output_dir = out2.string();
    emit_reports(run_plan(plan, ds, reg), out2.string());

    CHECK(slurp((out1 / "report_scenario.csv").string()) ==
          slurp((out2 / "report_scenario.csv").string()));
    CHECK(slurp((out1 / "report_domains.csv").string()) ==
          slurp((out2 / "report_domains.csv").string()));
    std::filesystem::remove_all(out1);
    std::filesystem::remove_all(out2);
}

TEST_CASE("direct-only plans route over direct arms alone") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_direct");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    plan.direct_only = true;
    plan.methods = {baseline_method("oracle")};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    REQUIRE(table.rows[0].status == "ok");
    for (const auto& d : table.rows[0].decisions) CHECK(d.pattern == "direct");
    std::filesystem::remove_all(out);
}

TEST_CASE("llm filter narrows the decision space") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_filter");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    plan.llm_filter = "small";
    plan.methods = {baseline_method("oracle"), baseline_method("best_llm")};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    for (const auto& row : table.rows) {
        REQUIRE(row.status == "ok");
        for (const auto& d : row.decisions)
            CHECK((d.chosen == "nano-4b" || d.chosen == "swift-8b"));
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("sft rows report the export accounting") {
    Dataset ds = small_fixture();
    auto out = temp_dir("harness_sft");

    ExperimentPlan plan;
    plan.scenario = scenario_preset("balance");
    plan.output_dir = out.string();
    MethodSpec m;
    m.kind = "sft";
    m.name = "corpus";
    m.sft.k = 4;
    plan.methods = {m};

    BackendRegistry reg;
    auto table = run_plan(plan, ds, reg);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].status == "exported");
    CHECK(table.rows[0].notes.find("examples=") != std::string::npos);
    CHECK(std::filesystem::exists(out / "sft_corpus.jsonl"));
    CHECK(std::filesystem::exists(out / "sft_corpus_manifest.json"));

    auto manifest = json::parse(slurp((out / "sft_corpus_manifest.json").string()));
    auto corpus = slurp((out / "sft_corpus.jsonl").string());
    CHECK(manifest["content_hash"] == detail::fnv1a_hex(corpus));
    std::filesystem::remove_all(out);
}
