#pragma once

// Shared helpers for hand-built test data. Tests construct small datasets
// with explicit values so expected results stay hand-checkable.

#include <string>
#include <vector>

#include "routefuse/corpus.hpp"
#include "routefuse/pricing.hpp"

namespace testsupport {

struct RecordSpec {
    std::string query_id;
    std::string llm_name;
    routefuse::Pattern pattern = routefuse::Pattern::Direct;
    double performance = 0.0;
    double cost = 0.0;
    double judge = -1.0;  // < 0 means absent
    std::string task_name = "gsm8k";
    std::string response;
    std::vector<double> query_embedding;
};

inline routefuse::RoutingRecord make_record(const RecordSpec& s) {
    routefuse::RoutingRecord r;
    r.task_name = s.task_name;
    r.task_description = "test task";
    r.query_id = s.query_id;
    r.query = "query text for " + s.query_id;
    r.ground_truth = "42";
    r.metric = "exact_match_accuracy";
    r.llm_name = s.llm_name;
    r.pattern = s.pattern;
    r.input_tokens = 10;
    r.output_tokens = 10;
    r.performance = s.performance;
    r.cost = s.cost;
    r.response = s.response.empty() ? "response from " + s.llm_name : s.response;
    if (s.judge >= 0.0) r.judge_score = s.judge;
    r.query_embedding = s.query_embedding;
    return r;
}

inline routefuse::Dataset make_dataset(const std::vector<RecordSpec>& specs) {
    routefuse::Dataset ds;
    for (const auto& s : specs) ds.records.push_back(make_record(s));
    for (const auto& r : ds.records) {
        if (!r.query_embedding.empty()) {
            ds.meta.embedding_dim = static_cast<int>(r.query_embedding.size());
            break;
        }
    }
    return ds;
}

inline routefuse::QueryGroup make_group(routefuse::Dataset& ds) {
    auto groups = routefuse::group_by_query(ds);
    if (groups.size() != 1) routefuse::detail::fail("make_group: expected one query");
    return groups[0];
}

}  // namespace testsupport
