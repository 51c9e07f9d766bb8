#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/gateway.hpp"

namespace routefuse {

struct JudgeRequest {
    std::string query;
    std::string ground_truth;
    std::string response;
};

enum class ParseStatus { Ok, Clamped, Retried, Failed };

inline std::string to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Ok: return "ok";
        case ParseStatus::Clamped: return "clamped";
        case ParseStatus::Retried: return "retried";
        case ParseStatus::Failed: return "failed";
    }
    detail::fail("invalid ParseStatus value");
}

struct JudgeResult {
    double score = 0.0;
    std::string raw_reply;
    ParseStatus parse_status = ParseStatus::Failed;
};

/// Scoring-rubric prompt. The three payloads are spliced between fixed
/// segments; nothing in them is ever interpreted as template syntax.
inline std::string render_judge_prompt(const JudgeRequest& r) {
    std::string out;
    out +=
        "You are an expert judge evaluating the quality of an AI model's response. "
        "Please score the response based on the following criteria:\n"
        "\n"
        "1. Correctness (0–1): Is the answer correct according to the ground truth?\n"
        "2. Thought Process (0–1): Does the response show clear reasoning and explanation?\n"
        "3. Training Data Quality (0–1): Is the response well-structured and suitable for "
        "supervised fine-tuning?\n"
        "\n"
        "Query: ";
    out += r.query;
    out += "\n\nGround Truth: ";
    out += r.ground_truth;
    out += "\n\nResponse: ";
    out += r.response;
    out +=
        "\n"
        "\n"
        "Please provide a single score from 0 to 1, where:\n"
        "- 0: Incorrect answer\n"
        "- 0.3: Correct answer but minimal thought process\n"
        "- 0.6: Correct answer with some thought process\n"
        "- 0.8: Correct answer with good thought process\n"
        "- 1.0: Correct answer with excellent thought process and well-suited for training\n"
        "\n"
        "Return the score in the following format:\n"
        "\n"
        "<answer>SCORE</answer>";
    return out;
}

/// Extracts the first <answer>...</answer> span and parses it as a real.
/// Out-of-range values clamp to [0,1]; anything unparseable is a Failed
/// status, never an exception, so batch pipelines keep moving.
inline JudgeResult parse_judge_reply(const std::string& raw) {
    JudgeResult res;
    res.raw_reply = raw;
    const std::string open = "<answer>", close = "</answer>";
    size_t start = raw.find(open);
    if (start == std::string::npos) return res;
    start += open.size();
    size_t end = raw.find(close, start);
    if (end == std::string::npos) return res;
    std::string span = raw.substr(start, end - start);

    const char* begin = span.c_str();
    char* parse_end = nullptr;
    double v = std::strtod(begin, &parse_end);
    if (parse_end == begin) return res;
    while (*parse_end == ' ' || *parse_end == '\t' || *parse_end == '\n' || *parse_end == '\r')
        ++parse_end;
    if (*parse_end != '\0') return res;
    if (!std::isfinite(v)) return res;

    if (v < 0.0 || v > 1.0) {
        res.score = std::clamp(v, 0.0, 1.0);
        res.parse_status = ParseStatus::Clamped;
    } else {
        res.score = v;
        res.parse_status = ParseStatus::Ok;
    }
    return res;
}

inline const std::string& judge_system_prompt() {
    static const std::string prompt =
        "You are an expert judge. Follow the scoring instructions exactly.";
    return prompt;
}

/// Scores every request concurrently (bounded by the backend's
/// max_in_flight). Failed parses and transport errors retry up to
/// `retries` times; a success after at least one retry reports Retried.
/// Results always align one-to-one with requests.
inline std::vector<JudgeResult> score_batch(const std::vector<JudgeRequest>& requests,
                                            Backend& backend, int retries = 2) {
    if (retries < 0) detail::fail("score_batch: negative retries");
    std::vector<JudgeResult> results(requests.size());
    detail::parallel_for(requests.size(), backend.config().max_in_flight, [&](size_t i) {
        const std::string prompt = render_judge_prompt(requests[i]);
        JudgeResult last;
        for (int attempt = 0; attempt <= retries; ++attempt) {
            try {
                last = parse_judge_reply(backend.complete(judge_system_prompt(), prompt).text);
            } catch (const std::exception& e) {
                last = JudgeResult{};
                last.raw_reply = std::string("transport error: ") + e.what();
            }
            if (last.parse_status != ParseStatus::Failed) {
                if (attempt > 0) last.parse_status = ParseStatus::Retried;
                break;
            }
        }
        results[i] = std::move(last);
    });
    return results;
}

// ---------------------------------------------------------------------------
// Judge-score patch files
// ---------------------------------------------------------------------------

struct JudgePatchEntry {
    std::string query_id;
    std::string llm_name;
    Pattern pattern = Pattern::Direct;
    double score = 0.0;
};

inline void save_judge_patch(const std::string& path,
                             const std::vector<JudgePatchEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        ordered_json j;
        j["query_id"] = e.query_id;
        j["llm_name"] = e.llm_name;
        j["pattern"] = to_string(e.pattern);
        j["score"] = e.score;
        out += j.dump() + "\n";
    }
    detail::write_file(path, out);
}

inline std::vector<JudgePatchEntry> load_judge_patch(const std::string& path) {
    std::vector<JudgePatchEntry> entries;
    for (const auto& line : detail::split_lines(detail::read_file(path))) {
        if (line.empty()) continue;
        json j = json::parse(line);
        JudgePatchEntry e;
        e.query_id = j.at("query_id").get<std::string>();
        e.llm_name = j.at("llm_name").get<std::string>();
        e.pattern = pattern_from_string(j.at("pattern").get<std::string>());
        e.score = j.at("score").get<double>();
        if (e.score < 0.0 || e.score > 1.0)
            detail::fail("judge patch: score outside [0,1] for " + e.query_id);
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Writes patch scores into matching records. Every entry must resolve.
inline int64_t apply_judge_patch(Dataset& ds, const std::vector<JudgePatchEntry>& entries) {
    std::map<std::tuple<std::string, std::string, Pattern>, RoutingRecord*> index;
    for (auto& r : ds.records) index[{r.query_id, r.llm_name, r.pattern}] = &r;
    int64_t applied = 0;
    for (const auto& e : entries) {
        auto it = index.find({e.query_id, e.llm_name, e.pattern});
        if (it == index.end())
            detail::fail("judge patch: no record for (" + e.query_id + ", " + e.llm_name + ", " +
                         to_string(e.pattern) + ")");
        it->second->judge_score = e.score;
        ++applied;
    }
    return applied;
}

}  // namespace routefuse
