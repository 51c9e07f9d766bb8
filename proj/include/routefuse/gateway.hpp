#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "routefuse/common.hpp"
#include "routefuse/corpus.hpp"
#include "routefuse/pricing.hpp"

namespace routefuse {

// ---------------------------------------------------------------------------
// Response metrics
// ---------------------------------------------------------------------------

/// Shared normalization: ASCII casefold, trim, collapse whitespace runs,
/// strip trailing sentence punctuation.
inline std::string normalize_answer(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    auto trailing = [](char c) {
        return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ' ';
    };
    while (!out.empty() && trailing(out.back())) out.pop_back();
    return out;
}

/// First standalone uppercase option letter (A..E), scanned before any
/// casefolding so the article "a" cannot match.
inline std::optional<char> extract_option_letter(std::string_view s) {
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c < 'A' || c > 'E') continue;
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
        bool right_ok = i + 1 == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 1]));
        if (left_ok && right_ok) return c;
    }
    return std::nullopt;
}

namespace detail {

inline double exact_match_accuracy(const std::string& response, const std::string& truth) {
    return normalize_answer(response) == normalize_answer(truth) ? 1.0 : 0.0;
}

inline double multiple_choice_accuracy(const std::string& response, const std::string& truth) {
    auto want = extract_option_letter(truth);
    if (!want) return exact_match_accuracy(response, truth);
    auto got = extract_option_letter(response);
    return got && *got == *want ? 1.0 : 0.0;
}

// "Contains exact match": the normalized ground truth appears inside the
// normalized response.
inline double cem(const std::string& response, const std::string& truth) {
    return normalize_answer(response).find(normalize_answer(truth)) != std::string::npos ? 1.0
                                                                                         : 0.0;
}

inline std::map<std::string, int> token_counts(const std::string& normalized) {
    std::map<std::string, int> counts;
    size_t start = 0;
    while (start < normalized.size()) {
        size_t end = normalized.find(' ', start);
        if (end == std::string::npos) end = normalized.size();
        if (end > start) ++counts[normalized.substr(start, end - start)];
        start = end + 1;
    }
    return counts;
}

inline double token_f1(const std::string& response, const std::string& truth) {
    auto rc = token_counts(normalize_answer(response));
    auto tc = token_counts(normalize_answer(truth));
    int64_t r_total = 0, t_total = 0, common = 0;
    for (const auto& [tok, n] : rc) r_total += n;
    for (const auto& [tok, n] : tc) t_total += n;
    if (r_total == 0 && t_total == 0) return 1.0;
    if (r_total == 0 || t_total == 0) return 0.0;
    for (const auto& [tok, n] : rc) {
        auto it = tc.find(tok);
        if (it != tc.end()) common += std::min(n, it->second);
    }
    if (common == 0) return 0.0;
    double p = static_cast<double>(common) / static_cast<double>(r_total);
    double r = static_cast<double>(common) / static_cast<double>(t_total);
    return 2.0 * p * r / (p + r);
}

// The hook reads {"response","ground_truth"} JSON on stdin and prints a
// score in [0,1] on stdout.
inline double external_hook(const std::string& cmd, const std::string& response,
                            const std::string& truth) {
    if (cmd.empty()) fail("external_hook metric requires a configured hook command");
    char tmpl[] = "/tmp/routefuse_hook_XXXXXX";
    int fd = mkstemp(tmpl);
    if (fd < 0) fail("external_hook: cannot create temp file");
    ordered_json body;
    body["response"] = response;
    body["ground_truth"] = truth;
    std::string payload = body.dump();
    FILE* tf = fdopen(fd, "w");
    std::fwrite(payload.data(), 1, payload.size(), tf);
    std::fclose(tf);

    std::string full = cmd + " < " + tmpl;
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) {
        std::remove(tmpl);
        fail("external_hook: cannot run: " + cmd);
    }
    char buf[256];
    std::string out;
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    int status = pclose(pipe);
    std::remove(tmpl);
    if (status != 0) fail("external_hook: command exited nonzero: " + cmd);
    try {
        double v = std::stod(out);
        if (v < 0.0 || v > 1.0) fail("external_hook: score outside [0,1]: " + out);
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail("external_hook: unparseable score: " + out);
    }
}

}  // namespace detail

/// Scores a response against ground truth under the task's metric.
inline double evaluate_response(const std::string& metric, const std::string& response,
                                const std::string& ground_truth,
                                const std::string& external_hook_cmd = "") {
    if (metric == "exact_match_accuracy") return detail::exact_match_accuracy(response, ground_truth);
    if (metric == "multiple_choice_accuracy")
        return detail::multiple_choice_accuracy(response, ground_truth);
    if (metric == "cem") return detail::cem(response, ground_truth);
    if (metric == "token_f1") return detail::token_f1(response, ground_truth);
    if (metric == "external_hook")
        return detail::external_hook(external_hook_cmd, response, ground_truth);
    detail::fail("unknown metric: " + metric);
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct BackendConfig {
    std::string name;
    std::string base_url;
    std::string model_id;
    std::string api_key_env;  // environment variable holding the key
    int max_in_flight = 4;
    double timeout_seconds = 60.0;
    int max_output_tokens = 1024;
    int max_retries = 3;
    double backoff_seconds = 0.25;  // doubles per attempt
};

struct CompletionResult {
    std::string text;
    int64_t input_tokens = 0;
    int64_t output_tokens = 0;
    double latency_seconds = 0.0;
    std::string finish_reason;
    std::string token_source;  // "provider" when usage was reported, else "counter"
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResult complete(const std::string& system_prompt,
                                      const std::string& user_prompt) = 0;
    virtual const BackendConfig& config() const = 0;
};

/// In-process scripted backend for offline runs and tests. Tracks the
/// peak number of concurrent calls so concurrency bounds are assertable.
class FakeBackend : public Backend {
public:
    using Script = std::function<std::string(const std::string& system_prompt,
                                             const std::string& user_prompt)>;

    FakeBackend(BackendConfig cfg, Script script)
        : cfg_(std::move(cfg)), script_(std::move(script)) {}

    CompletionResult complete(const std::string& system_prompt,
                              const std::string& user_prompt) override {
        int64_t call = calls.fetch_add(1);
        int now = in_flight.fetch_add(1) + 1;
        int seen = max_in_flight_seen.load();
        while (now > seen && !max_in_flight_seen.compare_exchange_weak(seen, now)) {
        }
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        struct Guard {
            std::atomic<int>& n;
            ~Guard() { n.fetch_sub(1); }
        } guard{in_flight};
        if (fail_call && fail_call(call)) detail::fail("fake backend: injected transport failure");
        CompletionResult res;
        res.text = script_(system_prompt, user_prompt);
        res.input_tokens = count_tokens(system_prompt) + count_tokens(user_prompt);
        res.output_tokens = count_tokens(res.text);
        res.finish_reason = "stop";
        res.token_source = "counter";
        return res;
    }

    const BackendConfig& config() const override { return cfg_; }

    std::atomic<int64_t> calls{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight_seen{0};
    std::chrono::milliseconds delay{0};
    std::function<bool(int64_t call_index)> fail_call;

private:
    BackendConfig cfg_;
    Script script_;
};

/// OpenAI-compatible chat-completion client. Transient transport errors
/// (connect failures, 429, 5xx) retry with doubling backoff.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.max_in_flight < 1) detail::fail("backend " + cfg_.name + ": max_in_flight < 1");
        split_url(cfg_.base_url, origin_, path_prefix_);
    }

    CompletionResult complete(const std::string& system_prompt,
                              const std::string& user_prompt) override {
        ordered_json body;
        body["model"] = cfg_.model_id;
        body["messages"] = ordered_json::array({{{"role", "system"}, {"content", system_prompt}},
                                                {{"role", "user"}, {"content", user_prompt}}});
        body["max_tokens"] = cfg_.max_output_tokens;
        const std::string payload = body.dump();

        httplib::Headers headers;
        if (!cfg_.api_key_env.empty()) {
            const char* key = std::getenv(cfg_.api_key_env.c_str());
            if (!key || !*key)
                detail::fail("backend " + cfg_.name + ": env var " + cfg_.api_key_env + " not set");
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                auto wait = std::chrono::duration<double>(cfg_.backoff_seconds *
                                                          std::pow(2.0, attempt - 1));
                std::this_thread::sleep_for(
                    std::chrono::duration_cast<std::chrono::milliseconds>(wait));
            }
            auto start = std::chrono::steady_clock::now();
            httplib::Client client(origin_);
            client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
            auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                                   "application/json");
            double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                 .count();
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                detail::fail("backend " + cfg_.name + ": status " + std::to_string(res->status) +
                             ": " + res->body);
            return parse_reply(res->body, system_prompt, user_prompt, latency);
        }
        detail::fail("backend " + cfg_.name + ": gave up after " +
                     std::to_string(cfg_.max_retries + 1) + " attempts (" + last_error + ")");
    }

    const BackendConfig& config() const override { return cfg_; }

private:
    static void split_url(const std::string& url, std::string& origin, std::string& path) {
        size_t scheme = url.find("://");
        if (scheme == std::string::npos) detail::fail("backend url missing scheme: " + url);
        size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) {
            origin = url;
            path.clear();
        } else {
            origin = url.substr(0, slash);
            path = url.substr(slash);
            while (!path.empty() && path.back() == '/') path.pop_back();
        }
    }

    CompletionResult parse_reply(const std::string& body, const std::string& system_prompt,
                                 const std::string& user_prompt, double latency) const {
        json j;
        try {
            j = json::parse(body);
        } catch (const std::exception&) {
            detail::fail("backend " + cfg_.name + ": malformed JSON reply");
        }
        if (!j.contains("choices") || j["choices"].empty())
            detail::fail("backend " + cfg_.name + ": reply has no choices");
        const auto& choice = j["choices"][0];
        CompletionResult res;
        res.text = choice.at("message").at("content").get<std::string>();
        res.finish_reason = choice.value("finish_reason", std::string{});
        res.latency_seconds = latency;
        if (j.contains("usage") && j["usage"].contains("prompt_tokens")) {
            res.input_tokens = j["usage"]["prompt_tokens"].get<int64_t>();
            res.output_tokens = j["usage"].value("completion_tokens", int64_t{0});
            res.token_source = "provider";
        } else {
            res.input_tokens = count_tokens(system_prompt) + count_tokens(user_prompt);
            res.output_tokens = count_tokens(res.text);
            res.token_source = "counter";
        }
        return res;
    }

    BackendConfig cfg_;
    std::string origin_;
    std::string path_prefix_;
};

class BackendRegistry {
public:
    void add(std::shared_ptr<Backend> backend) {
        const std::string& name = backend->config().name;
        if (backends_.count(name)) detail::fail("backend already registered: " + name);
        backends_[name] = std::move(backend);
    }

    Backend& get(const std::string& name) const {
        auto it = backends_.find(name);
        if (it == backends_.end()) detail::fail("no backend registered as: " + name);
        return *it->second;
    }

    bool has(const std::string& name) const { return backends_.count(name) != 0; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, b] : backends_) out.push_back(name);
        return out;
    }

private:
    std::map<std::string, std::shared_ptr<Backend>> backends_;
};

inline CompletionResult complete(const BackendRegistry& registry, const std::string& backend,
                                 const std::string& system_prompt,
                                 const std::string& user_prompt) {
    return registry.get(backend).complete(system_prompt, user_prompt);
}

// ---------------------------------------------------------------------------
// Prompt patterns
// ---------------------------------------------------------------------------

inline constexpr int kPatternPromptsVersion = 1;

/// Authored system prompts selecting the response pattern.
inline const std::string& pattern_system_prompt(Pattern p) {
    static const std::string direct =
        "You are a helpful assistant. Answer the question directly and concisely, "
        "giving only the final answer.";
    static const std::string think =
        "You are a helpful assistant. Think through the problem step by step, show "
        "your reasoning, and then clearly state the final answer.";
    return p == Pattern::Direct ? direct : think;
}

// ---------------------------------------------------------------------------
// Bounded-concurrency map
// ---------------------------------------------------------------------------

namespace detail {

/// Runs fn(i) for i in [0, n) on at most max_in_flight worker threads.
/// fn must handle its own per-item failures; an escaped exception aborts
/// the whole map and is rethrown on the caller thread.
template <typename Fn>
void parallel_for(size_t n, int max_in_flight, Fn&& fn) {
    if (n == 0) return;
    if (max_in_flight < 1) fail("parallel_for: max_in_flight < 1");
    size_t workers = std::min(static_cast<size_t>(max_in_flight), n);
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex err_mutex;
    std::string first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard lock(err_mutex);
                    if (first_error.empty()) first_error = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (!first_error.empty()) fail(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Collector
// ---------------------------------------------------------------------------

/// A query to collect responses for; embeddings ride along when known.
struct QuerySpec {
    std::string task_name;
    std::string task_description;
    std::string query_id;
    std::string query;
    std::string ground_truth;
    std::string metric;
    std::vector<double> query_embedding;
    std::vector<double> task_embedding;
};

struct CollectOptions {
    std::vector<Pattern> patterns{Pattern::Direct, Pattern::Think};
    std::string token_counter = "bytes4";
    int checkpoint_every = 32;
    std::string external_hook_cmd;
};

struct CollectStats {
    int64_t requested = 0;
    int64_t already_present = 0;
    int64_t collected = 0;
    int64_t failed = 0;
    std::vector<std::string> failures;  // "query_id/llm/pattern: reason"
};

/// Regenerates routing records by prompting each backend with each pattern.
/// Resumable: existing (query_id, llm, pattern) keys in the output file are
/// never re-requested. Per-record failures are recorded and skipped.
inline CollectStats collect(const BackendRegistry& registry,
                            const std::vector<LlmProfile>& profiles,
                            const std::vector<QuerySpec>& queries,
                            const std::vector<std::string>& backend_names,
                            const std::string& out_path, const CollectOptions& opts = {}) {
    Dataset ds;
    if (detail::file_exists(out_path)) {
        ds = load_jsonl_dataset(out_path);
    } else {
        ds.meta.token_counter = opts.token_counter;
        ds.meta.llm_profiles = profiles;
        for (const auto& q : queries)
            if (!q.query_embedding.empty()) {
                ds.meta.embedding_dim = static_cast<int>(q.query_embedding.size());
                break;
            }
    }
    std::set<std::tuple<std::string, std::string, Pattern>> done;
    for (const auto& r : ds.records) done.insert({r.query_id, r.llm_name, r.pattern});

    CollectStats stats;
    std::mutex mutex;  // guards ds.records and stats
    int64_t since_checkpoint = 0;

    auto save_sorted = [&ds, &out_path] {
        std::sort(ds.records.begin(), ds.records.end(),
                  [](const RoutingRecord& a, const RoutingRecord& b) {
                      return std::tie(a.query_id, a.llm_name, a.pattern) <
                             std::tie(b.query_id, b.llm_name, b.pattern);
                  });
        std::string out = detail::kMetaPrefix + detail::meta_to_json(ds.meta).dump() + "\n";
        for (const auto& r : ds.records) out += record_to_json(r).dump() + "\n";
        detail::write_file_atomic(out_path, out);
    };

    for (const auto& backend_name : backend_names) {
        Backend& backend = registry.get(backend_name);
        const LlmProfile& profile = find_profile(profiles, backend_name);

        struct WorkItem {
            const QuerySpec* q;
            Pattern pattern;
        };
        std::vector<WorkItem> work;
        for (const auto& q : queries)
            for (Pattern p : opts.patterns) {
                ++stats.requested;
                if (done.count({q.query_id, backend_name, p})) {
                    ++stats.already_present;
                    continue;
                }
                work.push_back({&q, p});
            }

        detail::parallel_for(work.size(), backend.config().max_in_flight, [&](size_t i) {
            const QuerySpec& q = *work[i].q;
            const Pattern pattern = work[i].pattern;
            RoutingRecord rec;
            try {
                CompletionResult res =
                    backend.complete(pattern_system_prompt(pattern), q.query);
                rec.task_name = q.task_name;
                rec.task_description = q.task_description;
                rec.query_id = q.query_id;
                rec.query = q.query;
                rec.ground_truth = q.ground_truth;
                rec.metric = q.metric;
                rec.llm_name = backend_name;
                rec.pattern = pattern;
                rec.input_tokens = res.input_tokens;
                rec.output_tokens = res.output_tokens;
                rec.performance =
                    evaluate_response(q.metric, res.text, q.ground_truth, opts.external_hook_cmd);
                rec.cost = estimate_cost(res.input_tokens, res.output_tokens, profile);
                rec.response = res.text;
                rec.query_embedding = q.query_embedding;
                rec.task_embedding = q.task_embedding;
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex);
                ++stats.failed;
                stats.failures.push_back(q.query_id + "/" + backend_name + "/" +
                                         to_string(pattern) + ": " + e.what());
                return;
            }
            std::lock_guard lock(mutex);
            ds.records.push_back(std::move(rec));
            ++stats.collected;
            if (++since_checkpoint >= opts.checkpoint_every) {
                since_checkpoint = 0;
                save_sorted();
            }
        });
    }

    save_sorted();
    return stats;
}

}  // namespace routefuse
