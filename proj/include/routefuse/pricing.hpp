#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "routefuse/common.hpp"

namespace routefuse {

enum class Scale { Small, Medium, Large };

inline std::string to_string(Scale s) {
    switch (s) {
        case Scale::Small: return "small";
        case Scale::Medium: return "medium";
        case Scale::Large: return "large";
    }
    detail::fail("invalid Scale value");
}

inline Scale scale_from_string(const std::string& s) {
    if (s == "small") return Scale::Small;
    if (s == "medium") return Scale::Medium;
    if (s == "large") return Scale::Large;
    detail::fail("unknown scale: " + s);
}

/// Static description of one candidate model: identity, size class, and
/// per-million-token prices in dollars.
struct LlmProfile {
    std::string name;
    Scale scale = Scale::Small;
    double parameter_count_b = 0.0;  // billions of parameters
    double input_price = 0.0;        // $ per 1M input tokens
    double output_price = 0.0;       // $ per 1M output tokens
    std::string description;
};

/// Dollar cost of a call: prices are per million tokens.
inline double estimate_cost(int64_t input_tokens, int64_t output_tokens, const LlmProfile& p) {
    if (input_tokens < 0 || output_tokens < 0) detail::fail("estimate_cost: negative token count");
    return static_cast<double>(input_tokens) / 1e6 * p.input_price +
           static_cast<double>(output_tokens) / 1e6 * p.output_price;
}

using TokenCounter = std::function<int64_t(std::string_view)>;

/// Registry of named token counters. The default "bytes4" counter
/// approximates one token per four UTF-8 bytes, rounded up.
class TokenCounterRegistry {
public:
    TokenCounterRegistry() {
        counters_["bytes4"] = [](std::string_view text) -> int64_t {
            return static_cast<int64_t>((text.size() + 3) / 4);
        };
    }

    void register_counter(const std::string& name, TokenCounter fn) {
        counters_[name] = std::move(fn);
    }

    const TokenCounter& get(const std::string& name) const {
        auto it = counters_.find(name);
        if (it == counters_.end()) detail::fail("unknown token counter: " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return counters_.count(name) != 0; }

private:
    std::map<std::string, TokenCounter> counters_;
};

inline TokenCounterRegistry& token_counters() {
    static TokenCounterRegistry registry;
    return registry;
}

inline int64_t count_tokens(std::string_view text, const std::string& counter = "bytes4") {
    return token_counters().get(counter)(text);
}

inline ordered_json profile_to_json(const LlmProfile& p) {
    ordered_json j;
    j["name"] = p.name;
    j["scale"] = to_string(p.scale);
    j["parameter_count_b"] = p.parameter_count_b;
    j["input_price"] = p.input_price;
    j["output_price"] = p.output_price;
    j["description"] = p.description;
    return j;
}

inline LlmProfile profile_from_json(const json& j) {
    LlmProfile p;
    p.name = j.at("name").get<std::string>();
    p.scale = scale_from_string(j.at("scale").get<std::string>());
    p.parameter_count_b = j.at("parameter_count_b").get<double>();
    p.input_price = j.at("input_price").get<double>();
    p.output_price = j.at("output_price").get<double>();
    p.description = j.value("description", std::string{});
    if (p.input_price < 0 || p.output_price < 0 || p.parameter_count_b < 0)
        detail::fail("profile " + p.name + ": negative price or parameter count");
    return p;
}

/// Loads one profile per JSONL line; names must be unique.
inline std::vector<LlmProfile> load_profiles(const std::string& path) {
    std::vector<LlmProfile> profiles;
    std::map<std::string, bool> seen;
    for (const auto& line : detail::split_lines(detail::read_file(path))) {
        if (line.empty()) continue;
        profiles.push_back(profile_from_json(json::parse(line)));
        if (seen.count(profiles.back().name))
            detail::fail("duplicate profile name: " + profiles.back().name);
        seen[profiles.back().name] = true;
    }
    return profiles;
}

inline void save_profiles(const std::string& path, const std::vector<LlmProfile>& profiles) {
    std::string out;
    for (const auto& p : profiles) {
        out += profile_to_json(p).dump();
        out += '\n';
    }
    detail::write_file(path, out);
}

inline const LlmProfile& find_profile(const std::vector<LlmProfile>& profiles,
                                      const std::string& name) {
    for (const auto& p : profiles)
        if (p.name == name) return p;
    detail::fail("no profile named: " + name);
}

}  // namespace routefuse
