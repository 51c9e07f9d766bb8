#include <catch2/catch_amalgamated.hpp>

#include "routefuse/pricing.hpp"

using namespace routefuse;
using Catch::Matchers::WithinAbs;

TEST_CASE("estimate_cost is linear in tokens at per-million prices") {
    LlmProfile p{"m", Scale::Large, 671.0, 0.55, 2.19, ""};
    // 1M input at $0.55/M plus 1M output at $2.19/M.
    CHECK_THAT(estimate_cost(1'000'000, 1'000'000, p), WithinAbs(2.74, 1e-12));
    // 500 in, 2000 out: 500/1e6*0.55 + 2000/1e6*2.19 = 0.000275 + 0.00438.
    CHECK_THAT(estimate_cost(500, 2000, p), WithinAbs(0.004655, 1e-12));
    CHECK(estimate_cost(0, 0, p) == 0.0);
    CHECK_THROWS_AS(estimate_cost(-1, 0, p), Error);
    CHECK_THROWS_AS(estimate_cost(0, -5, p), Error);
}

TEST_CASE("bytes4 counter rounds bytes up to blocks of four") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("a") == 1);
    CHECK(count_tokens("abcd") == 1);
    CHECK(count_tokens("abcde") == 2);
    CHECK(count_tokens(std::string(4096, 'x')) == 1024);
    // Multi-byte characters are counted by encoded size, not code points.
    CHECK(count_tokens("\xE2\x82\xAC") == 1);  // 3 bytes
}

TEST_CASE("token counter registry resolves by name") {
    CHECK(token_counters().has("bytes4"));
    CHECK_THROWS_AS(count_tokens("abc", "absent"), Error);
    token_counters().register_counter("words", [](std::string_view t) -> int64_t {
        int64_t n = 0;
        bool in_word = false;
        for (char c : t) {
            bool space = c == ' ';
            if (!space && !in_word) ++n;
            in_word = !space;
        }
        return n;
    });
    CHECK(count_tokens("one two  three", "words") == 3);
}

TEST_CASE("profile json round-trips and rejects bad values") {
    LlmProfile p{"mix", Scale::Medium, 56.0, 0.6, 0.6, "moe"};
    LlmProfile back = profile_from_json(profile_to_json(p));
    CHECK(back.name == p.name);
    CHECK(back.scale == p.scale);
    CHECK(back.parameter_count_b == p.parameter_count_b);
    CHECK(back.input_price == p.input_price);
    CHECK(back.output_price == p.output_price);

    json bad = profile_to_json(p);
    bad["input_price"] = -0.1;
    CHECK_THROWS_AS(profile_from_json(bad), Error);
    bad = profile_to_json(p);
    bad["parameter_count_b"] = -1.0;
    CHECK_THROWS_AS(profile_from_json(bad), Error);
    bad = profile_to_json(p);
    bad["scale"] = "huge";
    CHECK_THROWS_AS(profile_from_json(bad), Error);
}

TEST_CASE("profile files reject duplicate names") {
    std::string path = "/tmp/routefuse_test_profiles.jsonl";
    std::vector<LlmProfile> profiles = {
        {"a", Scale::Small, 7.0, 0.2, 0.2, ""},
        {"b", Scale::Large, 122.0, 1.8, 1.8, ""},
    };
    save_profiles(path, profiles);
    auto loaded = load_profiles(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].name == "a");
    CHECK(find_profile(loaded, "b").scale == Scale::Large);
    CHECK_THROWS_AS(find_profile(loaded, "c"), Error);

    profiles.push_back({"a", Scale::Medium, 34.0, 0.8, 0.8, ""});
    save_profiles(path, profiles);
    CHECK_THROWS_AS(load_profiles(path), Error);
}
