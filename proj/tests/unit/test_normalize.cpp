#include <doctest.h>

#include <map>
#include <random>

#include "../oracles.hpp"
#include "helpers.hpp"
#include "offlang/error.hpp"
#include "offlang/normalize.hpp"

using namespace offlang::normalize;
using offlang::Error;

namespace {

std::string norm(std::string_view t, const NormalizationConfig& c) { return offlang::normalize::normalize(t, c); }

}  // namespace

namespace {

NormalizationConfig example_config() {
    NormalizationConfig c;
    c.emoji.add("\xF0\x9F\x98\x82", "face with tears of joy");
    c.emoji.add("\xF0\x9F\x91\x8D", "thumbs up");
    c.slang.add("brb", "be right back");
    c.slang.add("u", "you");
    c.lexicon.add("now", 1000);
    c.lexicon.add("playing", 500);
    return c;
}

NormalizationConfig bundled() {
    return NormalizationConfig::load(source_path("data/emoji.tsv"), source_path("data/slang.tsv"),
                                     source_path("data/lexicon.tsv"));
}

bool text_join_eq(const std::vector<std::string>& words, const std::string& joined) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    return s == joined;
}

}  // namespace

TEST_SUITE("normalize") {

TEST_CASE("placeholder substitution") {
    NormalizationConfig c;
    CHECK(norm("@USER check URL", c) == "<user> check http");
    CHECK(norm("see https://t.co/abc now", c) == "see http now");
    CHECK(norm("@user@USER", c) == "<user> <user>");
}

TEST_CASE("standalone numbers are dropped") {
    NormalizationConfig c;
    CHECK(norm("meet at 10 pm", c) == "meet at pm");
    CHECK(norm("2pac 2020 live", c) == "2pac live");
}

TEST_CASE("all steps compose in order") {
    const auto c = example_config();
    CHECK(norm("@USER \xF0\x9F\x98\x82 #nowplaying brb", c) ==
          "<user> face with tears of joy now playing be right back");
}

TEST_CASE("disabled steps are skipped") {
    auto c = example_config();
    c.steps = {Step::whitespace};
    CHECK(norm("  Brb   10 ", c) == "brb 10");
    c.steps = {Step::user_url, Step::user_url};
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("map_emoji") {
    const auto c = example_config();
    CHECK(map_emoji("ok \xF0\x9F\x91\x8D", c.emoji) == "ok thumbs up");
    CHECK(map_emoji("plain text", c.emoji) == "plain text");
    CHECK(map_emoji("x \xF0\x9F\x9C\x9A y", c.emoji) == "x y");  // U+1F71A, unmapped
    CHECK(map_emoji("a\xF0\x9F\x91\x8D\xF0\x9F\x98\x82" "b", c.emoji) == "a thumbs up face with tears of joy b");
}

TEST_CASE("map_emoji is the identity on ascii") {
    const auto c = bundled();
    std::mt19937_64 rng(8);
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const auto len = rng() % 30;
        for (std::size_t k = 0; k < len; ++k) s += static_cast<char>(rng() % 128);
        CHECK(map_emoji(s, c.emoji) == s);
    }
}

TEST_CASE("segmentation examples") {
    Lexicon lex;
    lex.add("now", 1000);
    lex.add("playing", 500);
    lex.add("nowp", 1);
    lex.add("laying", 400);
    CHECK(segment_hashtag("nowplaying", lex) == "now playing");

    Lexicon single;
    single.add("a", 3);
    single.add("b", 1);
    CHECK(segment_hashtag("a", single) == "a");

    Lexicon unrelated;
    unrelated.add("hello", 10);
    CHECK(segment_hashtag("xqzt", unrelated) == "xqzt");
}

TEST_CASE("word score floor") {
    Lexicon lex;
    lex.add("now", 30);
    lex.add("then", 70);
    const std::map<std::string, double> counts{{"now", 30}, {"then", 70}};
    for (const std::string w : {"now", "then", "x", "nowt", "abcdefgh"})
        CHECK(word_log_prob(w, lex) == doctest::Approx(oracle::unigram_log_prob(counts, w)).epsilon(1e-12));
}

TEST_CASE("segmentation agrees with enumeration on random tags") {
    const std::map<std::string, double> counts{{"go", 40}, {"team", 25}, {"tea", 12}, {"m", 2}, {"ate", 9}, {"a", 30}};
    Lexicon lex;
    for (const auto& [w, c] : counts) lex.add(w, static_cast<std::uint64_t>(c));
    std::mt19937_64 rng(31);
    const std::vector<std::string> parts{"go", "team", "tea", "m", "ate", "a", "q", "x"};
    for (int i = 0; i < 300; ++i) {
        std::string tag;
        while (tag.size() < 4 + rng() % 10) tag += parts[rng() % parts.size()];
        if (tag.size() > 14) tag.resize(14);
        const auto got = segment_hashtag(tag, lex);
        const auto best = oracle::all_best_splits(tag, counts);
        bool matched = false;
        for (const auto& b : best) matched = matched || text_join_eq(b.words, got);
        CHECK_MESSAGE(matched, tag << " -> " << got);
    }
}

TEST_CASE("output alphabet") {
    const auto c = bundled();
    std::mt19937_64 rng(17);
    const std::vector<std::string> pieces{"@USER", "@user", "URL", "#", "#Tag", "#gohome", "\t", "  ", "12", "lol",
                                          "\xF0\x9F\x98\x82", "https://x.y/z", "www.a.b", "Brb", "word", "\n", "9a"};
    for (int i = 0; i < 3000; ++i) {
        std::string s;
        const auto n = rng() % 10;
        for (std::size_t k = 0; k < n; ++k) s += pieces[rng() % pieces.size()] + (rng() % 2 ? " " : "");
        const auto out = norm(s, c);
        CHECK(out.find('#') == std::string::npos);
        CHECK(out.find("@USER") == std::string::npos);
        CHECK(out.find('\t') == std::string::npos);
        CHECK(out.find("  ") == std::string::npos);
        CHECK(norm(out, c) == out);
    }
}

TEST_CASE("bundled slang table is closed") {
    CHECK_NOTHROW(bundled().slang.validate_closure());
    SlangMap bad;
    bad.add("u", "you");
    bad.add("ya", "u all");
    CHECK_THROWS_AS(bad.validate_closure(), Error);
}

TEST_CASE("lexicon rejects zero counts") {
    Lexicon lex;
    CHECK_THROWS_AS(lex.add("x", 0), Error);
    lex.add("Word", 4);
    CHECK(lex.count("word") == 4);
    CHECK(lex.total() == 4);
}

}  // TEST_SUITE
