#include <doctest.h>

#include <random>

#include "offlang/text.hpp"

using namespace offlang;

TEST_SUITE("text") {

TEST_CASE("trim and case helpers") {
    CHECK(text::trim("  a b \t") == "a b");
    CHECK(text::trim("   ").empty());
    CHECK(text::ascii_lower("MiXeD Ü") == "mixed Ü");
    CHECK(text::iequals("NoT", "not"));
    CHECK_FALSE(text::iequals("not", "note"));
}

TEST_CASE("split keeps empty fields") {
    const auto parts = text::split("a\t\tb\t", '\t');
    REQUIRE(parts.size() == 4);
    CHECK(parts[1].empty());
    CHECK(parts[2] == "b");
    CHECK(text::split_whitespace("  x  y\tz ") == std::vector<std::string>{"x", "y", "z"});
    CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
}

TEST_CASE("utf-8 decoding") {
    const std::string s = "a\xC3\xBC\xE2\x82\xAC\xF0\x9F\x98\x82";  // a ü € 😂
    auto cp = text::decode_utf8(s, 0);
    CHECK(cp.value == U'a');
    cp = text::decode_utf8(s, 1);
    CHECK((cp.value == 0xFC && cp.length == 2));
    cp = text::decode_utf8(s, 3);
    CHECK((cp.value == 0x20AC && cp.length == 3));
    cp = text::decode_utf8(s, 6);
    CHECK((cp.value == 0x1F602 && cp.length == 4 && cp.valid));

    const auto bad = text::decode_utf8("\xFFz", 0);
    CHECK_FALSE(bad.valid);
    CHECK(bad.length == 1);
    const auto truncated = text::decode_utf8("\xE2\x82", 0);
    CHECK_FALSE(truncated.valid);
}

TEST_CASE("utf-8 encode inverts decode") {
    for (char32_t cp : {char32_t(0x41), char32_t(0x7FF), char32_t(0x800), char32_t(0xFFFD), char32_t(0x10000), char32_t(0x10FFFF)}) {
        const auto bytes = text::encode_utf8(cp);
        const auto back = text::decode_utf8(bytes, 0);
        CHECK(back.valid);
        CHECK(back.value == cp);
        CHECK(back.length == bytes.size());
    }
}

TEST_CASE("tsv escaping round-trips arbitrary bytes") {
    CHECK(text::escape_tsv("a\tb\nc\\") == "a\\tb\\nc\\\\");
    std::mt19937_64 rng(4);
    const std::string alphabet = "ab\\\t\r\n tn";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const auto len = rng() % 12;
        for (std::size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
        const auto esc = text::escape_tsv(s);
        CHECK(esc.find('\t') == std::string::npos);
        CHECK(esc.find('\n') == std::string::npos);
        CHECK(text::unescape_tsv(esc) == s);
    }
}

}  // TEST_SUITE
