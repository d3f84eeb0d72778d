#include <doctest.h>

#include <map>
#include <set>

#include "offlang/error.hpp"
#include "offlang/synth.hpp"
#include "offlang/weaklabel.hpp"

using namespace offlang;
using namespace offlang::weaklabel;

namespace {

std::vector<ScoredExample> ten_rows() {
    // 4 above 0.8, 3 below 0.2, 3 in the excluded band (two on the boundaries).
    const double conf[] = {0.95, 0.81, 0.9, 0.85, 0.1, 0.05, 0.19, 0.5, 0.8, 0.2};
    std::vector<ScoredExample> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({"s" + std::to_string(i), "text " + std::to_string(i), conf[i]});
    return rows;
}

}  // namespace

TEST_SUITE("weaklabel") {

TEST_CASE("thresholds are strict") {
    const WeakLabelConfig c;
    CHECK(weak_label({"1", "t", 0.85}, c) == Label::off);
    CHECK(weak_label({"1", "t", 0.15}, c) == Label::not_off);
    CHECK_FALSE(weak_label({"1", "t", 0.5}, c).has_value());
    CHECK_FALSE(weak_label({"1", "t", 0.8}, c).has_value());
    CHECK_FALSE(weak_label({"1", "t", 0.2}, c).has_value());
}

TEST_CASE("config validation") {
    WeakLabelConfig c;
    c.lo_threshold = 0.8;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.hi_threshold = 1.1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.per_class_count = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("balanced sample from hand-counted rows") {
    WeakLabelConfig c;
    c.per_class_count = 3;
    c.seed = 7;
    const auto corpus = build_weak_corpus(ten_rows(), c);
    CHECK(corpus_stats(corpus) == CorpusStats{3, 3, 6});
    CHECK(corpus == build_weak_corpus(ten_rows(), c));
}

TEST_CASE("too few NOT rows") {
    WeakLabelConfig c;
    c.per_class_count = 5;
    auto rows = ten_rows();
    rows.push_back({"s10", "text 10", 0.99});  // five OFF now, still three NOT
    try {
        build_weak_corpus(rows, c);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::insufficient_class_samples);
        const std::string msg = e.what();
        CHECK(msg.find("(NOT, 3, 5)") != std::string::npos);
    }
}

TEST_CASE("sample members respect thresholds and are distinct") {
    const auto scored = synth::scored_corpus(4000, 21);
    std::map<std::string, double> conf;
    for (const auto& s : scored) conf[s.id] = s.confidence;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        WeakLabelConfig c;
        c.per_class_count = 500;
        c.seed = seed;
        const auto corpus = build_weak_corpus(scored, c);
        CHECK(corpus_stats(corpus) == CorpusStats{500, 500, 1000});
        std::set<std::string> seen;
        for (const auto& ex : corpus.examples()) {
            REQUIRE(conf.count(ex.id));
            CHECK(seen.insert(ex.id).second);
            if (ex.label == Label::off) CHECK(conf[ex.id] > 0.8);
            else CHECK(conf[ex.id] < 0.2);
        }
    }
}

TEST_CASE("different seeds draw different samples") {
    const auto scored = synth::scored_corpus(2000, 3);
    WeakLabelConfig a;
    a.per_class_count = 100;
    auto b = a;
    b.seed = 1;
    CHECK_FALSE(build_weak_corpus(scored, a) == build_weak_corpus(scored, b));
}

}  // TEST_SUITE
