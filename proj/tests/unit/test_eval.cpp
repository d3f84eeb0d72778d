#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "offlang/error.hpp"
#include "offlang/eval.hpp"
#include "offlang/synth.hpp"

using namespace offlang;
using namespace offlang::eval;

namespace {

constexpr Label O = Label::off;
constexpr Label N = Label::not_off;

std::vector<Label> repeat(Label l, std::size_t n) { return std::vector<Label>(n, l); }

std::vector<Label> concat(std::vector<Label> a, const std::vector<Label>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// Separable corpora number their ids from 1; keep held-out ids apart.
Corpus held_out(const Corpus& c) {
    Corpus out(c.language(), Split::validation);
    for (auto ex : c.examples()) {
        ex.id = "v-" + ex.id;
        out.add(ex);
    }
    return out;
}

Label flip(Label l) { return l == O ? N : O; }

encoder::EncoderConfig small(std::uint64_t seed, std::size_t max_len = 16) {
    encoder::EncoderConfig c;
    c.hidden_size = 16;
    c.layers = 1;
    c.heads = 2;
    c.ff_size = 64;
    c.max_sequence_length = max_len;
    c.vocab_cap = 2000;
    c.dropout = 0.1;
    c.seed = seed;
    return c;
}

train::TrainConfig quick(std::uint64_t seed, double lr = 3e-3) {
    train::TrainConfig t;
    t.epochs = 4;
    t.batch_size = 8;
    t.learning_rate = lr;
    t.seed = seed;
    return t;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("hand-computed example") {
    const std::vector<Label> gold{O, O, N, N}, pred{O, N, N, N};
    const auto r = evaluate(pred, gold);
    CHECK(r.metrics(O).f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.metrics(N).f1 == doctest::Approx(0.8));
    CHECK(round4(r.macro_f1) == 0.7333);
    CHECK(r.accuracy == 0.75);
    CHECK(r.confusion.at(N, O) == 1);
    CHECK(r.confusion.total == 4);
    CHECK(r.metrics(O).support == 2);
}

TEST_CASE("perfect predictions") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        std::vector<Label> gold(1 + rng() % 40);
        for (auto& g : gold) g = rng() % 2 ? O : N;
        const auto r = evaluate(gold, gold);
        CHECK(r.accuracy == 1.0);
        CHECK(r.confusion.is_diagonal());
        // A class absent from gold contributes F1 = 0.
        const bool both = std::count(gold.begin(), gold.end(), O) && std::count(gold.begin(), gold.end(), N);
        CHECK(r.macro_f1 == (both ? 1.0 : 0.5));
    }
}

TEST_CASE("all-NOT on the English test distribution") {
    const auto gold = concat(repeat(O, 1080), repeat(N, 2807));
    const auto r = evaluate(repeat(N, gold.size()), gold);
    CHECK(round4(r.macro_f1) == 0.4193);
    CHECK(r.macro_f1 == doctest::Approx(oracle::majority_macro_f1(2807, 3887)).epsilon(1e-12));
}

TEST_CASE("majority baselines") {
    for (Language l : {Language::da, Language::tr}) {
        const auto train_stats = synth::table1_stats(l, Split::train);
        const auto test_stats = synth::table1_stats(l, Split::test);
        const auto gold = concat(repeat(O, test_stats.off_count), repeat(N, test_stats.not_count));
        const auto r = majority_baseline(train_stats, gold);
        CHECK(r.macro_f1 == doctest::Approx(oracle::majority_macro_f1(double(test_stats.not_count), double(test_stats.total))).epsilon(1e-12));
    }
    const auto da = synth::table1_stats(Language::da, Split::test);
    CHECK(round4(majority_baseline(synth::table1_stats(Language::da, Split::train),
                                   concat(repeat(O, da.off_count), repeat(N, da.not_count)))
                     .macro_f1) == 0.4668);
    const auto tr = synth::table1_stats(Language::tr, Split::test);
    CHECK(round4(majority_baseline(synth::table1_stats(Language::tr, Split::train),
                                   concat(repeat(O, tr.off_count), repeat(N, tr.not_count)))
                     .macro_f1) == 0.4435);

    CHECK(majority_baseline({10, 3, 13}, repeat(O, 7)).macro_f1 == 0.5);
    CHECK(majority_label({5, 5, 10}) == N);
    CHECK(majority_label({6, 5, 11}) == O);
    CHECK_THROWS_AS(majority_baseline({0, 0, 0}, repeat(O, 3)), Error);
}

TEST_CASE("input validation") {
    try {
        evaluate(std::vector<Label>{O}, std::vector<Label>{O, N});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::length_mismatch);
    }
    CHECK_THROWS_AS(evaluate(std::vector<Label>{}, std::vector<Label>{}), Error);
}

TEST_CASE("metric properties on random pairs") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<Label> gold(n), pred(n);
        const auto bias = rng() % 10;
        for (std::size_t k = 0; k < n; ++k) {
            gold[k] = rng() % 10 < bias ? O : N;
            pred[k] = rng() % 4 == 0 ? flip(gold[k]) : gold[k];
        }
        const auto r = evaluate(pred, gold);
        const auto o = oracle::metrics(pred, gold);
        CHECK(std::abs(r.macro_f1 - o.macro_f1) <= 1e-12);
        CHECK(r.macro_f1 == doctest::Approx(0.5 * (r.per_class[0].f1 + r.per_class[1].f1)));

        std::vector<Label> fp(n), fg(n);
        for (std::size_t k = 0; k < n; ++k) {
            fp[k] = flip(pred[k]);
            fg[k] = flip(gold[k]);
        }
        CHECK(std::abs(evaluate(fp, fg).macro_f1 - r.macro_f1) <= 1e-12);
        CHECK((r.accuracy == 1.0) == r.confusion.is_diagonal());
        std::size_t sum = 0;
        for (const auto& row : r.confusion.counts)
            for (auto c : row) sum += c;
        CHECK(sum == n);
    }
}

TEST_CASE("report json round-trip") {
    auto r = evaluate(std::vector<Label>{O, N, N, O, N}, std::vector<Label>{O, N, O, O, N});
    r.system = "offlang";
    r.language = "da";
    r.config_fingerprint = "abc";
    r.seed = 9;
    r.head_input_dim = 32;
    const auto j = to_json(r);
    const auto keys = std::vector<std::string>{j.begin().key()};
    CHECK(keys.front() == "system");
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.system == "offlang");
    CHECK(back.macro_f1 == round4(r.macro_f1));
    CHECK(back.confusion.counts == r.confusion.counts);
    CHECK(back.head_input_dim == 32);
    CHECK(to_json(back).dump() == j.dump());
    CHECK_THROWS(report_from_json(nlohmann::json{{"system", 3}}));
}

TEST_CASE("grid search selection") {
    const auto train_set = synth::separable_corpus(80, 5);
    const auto validation = held_out(synth::separable_corpus(60, 1005));

    const auto single = grid_search({{3e-3}, {8}}, train_set, validation, small(5), quick(5));
    CHECK(single.cells.size() == 1);
    CHECK(single.best_index == 0);
    CHECK(single.best.learning_rate == 3e-3);

    const auto tie = grid_search({{3e-3, 3e-3}, {8}}, train_set, validation, small(5), quick(5));
    REQUIRE(tie.cells.size() == 2);
    CHECK(tie.cells[0].report->macro_f1 == tie.cells[1].report->macro_f1);
    CHECK(tie.best_index == 0);

    const auto order = grid_search({{1e-3, 3e-3}, {8, 16}}, train_set, validation, small(5), quick(5));
    REQUIRE(order.cells.size() == 4);
    CHECK(order.cells[1].config.learning_rate == 1e-3);
    CHECK(order.cells[1].config.batch_size == 16);
    CHECK(order.cells[2].config.learning_rate == 3e-3);
}

TEST_CASE("absurd learning rate loses") {
    // Rates scaled to a randomly initialised encoder: 1e4 trips the
    // divergence guard, 3e-3 learns the task within a few epochs.
    const auto train_set = synth::separable_corpus(80, 6);
    const auto validation = held_out(synth::separable_corpus(60, 1006));
    const auto result = grid_search({{1e4, 3e-3}, {8}}, train_set, validation, small(6), quick(6));
    REQUIRE(result.cells.size() == 2);
    CHECK_FALSE(result.cells[0].report.has_value());
    CHECK_FALSE(result.cells[0].error.empty());
    CHECK(result.best.learning_rate == 3e-3);
    CHECK(result.best_index == 1);
}

TEST_CASE("all cells diverging is an error") {
    const auto train_set = synth::separable_corpus(40, 6);
    try {
        grid_search({{1e4}, {8}}, train_set, held_out(train_set), small(6), quick(6));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::all_cells_diverged);
    }
}

TEST_CASE("augmentation ablation shape") {
    auto task = synth::disambiguation_task(3, 40, 30);
    ExperimentConfig cfg{small(3, 32), quick(3, 1e-2), std::nullopt};
    const auto reports = ablation_augmentation(task.train, task.validation, task.pivots, task.translations, cfg);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].system == kWithoutAugmentation);
    CHECK(reports[1].system == kWithAugmentation);
    CHECK(reports[0].confusion.total == task.validation.size());
    for (Label l : {O, N}) CHECK(reports[0].metrics(l).support == reports[1].metrics(l).support);
    CHECK(reports[0].seed == reports[1].seed);
}

TEST_CASE("english ablation shape") {
    const auto a = synth::separable_corpus(60, 21);
    const auto b = synth::with_label_noise(synth::separable_corpus(60, 22), 0.2, 23);
    const auto test = synth::separable_corpus(40, 1021);
    ExperimentConfig cfg{small(21), quick(21), std::nullopt};
    const auto reports = ablation_english(a, b, test, cfg);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].system == kEncoderAOnly);
    CHECK(reports[1].system == kEncoderBOnly);
    CHECK(reports[2].system == kDualEncoder);
    CHECK(reports[0].head_input_dim == 16);
    CHECK(reports[1].head_input_dim == 16);
    CHECK(reports[2].head_input_dim == 32);
    for (const auto& r : reports) CHECK(r.confusion.total == 40);
}

TEST_CASE("label noise flips exactly the rounded share") {
    const auto c = synth::separable_corpus(50, 2);
    const auto noisy = synth::with_label_noise(c, 0.2, 4);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < c.size(); ++i) flips += c[i].label != noisy[i].label;
    CHECK(flips == 10);
}

}  // TEST_SUITE
