#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "offlang/error.hpp"
#include "offlang/eval.hpp"
#include "offlang/synth.hpp"
#include "offlang/train.hpp"

using namespace offlang;
using namespace offlang::train;

namespace {

encoder::EncoderConfig small(std::uint64_t seed) {
    encoder::EncoderConfig c;
    c.hidden_size = 16;
    c.layers = 1;
    c.heads = 2;
    c.ff_size = 64;
    c.max_sequence_length = 16;
    c.vocab_cap = 2000;
    c.dropout = 0.1;
    c.seed = seed;
    return c;
}

TrainConfig quick(std::uint64_t seed, double lr = 3e-3) {
    TrainConfig t;
    t.epochs = 4;
    t.batch_size = 8;
    t.learning_rate = lr;
    t.seed = seed;
    return t;
}

double accuracy(const Classifier& c, const Corpus& corpus) {
    return eval::evaluate(c.predict(corpus), eval::gold_labels(corpus)).accuracy;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("cross entropy") {
    const auto even = cross_entropy_loss({0.0, 0.0}, Label::off);
    CHECK(even.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(even.grad[0] == doctest::Approx(-0.5));
    CHECK(even.grad[1] == doctest::Approx(0.5));

    const auto saturated = cross_entropy_loss({30.0, -30.0}, Label::off);
    CHECK(saturated.loss < 1e-12);
    CHECK(saturated.loss >= 0.0);
    const auto huge = cross_entropy_loss({800.0, -800.0}, Label::not_off);
    CHECK(huge.loss == doctest::Approx(1600.0));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int i = 0; i < 500; ++i) {
        const auto r = cross_entropy_loss({n(rng), n(rng)}, i % 2 ? Label::off : Label::not_off);
        CHECK(std::abs(r.grad[0] + r.grad[1]) < 1e-12);
        CHECK(r.loss >= 0.0);
    }
    CHECK_THROWS_AS(cross_entropy_loss({NAN, 0.0}, Label::off), Error);
}

TEST_CASE("adam first step by hand") {
    Matrix p(1, 1, 0.0), g(1, 1, 1.0);
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&g};
    AdamState s;
    adam_step(params, grads, s, 2e-5);
    CHECK(s.t == 1);
    CHECK(s.m[0].data[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.v[0].data[0] == doctest::Approx(0.001).epsilon(1e-12));
    // m_hat = 1, v_hat = 1, step = lr / (1 + eps).
    CHECK(p.data[0] == doctest::Approx(-2e-5 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam with zero gradients") {
    Matrix p(1, 1, 0.5), zero(1, 1, 0.0);
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&zero};
    AdamState fresh;
    adam_step(params, grads, fresh, 1e-3);
    CHECK(p.data[0] == 0.5);

    Matrix q(1, 1, 0.0), one(1, 1, 1.0);
    Matrix* qs[] = {&q};
    const Matrix* ones[] = {&one};
    const Matrix* zeros[] = {&zero};
    AdamState s;
    adam_step(qs, ones, s, 1e-3);
    double m = s.m[0].data[0];
    double before = q.data[0];
    for (int k = 0; k < 2; ++k) {
        adam_step(qs, zeros, s, 1e-3);
        CHECK(s.m[0].data[0] == doctest::Approx(AdamState::kBeta1 * m).epsilon(1e-12));
        CHECK(q.data[0] < before);
        CHECK(s.v[0].data[0] >= 0.0);
        m = s.m[0].data[0];
        before = q.data[0];
    }
}

TEST_CASE("adam shape mismatch") {
    Matrix p(2, 2), g(1, 2);
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&g};
    AdamState s;
    CHECK_THROWS_AS(adam_step(params, grads, s, 1e-3), Error);
}

TEST_CASE("per-language defaults") {
    const std::tuple<Language, std::size_t, double> expected[] = {
        {Language::en, 8, 2e-5}, {Language::da, 16, 1e-5}, {Language::ar, 24, 3e-5},
        {Language::el, 32, 2e-5}, {Language::tr, 16, 2e-5}};
    for (const auto& [lang, bs, lr] : expected) {
        const auto c = TrainConfig::defaults_for(lang);
        CHECK(c.epochs == 4);
        CHECK(c.batch_size == bs);
        CHECK(c.learning_rate == lr);
    }
}

TEST_CASE("invalid training configs") {
    const auto corpus = synth::separable_corpus(20, 1);
    auto c = quick(1);
    c.epochs = 0;
    CHECK_THROWS_AS(train_single(corpus, eval::fresh_encoder(corpus, small(1)), c), Error);
    c = quick(1);
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    try {
        train_single(Corpus{}, eval::fresh_encoder(corpus, small(1)), quick(1));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_corpus);
    }
}

TEST_CASE("separable toy task is learned") {
    const auto corpus = synth::separable_corpus(200, 4);
    const auto result = train_single(corpus, eval::fresh_encoder(corpus, small(4)), quick(4));
    CHECK(result.epoch_loss.size() == 4);
    CHECK(result.epoch_loss.back() < 0.1);
    CHECK(accuracy(result.classifier, corpus) == 1.0);
    CHECK(result.classifier.head.input_dim() == 16);
}

TEST_CASE("training is deterministic") {
    const auto corpus = synth::separable_corpus(60, 8);
    const auto a = train_single(corpus, eval::fresh_encoder(corpus, small(8)), quick(8));
    const auto b = train_single(corpus, eval::fresh_encoder(corpus, small(8)), quick(8));
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.classifier.encoders[0].weights == b.classifier.encoders[0].weights);
    CHECK(a.classifier.head.weight == b.classifier.head.weight);
    CHECK(to_checkpoint(a.classifier).dump() == to_checkpoint(b.classifier).dump());
}

TEST_CASE("frozen single encoder stays put") {
    const auto corpus = synth::separable_corpus(40, 2);
    const auto enc = eval::fresh_encoder(corpus, small(2));
    auto c = quick(2);
    c.freeze_encoders = true;
    const auto result = train_single(corpus, enc, c);
    CHECK(result.classifier.encoders[0].weights == enc.weights);
}

TEST_CASE("divergence is reported") {
    const auto corpus = synth::separable_corpus(40, 2);
    try {
        train_single(corpus, eval::fresh_encoder(corpus, small(2)), quick(2, 1e4));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK((e.code() == Errc::divergence || e.code() == Errc::non_finite));
    }
}

TEST_CASE("head probabilities sum to one") {
    const auto corpus = synth::separable_corpus(40, 6);
    const auto result = train_single(corpus, eval::fresh_encoder(corpus, small(6)), quick(6));
    for (const auto& ex : corpus.examples()) {
        const auto p = result.classifier.probabilities(ex.text);
        CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
    }
    const auto s = softmax({1000.0, -1000.0});
    CHECK(s[0] == 1.0);
    CHECK(s[1] >= 0.0);
}

TEST_CASE("dual head on frozen encoders") {
    const auto corpus = synth::separable_corpus(120, 12);
    const auto base = eval::fresh_encoder(corpus, small(12));
    const auto a = train_single(corpus, base, quick(12)).classifier.encoders[0];
    const auto b = train_single(synth::separable_corpus(120, 13), base, quick(13)).classifier.encoders[0];

    const auto dual = train_dual(corpus, a, b, quick(12));
    CHECK(dual.classifier.mode == Mode::dual);
    CHECK(dual.classifier.head.input_dim() == 32);
    CHECK(dual.classifier.encoders[0].weights == a.weights);
    CHECK(dual.classifier.encoders[1].weights == b.weights);
    for (double l : dual.epoch_loss) CHECK(std::isfinite(l));
    CHECK(dual.epoch_loss.back() < dual.epoch_loss.front());

    const auto joint = train_dual(corpus, a, b, quick(12), true);
    CHECK_FALSE(joint.classifier.encoders[0].weights == a.weights);
}

TEST_CASE("redundant second encoder matches the single head") {
    std::vector<double> single, dual;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto train_set = synth::separable_corpus(120, 40 + seed);
        const auto test_set = synth::separable_corpus(100, 1040 + seed);
        auto tuned = train_single(train_set, eval::fresh_encoder(train_set, small(seed)), quick(seed));
        auto frozen = quick(seed);
        frozen.freeze_encoders = true;
        const auto enc = tuned.classifier.encoders[0];
        single.push_back(accuracy(train_single(train_set, enc, frozen).classifier, test_set));
        dual.push_back(accuracy(train_dual(train_set, enc, enc, quick(seed)).classifier, test_set));
    }
    std::sort(single.begin(), single.end());
    std::sort(dual.begin(), dual.end());
    CHECK(std::abs(single[2] - dual[2]) <= 0.02);
}

TEST_CASE("classifier checkpoint round-trip") {
    TempDir dir("classifier");
    const auto corpus = synth::separable_corpus(40, 3);
    const auto result = train_single(corpus, eval::fresh_encoder(corpus, small(3)), quick(3));
    save_classifier(dir / "c.json", result.classifier);
    const auto back = load_classifier(dir / "c.json");
    CHECK(back.predict(corpus) == result.classifier.predict(corpus));
    CHECK(to_checkpoint(back).dump() == to_checkpoint(result.classifier).dump());
}

TEST_CASE("loss csv") {
    std::ostringstream out;
    write_loss_csv(out, {0.5, 0.25});
    const auto s = out.str();
    CHECK(s.rfind("epoch,mean_loss\n1,", 0) == 0);
    CHECK(s.find("\n2,") != std::string::npos);
}

}  // TEST_SUITE
