#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "offlang/encoder.hpp"
#include "offlang/error.hpp"
#include "offlang/synth.hpp"

using namespace offlang;
using namespace offlang::encoder;

namespace {

EncoderConfig tiny(std::size_t max_len = 16, std::uint64_t seed = 3) {
    EncoderConfig c;
    c.hidden_size = 8;
    c.layers = 2;
    c.heads = 2;
    c.ff_size = 16;
    c.max_sequence_length = max_len;
    c.vocab_cap = 100;
    c.dropout = 0.1;
    c.seed = seed;
    return c;
}

// Small init weights make every input look alike; widen them.
void spread(EncoderModel& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.3);
    m.weights.for_each([&](const std::string&, Matrix& t) {
        for (auto& x : t.data) x += n(rng);
    });
}

EncoderModel toy_model(std::size_t max_len = 16, std::uint64_t seed = 3) {
    const auto vocab = Vocabulary::build(std::vector<std::string>{"a b c d", "e f g a", "<user> b"}, 100);
    auto m = EncoderModel::initialize(tiny(max_len, seed), vocab);
    spread(m, seed + 1);
    return m;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("vocabulary order and cap") {
    const auto v = Vocabulary::build(std::vector<std::string>{"a b", "a c"}, 10);
    REQUIRE(v.size() == 8);
    CHECK(v.token(0) == "[PAD]");
    CHECK(v.token(1) == "[UNK]");
    CHECK(v.token(2) == "[CLS]");
    CHECK(v.token(3) == "[SEP]");
    CHECK(v.token(4) == "<user>");
    CHECK(v.token(5) == "a");
    CHECK(v.token(6) == "b");
    CHECK(v.token(7) == "c");

    const auto capped = Vocabulary::build(std::vector<std::string>{"a b", "a c"}, 6);
    CHECK(capped.size() == 6);
    CHECK(capped.token(5) == "a");
    CHECK(capped.id("zebra") == Vocabulary::kUnk);
    CHECK(capped.id("b") == Vocabulary::kUnk);

    CHECK_THROWS_AS(Vocabulary::build(std::vector<std::string>{}, 10), Error);
}

TEST_CASE("vocabulary is a bijection") {
    const auto corpus = synth::mini_corpus(Language::en, Split::train, 2);
    const auto v = Vocabulary::build(corpus, 300);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.id(v.token(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
    CHECK(Vocabulary::from_tokens(v.tokens()) == v);
    CHECK_THROWS_AS(Vocabulary::from_tokens({"x", "y"}), Error);
}

TEST_CASE("tokenizer") {
    CHECK(tokenize("Hello, <user>!") == std::vector<std::string>{"hello", ",", "<user>", "!"});
    CHECK(tokenize("a [SEP] b") == std::vector<std::string>{"a", "[SEP]", "b"});
    CHECK(tokenize("   ").empty());
}

TEST_CASE("tokenize_encode layout") {
    const auto v = Vocabulary::build(std::vector<std::string>{"a b"}, 10);
    const auto s = tokenize_encode("a b", v, 8);
    CHECK(s.ids == std::vector<TokenId>{2, v.id("a"), v.id("b"), 3, 0, 0, 0, 0});
    CHECK(s.mask == std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0, 0, 0});
    CHECK(s.real_length() == 4);

    const auto empty = tokenize_encode("", v, 8);
    CHECK(empty.ids == std::vector<TokenId>{2, 3, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("truncation keeps the head and the final separator") {
    std::string text;
    for (int i = 0; i < 200; ++i) text += "w" + std::to_string(i) + " ";
    const auto v = Vocabulary::build(std::vector<std::string>{text}, 1000);
    const auto s = tokenize_encode(text, v, 128);
    REQUIRE(s.ids.size() == 128);
    CHECK(s.real_length() == 128);
    CHECK(s.ids.front() == Vocabulary::kCls);
    CHECK(s.ids.back() == Vocabulary::kSep);
    for (int i = 0; i < 126; ++i) CHECK(s.ids[i + 1] == v.id("w" + std::to_string(i)));
}

TEST_CASE("config validation") {
    auto c = tiny();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), Error);
    c = tiny();
    c.hidden_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = tiny();
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("output shape and determinism") {
    const auto m = toy_model();
    for (const char* text : {"", "a", "a b c d e f g a b c d e f g a b c"}) {
        const auto seq = tokenize_encode(text, m.vocab, 16);
        const auto cls = encode(m, seq);
        CHECK(cls.size() == 8);
        CHECK(cls == encode(m, seq));
        for (double x : cls) CHECK(std::isfinite(x));
    }
}

TEST_CASE("layer outputs keep their shapes") {
    const auto m = toy_model();
    const auto seq = tokenize_encode("a b c", m.vocab, 16);
    ForwardOptions opts;
    opts.full_length = true;
    const auto trace = forward(m, seq, opts);
    REQUIRE(trace.layers.size() == 2);
    for (const auto& layer : trace.layers) {
        CHECK((layer.output.rows == 16 && layer.output.cols == 8));
        CHECK(layer.attention.size() == 2);
        CHECK((layer.ff_act.rows == 16 && layer.ff_act.cols == 16));
    }
}

TEST_CASE("padding amount does not change the CLS vector") {
    const auto wide = toy_model(32);
    auto narrow = wide;
    narrow.config.max_sequence_length = 9;
    narrow.weights.position_embedding = Matrix(9, 8);
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 8; ++c) narrow.weights.position_embedding(r, c) = wide.weights.position_embedding(r, c);

    for (const char* text : {"a b c", "g f e d c b a", ""}) {
        const auto a = encode(wide, tokenize_encode(text, wide.vocab, 32));
        const auto b = encode(narrow, tokenize_encode(text, narrow.vocab, 9));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
    }
}

TEST_CASE("attention rows are distributions over real tokens") {
    const auto m = toy_model();
    const auto seq = tokenize_encode("a b c d", m.vocab, 16);
    ForwardOptions opts;
    opts.full_length = true;
    const auto trace = forward(m, seq, opts);
    const std::size_t real = seq.real_length();
    for (const auto& layer : trace.layers) {
        for (const auto& att : layer.attention) {
            for (std::size_t q = 0; q < att.rows; ++q) {
                double sum = 0, to_pad = 0;
                for (std::size_t k = 0; k < att.cols; ++k) (k < real ? sum : to_pad) += att(q, k);
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
                CHECK(to_pad < 1e-9);
            }
        }
    }
}

TEST_CASE("ids outside the vocabulary are rejected") {
    const auto m = toy_model();
    auto seq = tokenize_encode("a", m.vocab, 16);
    seq.ids[1] = static_cast<TokenId>(m.vocab.size());
    try {
        encode(m, seq);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::id_out_of_range);
    }
    const auto short_seq = tokenize_encode("a", m.vocab, 8);
    CHECK_THROWS_AS(encode(m, short_seq), Error);
}

TEST_CASE("dual encoding concatenates") {
    const auto a = toy_model(16, 3);
    const auto b = toy_model(16, 9);
    const auto seq = tokenize_encode("a b <user>", a.vocab, 16);
    const auto ab = dual_encode(a, b, seq);
    const auto ba = dual_encode(b, a, seq);
    REQUIRE(ab.size() == 16);
    const auto ea = encode(a, seq);
    const auto eb = encode(b, seq);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(ab[i] == ea[i]);
        CHECK(ab[8 + i] == eb[i]);
        CHECK(ba[i] == ab[8 + i]);
        CHECK(ba[8 + i] == ab[i]);
    }
    CHECK(norm(ab) == doctest::Approx(norm(ba)));

    const auto same = dual_encode(a, a, seq);
    for (std::size_t i = 0; i < 8; ++i) CHECK(same[i] == same[8 + i]);

    const auto other = EncoderModel::initialize(tiny(), Vocabulary::build(std::vector<std::string>{"zz yy"}, 100));
    try {
        dual_encode(a, other, seq);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_mismatch);
    }
}

TEST_CASE("initialization is reproducible and follows the convention") {
    const auto vocab = Vocabulary::build(std::vector<std::string>{"a b c"}, 100);
    const auto x = EncoderModel::initialize(tiny(16, 5), vocab);
    const auto y = EncoderModel::initialize(tiny(16, 5), vocab);
    const auto z = EncoderModel::initialize(tiny(16, 6), vocab);
    CHECK(x.weights == y.weights);
    CHECK_FALSE(x.weights == z.weights);

    for (double w : x.weights.token_embedding.data) CHECK(std::abs(w) <= 0.04);
    const auto& L = x.weights.layers[0];
    for (double b : L.bq.data) CHECK(b == 0.0);
    for (double g : L.ln1_gain.data) CHECK(g == 1.0);
    for (double g : L.ln2_bias.data) CHECK(g == 0.0);
    CHECK((x.weights.token_embedding.rows == vocab.size() && x.weights.token_embedding.cols == 8));
    CHECK((x.weights.position_embedding.rows == 16));
}

TEST_CASE("checkpoint round-trip") {
    TempDir dir("ckpt");
    const auto m = toy_model();
    save_model(dir / "m.json", m);
    const auto back = load_model(dir / "m.json");
    CHECK(back.config == m.config);
    CHECK(back.vocab == m.vocab);
    CHECK(back.weights == m.weights);

    auto j = to_checkpoint(m);
    j["version"] = 99;
    CHECK_THROWS_AS(from_checkpoint(j), Error);
    j = to_checkpoint(m);
    j.erase("tensors");
    CHECK_THROWS_AS(from_checkpoint(j), Error);
    write_file(dir / "bad.json", "{nope");
    CHECK_THROWS_AS(load_model(dir / "bad.json"), Error);
}

TEST_CASE("vocabulary tsv export") {
    const auto v = Vocabulary::build(std::vector<std::string>{"a b"}, 10);
    std::ostringstream out;
    v.write_tsv(out);
    CHECK(out.str().rfind("[PAD]\t0\n[UNK]\t1\n", 0) == 0);
}

TEST_CASE("key bias receives no gradient") {
    // Adding the same vector to every key shifts each score row by a constant.
    auto m = toy_model();
    const auto seq = tokenize_encode("a b c d", m.vocab, 16);
    auto grads = m.weights.zeros_like();
    std::vector<double> d(8, 0.0);
    for (std::size_t i = 0; i < 8; ++i) d[i] = 0.1 * double(i) - 0.3;
    backward(m, forward(m, seq), d, grads);
    double wk = 0, bk = 0;
    for (double g : grads.layers[0].wk.data) wk = std::max(wk, std::abs(g));
    for (double g : grads.layers[0].bk.data) bk = std::max(bk, std::abs(g));
    CHECK(wk > 1e-6);
    CHECK(bk < 1e-10);
}

TEST_CASE("gelu derivative") {
    for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
        const double h = 1e-6;
        CHECK(gelu_derivative(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-7));
    }
    CHECK(gelu(0.0) == 0.0);
}

}  // TEST_SUITE
