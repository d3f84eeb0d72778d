#include "offlang/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>

#include "offlang/error.hpp"
#include "offlang/text.hpp"

namespace offlang::encoder {

namespace {

const std::vector<std::string>& reserved_tokens() {
    static const std::vector<std::string> kTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "<user>"};
    return kTokens;
}

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

}  // namespace

Vocabulary::Vocabulary() {
    for (const auto& t : reserved_tokens()) push(t);
}

void Vocabulary::push(std::string token) {
    index_.emplace(token, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t cap) {
    if (texts.empty()) throw Error(Errc::empty_corpus, "cannot build a vocabulary from no text");
    if (cap < kReserved) throw Error(Errc::invalid_argument, "vocabulary cap is smaller than the reserved set");

    std::map<std::string, std::size_t> freq;
    Vocabulary vocab;
    for (const auto& t : texts) {
        for (auto& tok : tokenize(t)) {
            if (!vocab.contains(tok)) ++freq[std::move(tok)];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    // std::map iteration is already lexicographic, so a stable sort on count
    // leaves ties in lexicographic order.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (auto& [tok, count] : ranked) {
        if (vocab.size() >= cap) break;
        vocab.push(tok);
    }
    return vocab;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t cap) {
    if (corpus.empty()) throw Error(Errc::empty_corpus, "cannot build a vocabulary from an empty corpus");
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& ex : corpus.examples()) texts.push_back(ex.text);
    return build(texts, cap);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    const auto& reserved = reserved_tokens();
    if (tokens.size() < reserved.size() || !std::equal(reserved.begin(), reserved.end(), tokens.begin())) {
        throw Error(Errc::checkpoint_format, "vocabulary does not start with the reserved tokens");
    }
    Vocabulary vocab;
    for (std::size_t i = reserved.size(); i < tokens.size(); ++i) {
        if (vocab.contains(tokens[i])) throw Error(Errc::checkpoint_format, "duplicate vocabulary token " + tokens[i]);
        vocab.push(std::move(tokens[i]));
    }
    return vocab;
}

TokenId Vocabulary::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw Error(Errc::id_out_of_range, "token id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

void Vocabulary::write_tsv(std::ostream& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

std::vector<std::string> tokenize(std::string_view raw) {
    const std::string s = text::ascii_lower(raw);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (text::is_ascii_space(s[i])) {
            ++i;
            continue;
        }
        bool matched = false;
        for (const auto& reserved : reserved_tokens()) {
            if (text::iequals(std::string_view(s).substr(i, reserved.size()), reserved)) {
                out.push_back(reserved);
                i += reserved.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (is_ascii_punct(s[i])) {
            out.emplace_back(1, s[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && !text::is_ascii_space(s[j]) && !is_ascii_punct(s[j])) ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::size_t TokenSequence::real_length() const {
    std::size_t n = mask.size();
    while (n > 0 && mask[n - 1] == 0) --n;
    return n;
}

TokenSequence tokenize_encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 2) throw Error(Errc::invalid_argument, "max sequence length must be at least 2");
    const auto tokens = tokenize(text);
    const std::size_t keep = std::min(tokens.size(), max_len - 2);

    TokenSequence seq;
    seq.ids.assign(max_len, Vocabulary::kPad);
    seq.mask.assign(max_len, 0);
    seq.ids[0] = Vocabulary::kCls;
    for (std::size_t i = 0; i < keep; ++i) seq.ids[i + 1] = vocab.id(tokens[i]);
    seq.ids[keep + 1] = Vocabulary::kSep;
    std::fill_n(seq.mask.begin(), keep + 2, std::uint8_t{1});
    return seq;
}

void EncoderConfig::validate() const {
    if (hidden_size == 0 || layers == 0 || heads == 0 || ff_size == 0 || max_sequence_length < 2 ||
        vocab_cap < Vocabulary::kReserved) {
        throw Error(Errc::invalid_argument, "encoder sizes must be positive");
    }
    if (hidden_size % heads != 0) throw Error(Errc::invalid_argument, "hidden size must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(Errc::invalid_argument, "dropout must lie in [0,1)");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
    j = nlohmann::json{{"hidden_size", c.hidden_size},
                       {"layers", c.layers},
                       {"heads", c.heads},
                       {"ff_size", c.ff_size},
                       {"max_sequence_length", c.max_sequence_length},
                       {"vocab_cap", c.vocab_cap},
                       {"dropout", c.dropout},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
    EncoderConfig d;
    c.hidden_size = j.value("hidden_size", d.hidden_size);
    c.layers = j.value("layers", d.layers);
    c.heads = j.value("heads", d.heads);
    c.ff_size = j.value("ff_size", 4 * c.hidden_size);
    c.max_sequence_length = j.value("max_sequence_length", d.max_sequence_length);
    c.vocab_cap = j.value("vocab_cap", d.vocab_cap);
    c.dropout = j.value("dropout", d.dropout);
    c.seed = j.value("seed", d.seed);
}

EncoderWeights EncoderWeights::zeros(const EncoderConfig& c, std::size_t vocab_size) {
    const std::size_t h = c.hidden_size;
    EncoderWeights w;
    w.token_embedding = Matrix(vocab_size, h);
    w.position_embedding = Matrix(c.max_sequence_length, h);
    w.layers.resize(c.layers);
    for (auto& L : w.layers) {
        L.wq = L.wk = L.wv = L.wo = Matrix(h, h);
        L.bq = L.bk = L.bv = L.bo = Matrix(1, h);
        L.ln1_gain = L.ln1_bias = L.ln2_gain = L.ln2_bias = Matrix(1, h);
        L.w1 = Matrix(h, c.ff_size);
        L.b1 = Matrix(1, c.ff_size);
        L.w2 = Matrix(c.ff_size, h);
        L.b2 = Matrix(1, h);
    }
    return w;
}

EncoderWeights EncoderWeights::zeros_like() const {
    EncoderWeights w = *this;
    w.for_each([](const std::string&, Matrix& m) { m.set_zero(); });
    return w;
}

bool EncoderWeights::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Matrix& m) {
        for (double x : m.data) ok = ok && std::isfinite(x);
    });
    return ok;
}

bool operator==(const EncoderWeights& a, const EncoderWeights& b) {
    std::vector<const Matrix*> lhs;
    std::vector<const Matrix*> rhs;
    a.for_each([&](const std::string&, const Matrix& m) { lhs.push_back(&m); });
    b.for_each([&](const std::string&, const Matrix& m) { rhs.push_back(&m); });
    if (lhs.size() != rhs.size()) return false;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (!(*lhs[i] == *rhs[i])) return false;
    }
    return true;
}

EncoderModel EncoderModel::initialize(const EncoderConfig& config, Vocabulary vocab) {
    config.validate();
    EncoderModel model{config, std::move(vocab), {}};
    model.weights = EncoderWeights::zeros(config, model.vocab.size());

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    const auto truncated = [&] {
        for (;;) {
            const double x = normal(rng);
            if (std::abs(x) <= 0.04) return x;
        }
    };
    model.weights.for_each([&](const std::string& name, Matrix& m) {
        const auto leaf = std::string_view(name).substr(name.rfind('.') + 1);
        if (leaf == "ln1_gain" || leaf == "ln2_gain") {
            std::fill(m.data.begin(), m.data.end(), 1.0);
        } else if (leaf.front() == 'b' || leaf.ends_with("_bias")) {
            m.set_zero();
        } else {
            for (double& x : m.data) x = truncated();
        }
    });
    return model;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

namespace {

std::vector<double> dropout_scales(std::size_t n, const ForwardOptions& options, double rate) {
    if (!options.training || rate <= 0.0) return {};
    if (!options.rng) throw Error(Errc::invalid_argument, "training forward pass needs a generator");
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<double> scales(n);
    const double inv = 1.0 / (1.0 - rate);
    for (double& s : scales) s = keep(*options.rng) ? inv : 0.0;
    return scales;
}

void apply_scales(Matrix& m, const std::vector<double>& scales) {
    if (scales.empty()) return;
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] *= scales[i];
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, Matrix& xhat,
                  std::vector<double>& inv_std) {
    const std::size_t n = x.cols;
    Matrix out(x.rows, n);
    xhat = Matrix(x.rows, n);
    inv_std.assign(x.rows, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const auto row = x.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[r] = is;
        for (std::size_t c = 0; c < n; ++c) {
            const double xh = (row[c] - mean) * is;
            xhat(r, c) = xh;
            out(r, c) = gain.data[c] * xh + bias.data[c];
        }
    }
    return out;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const std::vector<double>& inv_std,
                           const Matrix& gain, Matrix& d_gain, Matrix& d_bias) {
    const std::size_t n = dy.cols;
    Matrix dx(dy.rows, n);
    std::vector<double> dxhat(n);
    for (std::size_t r = 0; r < dy.rows; ++r) {
        double mean_d = 0.0;
        double mean_dx = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            d_gain.data[c] += dy(r, c) * xhat(r, c);
            d_bias.data[c] += dy(r, c);
            dxhat[c] = dy(r, c) * gain.data[c];
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xhat(r, c);
        }
        mean_d /= static_cast<double>(n);
        mean_dx /= static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) {
            dx(r, c) = inv_std[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
        }
    }
    return dx;
}

void add_into(Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace

ForwardTrace forward(const EncoderModel& model, const TokenSequence& seq, const ForwardOptions& options) {
    const auto& c = model.config;
    const std::size_t h = c.hidden_size;
    if (seq.ids.size() != c.max_sequence_length || seq.mask.size() != seq.ids.size()) {
        throw Error(Errc::shape_mismatch, "sequence length " + std::to_string(seq.ids.size()) +
                                              " differs from the model's " + std::to_string(c.max_sequence_length));
    }
    for (TokenId id : seq.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= model.vocab.size()) {
            throw Error(Errc::id_out_of_range, "token id " + std::to_string(id) + " outside the vocabulary");
        }
    }

    // Keys past the last real token are masked, so their query rows cannot
    // influence the CLS row; skip them unless asked for the full grid.
    const std::size_t T = options.full_length ? seq.ids.size() : std::max<std::size_t>(seq.real_length(), 1);
    ForwardTrace trace;
    trace.ids.assign(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(T));
    trace.mask.assign(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(T));

    Matrix x(T, h);
    for (std::size_t t = 0; t < T; ++t) {
        const auto e = model.weights.token_embedding.row(static_cast<std::size_t>(trace.ids[t]));
        const auto p = model.weights.position_embedding.row(t);
        for (std::size_t j = 0; j < h; ++j) x(t, j) = e[j] + p[j];
    }
    trace.embed_drop = dropout_scales(T * h, options, c.dropout);
    apply_scales(x, trace.embed_drop);

    const std::size_t A = c.heads;
    const std::size_t d = c.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    trace.layers.resize(c.layers);
    for (std::size_t l = 0; l < c.layers; ++l) {
        const auto& W = model.weights.layers[l];
        auto& L = trace.layers[l];
        L.input = x;
        L.q = linalg::matmul(x, W.wq, &W.bq);
        L.k = linalg::matmul(x, W.wk, &W.bk);
        L.v = linalg::matmul(x, W.wv, &W.bv);
        L.context = Matrix(T, h);
        L.attention.assign(A, Matrix(T, T));
        for (std::size_t a = 0; a < A; ++a) {
            auto& P = L.attention[a];
            for (std::size_t i = 0; i < T; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < T; ++j) {
                    if (!trace.mask[j]) continue;
                    double s = 0.0;
                    for (std::size_t k = 0; k < d; ++k) s += L.q(i, a * d + k) * L.k(j, a * d + k);
                    P(i, j) = s * scale;
                    mx = std::max(mx, P(i, j));
                }
                double z = 0.0;
                for (std::size_t j = 0; j < T; ++j) {
                    P(i, j) = trace.mask[j] ? std::exp(P(i, j) - mx) : 0.0;
                    z += P(i, j);
                }
                if (z > 0.0) {
                    for (std::size_t j = 0; j < T; ++j) P(i, j) /= z;
                }
                for (std::size_t j = 0; j < T; ++j) {
                    const double pij = P(i, j);
                    if (pij == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) L.context(i, a * d + k) += pij * L.v(j, a * d + k);
                }
            }
        }
        Matrix attn_out = linalg::matmul(L.context, W.wo, &W.bo);
        L.attn_drop = dropout_scales(T * h, options, c.dropout);
        apply_scales(attn_out, L.attn_drop);
        add_into(attn_out, x);
        L.y1 = layer_norm(attn_out, W.ln1_gain, W.ln1_bias, L.ln1_xhat, L.ln1_inv_std);

        L.ff_pre = linalg::matmul(L.y1, W.w1, &W.b1);
        L.ff_act = L.ff_pre;
        for (double& v : L.ff_act.data) v = gelu(v);
        Matrix ff_out = linalg::matmul(L.ff_act, W.w2, &W.b2);
        L.ff_drop = dropout_scales(T * h, options, c.dropout);
        apply_scales(ff_out, L.ff_drop);
        add_into(ff_out, L.y1);
        L.output = layer_norm(ff_out, W.ln2_gain, W.ln2_bias, L.ln2_xhat, L.ln2_inv_std);
        x = L.output;
    }
    const auto cls = x.row(0);
    trace.cls.assign(cls.begin(), cls.end());
    return trace;
}

void backward(const EncoderModel& model, const ForwardTrace& trace, std::span<const double> d_cls,
              EncoderWeights& grads) {
    const auto& c = model.config;
    const std::size_t h = c.hidden_size;
    const std::size_t T = trace.ids.size();
    const std::size_t A = c.heads;
    const std::size_t d = c.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    if (d_cls.size() != h) throw Error(Errc::shape_mismatch, "CLS gradient has the wrong width");

    Matrix dx(T, h);
    std::copy(d_cls.begin(), d_cls.end(), dx.data.begin());

    for (std::size_t l = c.layers; l-- > 0;) {
        const auto& W = model.weights.layers[l];
        auto& G = grads.layers[l];
        const auto& L = trace.layers[l];

        // Second sublayer: LN(y1 + dropout(ff(y1))).
        Matrix d_res2 = layer_norm_backward(dx, L.ln2_xhat, L.ln2_inv_std, W.ln2_gain, G.ln2_gain, G.ln2_bias);
        Matrix d_ff = d_res2;
        apply_scales(d_ff, L.ff_drop);
        linalg::accumulate_at_b(L.ff_act, d_ff, G.w2);
        linalg::accumulate_column_sums(d_ff, G.b2);
        Matrix d_hidden = linalg::matmul_bt(d_ff, W.w2);
        for (std::size_t i = 0; i < d_hidden.size(); ++i) d_hidden.data[i] *= gelu_derivative(L.ff_pre.data[i]);
        linalg::accumulate_at_b(L.y1, d_hidden, G.w1);
        linalg::accumulate_column_sums(d_hidden, G.b1);
        Matrix d_y1 = linalg::matmul_bt(d_hidden, W.w1);
        add_into(d_y1, d_res2);

        // First sublayer: LN(x + dropout(attention(x))).
        Matrix d_res1 = layer_norm_backward(d_y1, L.ln1_xhat, L.ln1_inv_std, W.ln1_gain, G.ln1_gain, G.ln1_bias);
        Matrix d_attn = d_res1;
        apply_scales(d_attn, L.attn_drop);
        linalg::accumulate_at_b(L.context, d_attn, G.wo);
        linalg::accumulate_column_sums(d_attn, G.bo);
        const Matrix d_ctx = linalg::matmul_bt(d_attn, W.wo);

        Matrix dq(T, h);
        Matrix dk(T, h);
        Matrix dv(T, h);
        std::vector<double> dp(T);
        for (std::size_t a = 0; a < A; ++a) {
            const auto& P = L.attention[a];
            for (std::size_t i = 0; i < T; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < T; ++j) {
                    double g = 0.0;
                    if (P(i, j) != 0.0 || trace.mask[j]) {
                        for (std::size_t k = 0; k < d; ++k) g += d_ctx(i, a * d + k) * L.v(j, a * d + k);
                    }
                    dp[j] = g;
                    dot += P(i, j) * g;
                    const double pij = P(i, j);
                    if (pij != 0.0) {
                        for (std::size_t k = 0; k < d; ++k) dv(j, a * d + k) += pij * d_ctx(i, a * d + k);
                    }
                }
                for (std::size_t j = 0; j < T; ++j) {
                    const double ds = P(i, j) * (dp[j] - dot) * scale;
                    if (ds == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) {
                        dq(i, a * d + k) += ds * L.k(j, a * d + k);
                        dk(j, a * d + k) += ds * L.q(i, a * d + k);
                    }
                }
            }
        }
        linalg::accumulate_at_b(L.input, dq, G.wq);
        linalg::accumulate_column_sums(dq, G.bq);
        linalg::accumulate_at_b(L.input, dk, G.wk);
        linalg::accumulate_column_sums(dk, G.bk);
        linalg::accumulate_at_b(L.input, dv, G.wv);
        linalg::accumulate_column_sums(dv, G.bv);

        dx = d_res1;
        add_into(dx, linalg::matmul_bt(dq, W.wq));
        add_into(dx, linalg::matmul_bt(dk, W.wk));
        add_into(dx, linalg::matmul_bt(dv, W.wv));
    }

    apply_scales(dx, trace.embed_drop);
    for (std::size_t t = 0; t < T; ++t) {
        auto e = grads.token_embedding.row(static_cast<std::size_t>(trace.ids[t]));
        auto p = grads.position_embedding.row(t);
        for (std::size_t j = 0; j < h; ++j) {
            e[j] += dx(t, j);
            p[j] += dx(t, j);
        }
    }
}

SentenceVector encode(const EncoderModel& model, const TokenSequence& seq) { return forward(model, seq).cls; }

SentenceVector dual_encode(const EncoderModel& a, const EncoderModel& b, const TokenSequence& seq) {
    if (!(a.vocab == b.vocab) || a.config.max_sequence_length != b.config.max_sequence_length) {
        throw Error(Errc::config_mismatch, "dual encoding needs a shared vocabulary and sequence length");
    }
    SentenceVector out = encode(a, seq);
    const SentenceVector second = encode(b, seq);
    out.insert(out.end(), second.begin(), second.end());
    return out;
}

nlohmann::json tensors_to_json(const EncoderWeights& weights) {
    nlohmann::json tensors = nlohmann::json::array();
    weights.for_each([&](const std::string& name, const Matrix& m) {
        tensors.push_back({{"name", name}, {"shape", {m.rows, m.cols}}, {"data", m.data}});
    });
    return tensors;
}

void tensors_from_json(const nlohmann::json& j, EncoderWeights& weights) {
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& t : j) by_name[t.at("name").get<std::string>()] = &t;
    weights.for_each([&](const std::string& name, Matrix& m) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw Error(Errc::checkpoint_format, "checkpoint lacks tensor " + name);
        const auto& t = *it->second;
        const auto shape = t.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != m.rows || shape[1] != m.cols) {
            throw Error(Errc::checkpoint_format, "tensor " + name + " has an unexpected shape");
        }
        auto data = t.at("data").get<std::vector<double>>();
        if (data.size() != m.size()) throw Error(Errc::checkpoint_format, "tensor " + name + " has a wrong size");
        m.data = std::move(data);
    });
}

nlohmann::json to_checkpoint(const EncoderModel& model) {
    return {{"format", "offlang.encoder"},
            {"version", kCheckpointVersion},
            {"config", model.config},
            {"vocabulary", model.vocab.tokens()},
            {"tensors", tensors_to_json(model.weights)}};
}

EncoderModel from_checkpoint(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw Error(Errc::checkpoint_format, "unsupported checkpoint version");
        }
        EncoderModel model;
        model.config = j.at("config").get<EncoderConfig>();
        model.config.validate();
        model.vocab = Vocabulary::from_tokens(j.at("vocabulary").get<std::vector<std::string>>());
        model.weights = EncoderWeights::zeros(model.config, model.vocab.size());
        tensors_from_json(j.at("tensors"), model.weights);
        if (!model.weights.all_finite()) throw Error(Errc::non_finite, "checkpoint holds non-finite parameters");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::checkpoint_format, std::string("malformed checkpoint: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const EncoderModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << to_checkpoint(model).dump() << '\n';
}

EncoderModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::checkpoint_format, path.string() + " is not valid JSON");
    return from_checkpoint(j);
}

}  // namespace offlang::encoder
