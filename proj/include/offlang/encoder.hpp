#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "offlang/corpus.hpp"
#include "offlang/tensor.hpp"

namespace offlang::encoder {

using TokenId = std::int32_t;

/// Token <-> id table. Ids 0..4 are always [PAD], [UNK], [CLS], [SEP], <user>.
class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr TokenId kCls = 2;
    static constexpr TokenId kSep = 3;
    static constexpr TokenId kUser = 4;
    static constexpr std::size_t kReserved = 5;

    Vocabulary();

    /// Reserved tokens, then corpus tokens by descending frequency with ties
    /// broken lexicographically, truncated to `cap` entries in total.
    static Vocabulary build(const std::vector<std::string>& texts, std::size_t cap);
    static Vocabulary build(const Corpus& corpus, std::size_t cap);
    // Rebuilds from an id-ordered token list; the reserved prefix must match.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    TokenId id(std::string_view token) const;  // kUnk when absent
    const std::string& token(TokenId id) const;
    bool contains(std::string_view token) const;
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    void write_tsv(std::ostream& out) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    void push(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Lowercases ASCII, splits on whitespace, emits each ASCII punctuation
/// character as its own token and keeps reserved markers ([SEP], <user>, ...)
/// atomic.
std::vector<std::string> tokenize(std::string_view text);

struct TokenSequence {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> mask;

    // Number of leading unmasked positions (padding is always on the right).
    std::size_t real_length() const;
};

/// [CLS] tokens... [SEP], right-padded to max_len. Truncation keeps the
/// leading tokens and the final [SEP].
TokenSequence tokenize_encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

struct EncoderConfig {
    std::size_t hidden_size = 64;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ff_size = 256;
    std::size_t max_sequence_length = 128;
    std::size_t vocab_cap = 8000;
    double dropout = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t head_dim() const { return hidden_size / heads; }

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

struct LayerWeights {
    Matrix wq, bq, wk, bk, wv, bv, wo, bo;
    Matrix ln1_gain, ln1_bias;
    Matrix w1, b1, w2, b2;
    Matrix ln2_gain, ln2_bias;
};

/// Every trainable tensor of the encoder. Also used, zero-filled, for
/// gradients and optimizer moments.
struct EncoderWeights {
    Matrix token_embedding;     // |V| x h
    Matrix position_embedding;  // max_len x h
    std::vector<LayerWeights> layers;

    static EncoderWeights zeros(const EncoderConfig& config, std::size_t vocab_size);
    EncoderWeights zeros_like() const;

    template <typename Fn>
    void for_each(Fn&& fn) {
        fn(std::string("token_embedding"), token_embedding);
        fn(std::string("position_embedding"), position_embedding);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layers." + std::to_string(l) + ".";
            auto& L = layers[l];
            fn(p + "wq", L.wq);
            fn(p + "bq", L.bq);
            fn(p + "wk", L.wk);
            fn(p + "bk", L.bk);
            fn(p + "wv", L.wv);
            fn(p + "bv", L.bv);
            fn(p + "wo", L.wo);
            fn(p + "bo", L.bo);
            fn(p + "ln1_gain", L.ln1_gain);
            fn(p + "ln1_bias", L.ln1_bias);
            fn(p + "w1", L.w1);
            fn(p + "b1", L.b1);
            fn(p + "w2", L.w2);
            fn(p + "b2", L.b2);
            fn(p + "ln2_gain", L.ln2_gain);
            fn(p + "ln2_bias", L.ln2_bias);
        }
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        const_cast<EncoderWeights*>(this)->for_each(
            [&](const std::string& name, Matrix& m) { fn(name, static_cast<const Matrix&>(m)); });
    }

    bool all_finite() const;
    friend bool operator==(const EncoderWeights&, const EncoderWeights&);
};

struct EncoderModel {
    EncoderConfig config;
    Vocabulary vocab;
    EncoderWeights weights;

    /// Truncated normal (sigma 0.02, cut at 2 sigma) for matrices and
    /// embeddings, zero biases, unit layer-norm gains; seeded by config.seed.
    static EncoderModel initialize(const EncoderConfig& config, Vocabulary vocab);

    std::size_t hidden_size() const { return config.hidden_size; }
};

using SentenceVector = std::vector<double>;

struct ForwardOptions {
    bool training = false;            // applies dropout when true
    std::mt19937_64* rng = nullptr;   // dropout source, required when training
    bool full_length = false;         // also compute padded query rows
};

/// Activations kept for backpropagation and inspection.
struct LayerTrace {
    Matrix input;                     // T x h
    Matrix q, k, v;                   // T x h
    std::vector<Matrix> attention;    // per head, T x T (rows sum to 1 over unmasked keys)
    Matrix context;                   // T x h
    std::vector<double> attn_drop;    // T*h dropout scales (empty when inactive)
    Matrix ln1_xhat;
    std::vector<double> ln1_inv_std;
    Matrix y1;                        // output of first layer norm
    Matrix ff_pre;                    // T x ff, before GELU
    Matrix ff_act;                    // T x ff, after GELU
    std::vector<double> ff_drop;
    Matrix ln2_xhat;
    std::vector<double> ln2_inv_std;
    Matrix output;                    // T x h
};

struct ForwardTrace {
    std::vector<TokenId> ids;         // the T computed positions
    std::vector<std::uint8_t> mask;
    std::vector<double> embed_drop;
    std::vector<LayerTrace> layers;
    SentenceVector cls;
};

ForwardTrace forward(const EncoderModel& model, const TokenSequence& seq, const ForwardOptions& options = {});

/// Accumulates d(loss)/d(weights) into `grads` given d(loss)/d(cls).
void backward(const EncoderModel& model, const ForwardTrace& trace, std::span<const double> d_cls,
              EncoderWeights& grads);

/// Inference-mode CLS vector (no dropout).
SentenceVector encode(const EncoderModel& model, const TokenSequence& seq);

/// encode(a) followed by encode(b); both models must share vocabulary and
/// sequence length.
SentenceVector dual_encode(const EncoderModel& a, const EncoderModel& b, const TokenSequence& seq);

double gelu(double x);
double gelu_derivative(double x);

inline constexpr double kLayerNormEps = 1e-12;

// Checkpoint container: {"format","version","config","vocabulary","tensors"}.
inline constexpr int kCheckpointVersion = 1;
nlohmann::json tensors_to_json(const EncoderWeights& weights);
void tensors_from_json(const nlohmann::json& j, EncoderWeights& weights);
nlohmann::json to_checkpoint(const EncoderModel& model);
EncoderModel from_checkpoint(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const EncoderModel& model);
EncoderModel load_model(const std::filesystem::path& path);

}  // namespace offlang::encoder
