#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "offlang/corpus.hpp"
#include "offlang/encoder.hpp"
#include "offlang/tensor.hpp"

namespace offlang::train {

struct TrainConfig {
    std::size_t epochs = 4;
    std::size_t batch_size = 16;
    double learning_rate = 2e-5;
    std::uint64_t seed = 0;
    Language language = Language::en;
    bool freeze_encoders = false;

    /// Batch size and learning rate tuned per language for the full-size
    /// pretrained setting: en 8/2e-5, da 16/1e-5, ar 24/3e-5, el 32/2e-5,
    /// tr 16/2e-5, all for 4 epochs.
    static TrainConfig defaults_for(Language language);
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Linear layer mapping a sentence vector to (OFF, NOT) logits.
struct ClassifierHead {
    Matrix weight;  // input_dim x 2
    Matrix bias;    // 1 x 2

    static ClassifierHead initialize(std::size_t input_dim, std::mt19937_64& rng);
    std::size_t input_dim() const { return weight.rows; }
    std::array<double, 2> logits(std::span<const double> features) const;
};

std::array<double, 2> softmax(const std::array<double, 2>& logits);

struct LossGrad {
    double loss = 0.0;
    std::array<double, 2> grad{};
};

/// -log softmax(logits)[label] via log-sum-exp, and softmax - one_hot.
LossGrad cross_entropy_loss(const std::array<double, 2>& logits, Label label);

struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t t = 0;
};

/// Bias-corrected Adam update of every parameter; lazily sizes fresh state.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state,
               double learning_rate);

enum class Mode { single, dual };

/// One or two encoders feeding a classifier head. Dual mode concatenates the
/// CLS vectors of both encoders.
struct Classifier {
    Mode mode = Mode::single;
    std::vector<encoder::EncoderModel> encoders;
    ClassifierHead head;
    AdamState adam;

    encoder::SentenceVector features(const encoder::TokenSequence& seq) const;
    std::array<double, 2> probabilities(std::string_view text) const;
    Label predict(std::string_view text) const;
    std::vector<Label> predict(const Corpus& corpus) const;
};

struct TrainResult {
    Classifier classifier;
    std::vector<double> epoch_loss;
};

/// Fine-tunes the encoder and a fresh head on `corpus` (encoder frozen when
/// config.freeze_encoders).
TrainResult train_single(const Corpus& corpus, encoder::EncoderModel encoder, const TrainConfig& config);

/// Trains a 2h -> 2 head on the concatenated CLS vectors of two already
/// fine-tuned encoders, which stay frozen. `joint` updates both encoders
/// together with the head instead.
TrainResult train_dual(const Corpus& head_corpus, encoder::EncoderModel encoder_a, encoder::EncoderModel encoder_b,
                       const TrainConfig& config, bool joint = false);

inline constexpr double kDivergenceLoss = 1e3;

void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss);

nlohmann::json to_checkpoint(const Classifier& classifier);
Classifier classifier_from_checkpoint(const nlohmann::json& j);
void save_classifier(const std::filesystem::path& path, const Classifier& classifier);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace offlang::train
