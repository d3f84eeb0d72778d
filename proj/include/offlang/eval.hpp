#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "offlang/augment.hpp"
#include "offlang/corpus.hpp"
#include "offlang/encoder.hpp"
#include "offlang/train.hpp"

namespace offlang::eval {

/// counts[predicted][gold], indexed by label_index().
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumLabels>, kNumLabels> counts{};
    std::size_t total = 0;

    std::size_t at(Label predicted, Label gold) const { return counts[label_index(predicted)][label_index(gold)]; }
    bool is_diagonal() const { return counts[0][1] == 0 && counts[1][0] == 0; }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    std::string system;
    std::string language;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::array<ClassMetrics, kNumLabels> per_class{};
    ConfusionMatrix confusion;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    std::size_t head_input_dim = 0;  // 0 when not produced by a classifier

    const ClassMetrics& metrics(Label label) const { return per_class[label_index(label)]; }
};

/// Per-class precision/recall/F1 with 0 for every empty denominator, their
/// unweighted mean as macro-F1, and accuracy.
EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> gold);

std::vector<Label> gold_labels(const Corpus& corpus);

/// Majority class of the training statistics; a tie resolves to NOT.
Label majority_label(const CorpusStats& train_stats);
EvalReport majority_baseline(const CorpusStats& train_stats, std::span<const Label> gold);

// Metrics are rounded to four decimals; keys keep a fixed order.
nlohmann::ordered_json to_json(const EvalReport& report);
double round4(double x);
/// Inverse of to_json up to the four-decimal rounding.
EvalReport report_from_json(const nlohmann::json& j);

/// Model settings shared by every arm of an experiment.
struct ExperimentConfig {
    encoder::EncoderConfig encoder;
    train::TrainConfig train;
    // Head-only training on frozen encoders (English arms); defaults to `train`.
    std::optional<train::TrainConfig> head;

    const train::TrainConfig& head_config() const { return head ? *head : train; }
};

/// Fresh encoder over a vocabulary built from `train_corpus`.
encoder::EncoderModel fresh_encoder(const Corpus& train_corpus, const encoder::EncoderConfig& config);

struct GridSpec {
    std::vector<double> learning_rates;
    std::vector<std::size_t> batch_sizes;
};

struct GridCell {
    train::TrainConfig config;
    std::optional<EvalReport> report;
    std::string error;  // set when the cell diverged
};

struct GridSearchResult {
    train::TrainConfig best;
    std::size_t best_index = 0;
    std::vector<GridCell> cells;  // learning-rate major, batch-size minor
};

/// One training run per (learning rate, batch size) cell from a shared
/// initial encoder and seed; the highest validation macro-F1 wins and the
/// earliest cell wins ties. Diverged cells are recorded and skipped.
GridSearchResult grid_search(const GridSpec& grid, const Corpus& train_corpus, const Corpus& validation,
                             const encoder::EncoderConfig& encoder_config, const train::TrainConfig& base_config);

inline constexpr const char* kWithoutAugmentation = "-Augmentation";
inline constexpr const char* kWithAugmentation = "+Augmentation";

/// Trains and evaluates twice on the same validation split: once on the
/// original training split, once on its augmented version. Validation text is
/// never augmented. Returns {-Augmentation, +Augmentation}.
std::vector<EvalReport> ablation_augmentation(const Corpus& train_corpus, const Corpus& validation,
                                              const augment::PivotSet& pivots,
                                              augment::TranslationProvider& provider,
                                              const ExperimentConfig& config,
                                              const augment::AugmentOptions& options = {});

inline constexpr const char* kEncoderAOnly = "encoder-a-only";
inline constexpr const char* kEncoderBOnly = "encoder-b-only";
inline constexpr const char* kDualEncoder = "dual";

/// Fine-tunes encoder A on `corpus_a` and B on `corpus_b`, then trains three
/// heads on `corpus_a` (A alone, B alone, both concatenated) and evaluates
/// each on `test`. Returns {A-only, B-only, dual}.
std::vector<EvalReport> ablation_english(const Corpus& corpus_a, const Corpus& corpus_b, const Corpus& test,
                                         const ExperimentConfig& config);

}  // namespace offlang::eval
