#include "offlang/weaklabel.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "offlang/error.hpp"

namespace offlang::weaklabel {

void WeakLabelConfig::validate() const {
    if (!(lo_threshold >= 0.0 && lo_threshold < hi_threshold && hi_threshold <= 1.0)) {
        throw Error(Errc::invalid_argument, "weak-label thresholds must satisfy 0 <= lo < hi <= 1");
    }
    if (per_class_count == 0) throw Error(Errc::invalid_argument, "per-class count must be positive");
}

std::optional<Label> weak_label(const ScoredExample& example, const WeakLabelConfig& config) {
    if (example.confidence > config.hi_threshold) return Label::off;
    if (example.confidence < config.lo_threshold) return Label::not_off;
    return std::nullopt;
}

Corpus build_weak_corpus(const std::vector<ScoredExample>& scored, const WeakLabelConfig& config) {
    config.validate();

    std::vector<std::size_t> pools[kNumLabels];
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (const auto label = weak_label(scored[i], config)) pools[label_index(*label)].push_back(i);
    }

    std::mt19937_64 rng(config.seed);
    std::vector<LabeledExample> picked;
    picked.reserve(2 * config.per_class_count);
    for (Label label : {Label::off, Label::not_off}) {
        auto& pool = pools[label_index(label)];
        if (pool.size() < config.per_class_count) {
            throw Error(Errc::insufficient_class_samples,
                        "InsufficientClassSamples(" + std::string(to_string(label)) + ", " +
                            std::to_string(pool.size()) + ", " + std::to_string(config.per_class_count) + ")");
        }
        // Partial Fisher-Yates: the first k slots become a uniform sample.
        for (std::size_t k = 0; k < config.per_class_count; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
            const auto& src = scored[pool[k]];
            picked.push_back({src.id, src.text, label});
        }
    }
    std::shuffle(picked.begin(), picked.end(), rng);

    Corpus corpus(Language::en, Split::train);
    for (auto& ex : picked) corpus.add(std::move(ex));
    return corpus;
}

}  // namespace offlang::weaklabel
