#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "offlang/corpus.hpp"

namespace offlang::weaklabel {

struct WeakLabelConfig {
    double hi_threshold = 0.8;
    double lo_threshold = 0.2;
    std::size_t per_class_count = 300000;
    std::uint64_t seed = 0;

    // Requires 0 <= lo < hi <= 1 and a positive per-class count.
    void validate() const;
};

/// OFF above `hi`, NOT below `lo`, nothing in between. Both bounds are strict.
std::optional<Label> weak_label(const ScoredExample& example, const WeakLabelConfig& config);

/// Samples exactly `per_class_count` OFF and NOT examples without replacement
/// and returns them in a seeded shuffled order. One generator drives the OFF
/// draw, then the NOT draw, then the final shuffle.
Corpus build_weak_corpus(const std::vector<ScoredExample>& scored, const WeakLabelConfig& config);

}  // namespace offlang::weaklabel
