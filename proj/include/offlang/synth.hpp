#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "offlang/augment.hpp"
#include "offlang/corpus.hpp"

// Seeded generators for the offline corpora used by tests, the acceptance
// suite and the bundled mini-corpora. Every generator is a pure function of
// its arguments.
namespace offlang::synth {

/// Class counts of the shared-task datasets (train and test splits only).
CorpusStats table1_stats(Language language, Split split);

/// Placeholder sentences carrying exactly the table1_stats class counts,
/// in a seeded order.
Corpus table1_corpus(Language language, Split split, std::uint64_t seed);

/// Linearly separable task: OFF sentences use only tokens "o0".."o19", NOT
/// sentences only "n0".."n19"; 4-9 tokens each, classes balanced.
Corpus separable_corpus(std::size_t n, std::uint64_t seed, Language language = Language::en);

/// Copy with exactly round(fraction * n) labels flipped, chosen by seed.
Corpus with_label_noise(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Cue-word task whose source sentences are hard to separate from little data.
/// Each sentence holds filler words shared by both classes plus one cue word;
/// 40 cue words per class, each seen only a handful of times. The translation
/// table maps a sentence word-by-word into a pivot vocabulary and renders
/// every cue of a class as that class's single pivot concept word, so the
/// translation carries the disambiguating token.
struct DisambiguationTask {
    Corpus train;
    Corpus validation;
    augment::FileProvider translations;
    augment::PivotSet pivots;
};

DisambiguationTask disambiguation_task(std::uint64_t seed, std::size_t n_train = 160, std::size_t n_validation = 200);

/// Scored tweets with confidences spread over [0,1], including exact 0.8 and
/// 0.2 boundary values.
std::vector<ScoredExample> scored_corpus(std::size_t n, std::uint64_t seed);

/// About 200 short synthetic tweets for one language and split, with
/// placeholders, emoji, hashtags and slang mixed into the English side.
Corpus mini_corpus(Language language, Split split, std::uint64_t seed);

}  // namespace offlang::synth
