#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace offlang {

enum class Label : std::uint8_t { off = 0, not_off = 1 };

inline constexpr std::size_t kNumLabels = 2;

std::string_view to_string(Label label);
// Case-insensitive; returns nullopt for anything but "off"/"not".
std::optional<Label> parse_label(std::string_view token);

inline constexpr std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }

enum class Language : std::uint8_t { en, da, tr, ar, el };
enum class Split : std::uint8_t { train, validation, test };

std::string_view to_string(Language language);
std::string_view to_string(Split split);
std::optional<Language> parse_language(std::string_view code);
std::optional<Split> parse_split(std::string_view name);

struct LabeledExample {
    std::string id;
    std::string text;
    Label label = Label::not_off;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct ScoredExample {
    std::string id;
    std::string text;
    double confidence = 0.0;
};

struct CorpusStats {
    std::size_t off_count = 0;
    std::size_t not_count = 0;
    std::size_t total = 0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Ordered examples for one language and split. Ids are unique; `add`
/// enforces that, so every Corpus in the program satisfies it.
class Corpus {
public:
    Corpus() = default;
    Corpus(Language language, Split split) : language_(language), split_(split) {}

    Language language() const noexcept { return language_; }
    Split split() const noexcept { return split_; }
    void set_split(Split split) noexcept { split_ = split; }

    const std::vector<LabeledExample>& examples() const noexcept { return examples_; }
    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }
    const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }

    // Throws Error(duplicate_id) if the id is already present.
    void add(LabeledExample example);
    bool contains(std::string_view id) const;

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.language_ == b.language_ && a.split_ == b.split_ && a.examples_ == b.examples_;
    }

private:
    Language language_ = Language::en;
    Split split_ = Split::train;
    std::vector<LabeledExample> examples_;
    std::unordered_set<std::string> ids_;
};

Corpus load_labeled_tsv(const std::filesystem::path& path, Language language = Language::en,
                        Split split = Split::train);
Corpus parse_labeled_tsv(std::istream& in, Language language = Language::en,
                         Split split = Split::train);

std::vector<ScoredExample> load_scored_tsv(const std::filesystem::path& path);
std::vector<ScoredExample> parse_scored_tsv(std::istream& in);

// Writes `id<TAB>text<TAB>label` rows with an "id" header line.
void write_labeled_tsv(std::ostream& out, const Corpus& corpus);
void save_labeled_tsv(const std::filesystem::path& path, const Corpus& corpus);
void write_scored_tsv(std::ostream& out, const std::vector<ScoredExample>& scored);

CorpusStats corpus_stats(const Corpus& corpus);

struct HoldoutSplit {
    Corpus train;
    Corpus validation;
};

/// Stratified holdout. Each class contributes round_half_up(fraction * n_class)
/// members to validation, chosen by a seeded shuffle; both halves keep the
/// original corpus order.
HoldoutSplit split_holdout(const Corpus& corpus, double holdout_fraction, std::uint64_t seed);

}  // namespace offlang
