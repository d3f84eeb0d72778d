#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace offlang::normalize {

enum class Step { user_url, emoji, hashtag, slang, numbers, whitespace };

std::string_view to_string(Step step);
std::optional<Step> parse_step(std::string_view name);

/// Unigram counts used to score hashtag splits. Words are stored lowercase.
class Lexicon {
public:
    Lexicon() = default;

    // Throws Error(invalid_argument) for a non-positive count.
    void add(std::string_view word, std::uint64_t count);
    std::uint64_t count(std::string_view word) const;
    std::uint64_t total() const noexcept { return total_; }
    bool empty() const noexcept { return counts_.empty(); }

    static Lexicon load(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Source token (an emoji sequence or a slang word) to replacement phrase.
class PhraseMap {
public:
    PhraseMap() = default;

    void add(std::string source, std::string replacement);
    const std::string* find(std::string_view source) const;
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t max_key_bytes() const noexcept { return max_key_bytes_; }
    const std::unordered_map<std::string, std::string>& entries() const noexcept { return entries_; }

    static PhraseMap load(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, std::string> entries_;
    std::size_t max_key_bytes_ = 0;
};

using EmojiMap = PhraseMap;

/// Slang table with the closure property: no replacement phrase contains a
/// key of the table. `validate_closure` throws when violated.
class SlangMap : public PhraseMap {
public:
    void validate_closure() const;
    static SlangMap load(const std::filesystem::path& path);
};

struct NormalizationConfig {
    std::vector<Step> steps = {Step::user_url, Step::emoji,   Step::hashtag,
                               Step::slang,    Step::numbers, Step::whitespace};
    EmojiMap emoji;
    SlangMap slang;
    Lexicon lexicon;

    bool enabled(Step step) const;
    // Rejects duplicate steps.
    void validate() const;

    static NormalizationConfig load(const std::filesystem::path& emoji_map_path,
                                    const std::filesystem::path& slang_map_path,
                                    const std::filesystem::path& lexicon_path);
};

// True for code points treated as emoji (pictographs, dingbats, modifiers,
// regional indicators, ZWJ and variation selectors).
bool is_emoji_codepoint(char32_t cp);

std::string map_emoji(std::string_view text, const EmojiMap& map);

inline constexpr std::size_t kMaxSegmentWordLength = 24;

/// Log-probability of one word under the unigram model: count/total inside
/// the lexicon, 1 / (total^2 * 10^len) outside it.
double word_log_prob(std::string_view word, const Lexicon& lexicon);

/// Best-scoring split of `tag` (no leading '#') into space-separated words.
/// The unsplit tag wins ties.
std::string segment_hashtag(std::string_view tag, const Lexicon& lexicon);

std::string normalize(std::string_view text, const NormalizationConfig& config);

}  // namespace offlang::normalize
