#include "offlang/normalize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "offlang/error.hpp"
#include "offlang/text.hpp"

namespace offlang::normalize {

namespace {

constexpr std::string_view kStepNames[] = {"user_url", "emoji", "hashtag", "slang", "numbers", "whitespace"};

template <typename Fn>
void read_two_column_tsv(const std::filesystem::path& path, Fn&& on_row) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = text::split(line, '\t');
        if (fields.size() < 2) {
            throw RowError(Errc::malformed_row, line_no, "expected two tab-separated columns in " + path.string());
        }
        on_row(line_no, fields[0], fields[1]);
    }
}

bool is_space_at(std::string_view s, std::size_t i) { return i < s.size() && text::is_ascii_space(s[i]); }

bool is_word_char(char c) { return text::is_ascii_alnum(c) || c == '_'; }

void pad_before(std::string& out) {
    if (!out.empty() && !text::is_ascii_space(out.back())) out += ' ';
}

std::string replace_urls(std::string_view in) {
    std::string out;
    out.reserve(in.size() + 8);
    std::size_t i = 0;
    while (i < in.size()) {
        const auto rest = in.substr(i);
        const bool at_token_start = i == 0 || text::is_ascii_space(in[i - 1]);
        const bool url = (rest.size() >= 7 && text::iequals(rest.substr(0, 7), "http://")) ||
                         (rest.size() >= 8 && text::iequals(rest.substr(0, 8), "https://")) ||
                         (rest.size() >= 4 && text::iequals(rest.substr(0, 4), "www."));
        if (url) {
            std::size_t j = i;
            while (j < in.size() && !text::is_ascii_space(in[j])) ++j;
            pad_before(out);
            out += "http ";
            i = j;
            continue;
        }
        if (at_token_start && rest.substr(0, 3) == "URL" && (rest.size() == 3 || text::is_ascii_space(rest[3]))) {
            out += "http";
            i += 3;
            continue;
        }
        out += in[i++];
    }
    return out;
}

// Runs after URL rewriting so that "@userhttp://..." sees its final neighbour.
std::string replace_users(std::string_view in) {
    std::string out;
    out.reserve(in.size() + 8);
    std::size_t i = 0;
    while (i < in.size()) {
        const auto rest = in.substr(i);
        if (rest.size() >= 5 && text::iequals(rest.substr(0, 5), "@user") &&
            (rest.size() == 5 || !is_word_char(rest[5]))) {
            pad_before(out);
            out += "<user> ";
            i += 5;
            continue;
        }
        out += in[i++];
    }
    return out;
}

std::string segment_hashtags(std::string_view in, const Lexicon& lexicon) {
    std::string out;
    out.reserve(in.size() + 8);
    std::size_t i = 0;
    while (i < in.size()) {
        if (in[i] != '#') {
            out += in[i++];
            continue;
        }
        std::size_t j = i + 1;
        while (j < in.size() && text::is_ascii_alnum(in[j])) ++j;
        const bool glued_left = !out.empty() && !text::is_ascii_space(out.back());
        const bool glued_right = j < in.size() && !text::is_ascii_space(in[j]);
        if (j > i + 1) {
            if (glued_left) out += ' ';
            out += segment_hashtag(in.substr(i + 1, j - i - 1), lexicon);
            if (glued_right) out += ' ';
        } else if (glued_left && glued_right) {
            // A bare '#' is dropped but must not join its neighbours.
            out += ' ';
        }
        i = j;
    }
    return out;
}

std::string map_tokens(std::string_view in, const SlangMap& slang) {
    auto tokens = text::split_whitespace(in);
    for (auto& token : tokens) {
        if (const auto* replacement = slang.find(token)) token = *replacement;
    }
    return text::join(tokens, " ");
}

std::string drop_numbers(std::string_view in) {
    std::vector<std::string> kept;
    for (auto& token : text::split_whitespace(in)) {
        bool digits = true;
        for (char c : token) digits = digits && text::is_ascii_digit(c);
        if (!digits) kept.push_back(std::move(token));
    }
    return text::join(kept, " ");
}

std::string collapse_whitespace(std::string_view in) { return text::join(text::split_whitespace(in), " "); }

}  // namespace

std::string_view to_string(Step step) { return kStepNames[static_cast<std::size_t>(step)]; }

std::optional<Step> parse_step(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kStepNames); ++i) {
        if (name == kStepNames[i]) return static_cast<Step>(i);
    }
    return std::nullopt;
}

void Lexicon::add(std::string_view word, std::uint64_t count) {
    if (count == 0) throw Error(Errc::invalid_argument, "lexicon count must be positive");
    counts_[text::ascii_lower(word)] += count;
    total_ += count;
}

std::uint64_t Lexicon::count(std::string_view word) const {
    const auto it = counts_.find(std::string(word));
    return it == counts_.end() ? 0 : it->second;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    Lexicon lexicon;
    read_two_column_tsv(path, [&](std::size_t line_no, std::string_view word, std::string_view raw) {
        raw = text::trim(raw);
        std::uint64_t count = 0;
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), count);
        if (ec != std::errc{} || ptr != raw.data() + raw.size() || count == 0) {
            throw RowError(Errc::malformed_row, line_no, "lexicon count must be a positive integer");
        }
        lexicon.add(text::trim(word), count);
    });
    return lexicon;
}

void PhraseMap::add(std::string source, std::string replacement) {
    if (source.empty()) throw Error(Errc::invalid_argument, "empty phrase-map key");
    max_key_bytes_ = std::max(max_key_bytes_, source.size());
    entries_[std::move(source)] = std::move(replacement);
}

const std::string* PhraseMap::find(std::string_view source) const {
    const auto it = entries_.find(std::string(source));
    return it == entries_.end() ? nullptr : &it->second;
}

PhraseMap PhraseMap::load(const std::filesystem::path& path) {
    PhraseMap map;
    read_two_column_tsv(path, [&](std::size_t, std::string_view source, std::string_view replacement) {
        map.add(std::string(text::trim(source)), text::ascii_lower(text::trim(replacement)));
    });
    return map;
}

void SlangMap::validate_closure() const {
    for (const auto& [key, phrase] : entries()) {
        for (const auto& word : text::split_whitespace(phrase)) {
            if (find(word)) {
                throw Error(Errc::invalid_argument,
                            "slang replacement for '" + key + "' contains key '" + word + "'");
            }
        }
    }
}

SlangMap SlangMap::load(const std::filesystem::path& path) {
    SlangMap map;
    read_two_column_tsv(path, [&](std::size_t, std::string_view source, std::string_view replacement) {
        map.add(text::ascii_lower(text::trim(source)), text::ascii_lower(text::trim(replacement)));
    });
    map.validate_closure();
    return map;
}

bool NormalizationConfig::enabled(Step step) const {
    for (Step s : steps) {
        if (s == step) return true;
    }
    return false;
}

void NormalizationConfig::validate() const {
    bool seen[std::size(kStepNames)] = {};
    for (Step s : steps) {
        auto& flag = seen[static_cast<std::size_t>(s)];
        if (flag) throw Error(Errc::invalid_argument, "normalization step listed twice: " + std::string(to_string(s)));
        flag = true;
    }
    slang.validate_closure();
}

NormalizationConfig NormalizationConfig::load(const std::filesystem::path& emoji_map_path,
                                              const std::filesystem::path& slang_map_path,
                                              const std::filesystem::path& lexicon_path) {
    NormalizationConfig config;
    config.emoji = EmojiMap::load(emoji_map_path);
    config.slang = SlangMap::load(slang_map_path);
    config.lexicon = Lexicon::load(lexicon_path);
    return config;
}

bool is_emoji_codepoint(char32_t cp) {
    return (cp >= 0x1F000 && cp <= 0x1FAFF)   // pictographs, emoticons, transport, alchemical, flags
           || (cp >= 0x2600 && cp <= 0x27BF)  // misc symbols and dingbats
           || (cp >= 0x2300 && cp <= 0x23FF)  // misc technical (watch, hourglass)
           || (cp >= 0x2B00 && cp <= 0x2BFF)  // arrows and stars
           || (cp >= 0xFE00 && cp <= 0xFE0F)  // variation selectors
           || cp == 0x200D                    // zero width joiner
           || cp == 0x20E3                    // combining keycap
           || (cp >= 0xE0020 && cp <= 0xE007F);  // tag sequences
}

std::string map_emoji(std::string_view in, const EmojiMap& map) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        const auto cp = text::decode_utf8(in, i);
        if (!cp.valid || !is_emoji_codepoint(cp.value)) {
            out.append(in.substr(i, cp.length));
            i += cp.length;
            continue;
        }

        // Maximal run of emoji code points, replaced by the longest mapped
        // keys found inside it; unmapped code points vanish.
        std::vector<std::string> phrases;
        while (i < in.size()) {
            const auto head = text::decode_utf8(in, i);
            if (!head.valid || !is_emoji_codepoint(head.value)) break;
            std::size_t matched = 0;
            const std::size_t limit = std::min(map.max_key_bytes(), in.size() - i);
            for (std::size_t len = limit; len >= head.length && len > 0; --len) {
                if (const auto* phrase = map.find(in.substr(i, len))) {
                    phrases.push_back(*phrase);
                    matched = len;
                    break;
                }
            }
            i += matched ? matched : head.length;
        }

        const bool space_before = out.empty() || text::is_ascii_space(out.back());
        const bool space_after = i >= in.size() || is_space_at(in, i);
        std::string replacement = text::join(phrases, " ");
        if (replacement.empty()) {
            if (!space_before && !space_after) {
                out += ' ';
            } else if (space_before) {
                while (is_space_at(in, i)) ++i;
            }
            continue;
        }
        if (!space_before) out += ' ';
        out += replacement;
        if (!space_after) out += ' ';
    }
    return out;
}

double word_log_prob(std::string_view word, const Lexicon& lexicon) {
    const double total = static_cast<double>(std::max<std::uint64_t>(lexicon.total(), 1));
    if (const auto count = lexicon.count(word); count > 0) {
        return std::log(static_cast<double>(count) / total);
    }
    // Unseen words: floor 1/total, divided by total * 10^len.
    return -2.0 * std::log(total) - static_cast<double>(word.size()) * std::log(10.0);
}

std::string segment_hashtag(std::string_view raw_tag, const Lexicon& lexicon) {
    const std::string tag = text::ascii_lower(raw_tag);
    const std::size_t n = tag.size();
    if (n == 0) return tag;

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> best(n + 1, kNegInf);
    std::vector<std::size_t> back(n + 1, 0);
    best[0] = 0.0;
    for (std::size_t end = 1; end <= n; ++end) {
        const std::size_t first = end > kMaxSegmentWordLength ? end - kMaxSegmentWordLength : 0;
        for (std::size_t start = first; start < end; ++start) {
            if (best[start] == kNegInf) continue;
            const double score = best[start] + word_log_prob(std::string_view(tag).substr(start, end - start), lexicon);
            if (score > best[end]) {
                best[end] = score;
                back[end] = start;
            }
        }
    }

    const double unsplit = word_log_prob(tag, lexicon);
    if (!(best[n] > unsplit)) return tag;

    std::vector<std::string> words;
    for (std::size_t end = n; end > 0; end = back[end]) words.push_back(tag.substr(back[end], end - back[end]));
    return text::join({words.rbegin(), words.rend()}, " ");
}

std::string normalize(std::string_view input, const NormalizationConfig& config) {
    std::string s = config.enabled(Step::user_url) ? replace_users(replace_urls(input)) : std::string(input);
    s = text::ascii_lower(s);
    if (config.enabled(Step::emoji)) s = map_emoji(s, config.emoji);
    if (config.enabled(Step::hashtag)) s = segment_hashtags(s, config.lexicon);
    if (config.enabled(Step::slang)) s = map_tokens(s, config.slang);
    if (config.enabled(Step::numbers)) s = drop_numbers(s);
    if (config.enabled(Step::whitespace)) s = collapse_whitespace(s);
    return text::ascii_lower(s);
}

}  // namespace offlang::normalize
