#include "offlang/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "offlang/error.hpp"
#include "offlang/text.hpp"

namespace offlang {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::io: return "Io";
        case Errc::malformed_row: return "MalformedRow";
        case Errc::unknown_label: return "UnknownLabel";
        case Errc::duplicate_id: return "DuplicateId";
        case Errc::out_of_range_confidence: return "OutOfRangeConfidence";
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::empty_corpus: return "EmptyCorpus";
        case Errc::insufficient_class_samples: return "InsufficientClassSamples";
        case Errc::provider_unavailable: return "ProviderUnavailable";
        case Errc::unsupported_pair: return "UnsupportedPair";
        case Errc::empty_translation: return "EmptyTranslation";
        case Errc::invalid_pivots: return "InvalidPivots";
        case Errc::id_out_of_range: return "IdOutOfRange";
        case Errc::config_mismatch: return "ConfigMismatch";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::non_finite: return "NonFinite";
        case Errc::divergence: return "Divergence";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::arity_mismatch: return "ArityMismatch";
        case Errc::all_cells_diverged: return "AllCellsDiverged";
        case Errc::checkpoint_format: return "CheckpointFormat";
        case Errc::config: return "ConfigError";
    }
    return "Unknown";
}

std::string_view to_string(Label label) { return label == Label::off ? "OFF" : "NOT"; }

std::optional<Label> parse_label(std::string_view token) {
    if (text::iequals(token, "off")) return Label::off;
    if (text::iequals(token, "not")) return Label::not_off;
    return std::nullopt;
}

namespace {

constexpr std::string_view kLanguageCodes[] = {"en", "da", "tr", "ar", "el"};
constexpr std::string_view kSplitNames[] = {"train", "validation", "test"};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return in;
}

// Reads one LF-terminated line and strips a trailing CR.
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

std::string_view to_string(Language language) {
    return kLanguageCodes[static_cast<std::size_t>(language)];
}

std::string_view to_string(Split split) { return kSplitNames[static_cast<std::size_t>(split)]; }

std::optional<Language> parse_language(std::string_view code) {
    for (std::size_t i = 0; i < std::size(kLanguageCodes); ++i) {
        if (text::iequals(code, kLanguageCodes[i])) return static_cast<Language>(i);
    }
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kSplitNames); ++i) {
        if (text::iequals(name, kSplitNames[i])) return static_cast<Split>(i);
    }
    return std::nullopt;
}

void Corpus::add(LabeledExample example) {
    if (!ids_.insert(example.id).second) {
        throw Error(Errc::duplicate_id, "duplicate id '" + example.id + "'");
    }
    examples_.push_back(std::move(example));
}

bool Corpus::contains(std::string_view id) const { return ids_.count(std::string(id)) != 0; }

Corpus parse_labeled_tsv(std::istream& in, Language language, Split split) {
    Corpus corpus(language, split);
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = text::split(line, '\t');
        if (line_no == 1 && fields.front() == "id") continue;
        if (fields.size() < 3) {
            throw RowError(Errc::malformed_row, line_no,
                           "expected id, text and label fields, got " + std::to_string(fields.size()));
        }
        const auto label = parse_label(text::trim(fields[2]));
        if (!label) {
            throw RowError(Errc::unknown_label, line_no, "unknown label '" + std::string(fields[2]) + "'");
        }
        const auto body = text::trim(fields[1]);
        if (body.empty()) throw RowError(Errc::malformed_row, line_no, "empty text");
        const auto id = text::trim(fields[0]);
        if (id.empty()) throw RowError(Errc::malformed_row, line_no, "empty id");
        if (corpus.contains(id)) {
            throw RowError(Errc::duplicate_id, line_no, "duplicate id '" + std::string(id) + "'");
        }
        corpus.add({std::string(id), std::string(body), *label});
    }
    return corpus;
}

Corpus load_labeled_tsv(const std::filesystem::path& path, Language language, Split split) {
    auto in = open_input(path);
    return parse_labeled_tsv(in, language, split);
}

std::vector<ScoredExample> parse_scored_tsv(std::istream& in) {
    std::vector<ScoredExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = text::split(line, '\t');
        if (line_no == 1 && fields.front() == "id") continue;
        if (fields.size() < 3) {
            throw RowError(Errc::malformed_row, line_no,
                           "expected id, text and confidence fields, got " + std::to_string(fields.size()));
        }
        const auto raw = text::trim(fields[2]);
        double confidence = 0.0;
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), confidence);
        if (ec != std::errc{} || ptr != raw.data() + raw.size() || !std::isfinite(confidence)) {
            throw RowError(Errc::malformed_row, line_no, "confidence '" + std::string(raw) + "' is not a number");
        }
        if (confidence < 0.0 || confidence > 1.0) {
            throw RowError(Errc::out_of_range_confidence, line_no,
                           "confidence " + std::string(raw) + " outside [0,1]");
        }
        const auto body = text::trim(fields[1]);
        if (body.empty()) throw RowError(Errc::malformed_row, line_no, "empty text");
        out.push_back({std::string(text::trim(fields[0])), std::string(body), confidence});
    }
    return out;
}

std::vector<ScoredExample> load_scored_tsv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_scored_tsv(in);
}

void write_labeled_tsv(std::ostream& out, const Corpus& corpus) {
    out << "id\ttext\tlabel\n";
    for (const auto& ex : corpus.examples()) {
        out << ex.id << '\t' << ex.text << '\t' << to_string(ex.label) << '\n';
    }
}

void save_labeled_tsv(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    write_labeled_tsv(out, corpus);
    if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

void write_scored_tsv(std::ostream& out, const std::vector<ScoredExample>& scored) {
    out << "id\ttext\tconfidence\n";
    char buf[32];
    for (const auto& ex : scored) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ex.confidence);
        out << ex.id << '\t' << ex.text << '\t' << std::string_view(buf, ptr - buf) << '\n';
    }
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    for (const auto& ex : corpus.examples()) {
        if (ex.label == Label::off) {
            ++stats.off_count;
        } else {
            ++stats.not_count;
        }
    }
    stats.total = corpus.size();
    return stats;
}

HoldoutSplit split_holdout(const Corpus& corpus, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw Error(Errc::invalid_argument, "holdout fraction must lie in (0,1)");
    }
    if (corpus.empty()) throw Error(Errc::empty_corpus, "cannot split an empty corpus");

    std::mt19937_64 rng(seed);
    std::vector<bool> held_out(corpus.size(), false);
    for (Label label : {Label::off, Label::not_off}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (corpus[i].label == label) members.push_back(i);
        }
        // Round half up; the small slack absorbs products like 0.2 * 60.
        const auto take = static_cast<std::size_t>(
            std::floor(holdout_fraction * static_cast<double>(members.size()) + 0.5 + 1e-9));
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t k = 0; k < take && k < members.size(); ++k) held_out[members[k]] = true;
    }

    HoldoutSplit out{Corpus(corpus.language(), Split::train), Corpus(corpus.language(), Split::validation)};
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (held_out[i] ? out.validation : out.train).add(corpus[i]);
    }
    return out;
}

}  // namespace offlang
