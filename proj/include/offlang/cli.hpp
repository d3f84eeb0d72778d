#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "offlang/augment.hpp"
#include "offlang/corpus.hpp"
#include "offlang/encoder.hpp"
#include "offlang/eval.hpp"
#include "offlang/normalize.hpp"
#include "offlang/train.hpp"
#include "offlang/weaklabel.hpp"

namespace offlang::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

inline constexpr const char* kVersion = "0.1.0";

struct PathSettings {
    std::filesystem::path train;  // --input
    std::filesystem::path validation;
    std::filesystem::path test;
    std::filesystem::path scored;
    std::filesystem::path weak;
    std::filesystem::path model;
    std::filesystem::path emoji_map;
    std::filesystem::path slang_map;
    std::filesystem::path lexicon;
    std::filesystem::path translations;
    std::filesystem::path cache;
};

struct NormalizeSettings {
    std::optional<bool> enabled;  // unset: English only
    std::vector<normalize::Step> steps = normalize::NormalizationConfig{}.steps;
};

struct AugmentSettings {
    std::optional<std::vector<std::string>> pivots;  // unset: per-language defaults
    std::string provider = "mock";  // mock | identity | file | http
    std::string endpoint;
    std::int64_t timeout_ms = 10000;
    augment::ErrorPolicy policy = augment::ErrorPolicy::skip_on_error;
    std::size_t max_in_flight = 4;
    std::size_t max_attempts = 4;
    std::int64_t base_backoff_ms = 200;
};

/// Everything one run needs. Loaded from a JSON file, then overridden by
/// flags; the API key only ever comes from OFFLANG_API_KEY.
struct PipelineConfig {
    Language language = Language::en;
    std::uint64_t seed = 13;
    std::filesystem::path out_dir = "out";
    PathSettings paths;
    NormalizeSettings normalize;
    weaklabel::WeakLabelConfig weaklabel;
    AugmentSettings augment;
    encoder::EncoderConfig encoder;
    train::TrainConfig train;
    std::optional<train::TrainConfig> head;
    eval::GridSpec grid{{1e-3, 3e-3}, {8, 16}};
    double holdout_fraction = 0.2;
    std::string api_key;

    bool normalization_enabled() const { return normalize.enabled.value_or(language == Language::en); }

    /// Settings that determine results: no paths, no output directory, no
    /// credentials. Feeds the config fingerprint.
    nlohmann::json settings_json() const;
    std::string fingerprint() const;
};

/// Parses the config tree; `base_dir` resolves relative paths. Throws
/// Error(Errc::config) on unknown keys or ill-typed values.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Runs one subcommand; args exclude the program name. Never throws.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class Layout { table2, table3, table4 };
Layout parse_layout(std::string_view name);

/// Report table as TSV with four-decimal values.
///  table2: one row per system, one macro-F1 column per language; the
///          reports must fill the system x language grid exactly once.
///  table3: three reports in ablation_english order (A-only, B-only, dual),
///          printed as rows -OLID (B-only), -Weak (A-only), Full.
///  table4: pairs of (-Augmentation, +Augmentation) reports, one pair per
///          language; Macro-F1 and Accuracy columns per language.
/// Throws Error(Errc::arity_mismatch) when the count does not fit.
std::string emit_report_table(std::span<const eval::EvalReport> reports, Layout layout);

std::string_view language_name(Language language);

}  // namespace offlang::cli
