#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "offlang/corpus.hpp"

namespace offlang::augment {

/// Rendered between the original sentence and its translation. The tokenizer
/// maps the bracketed marker onto the encoder's separator id.
inline constexpr std::string_view kSeparator = " [SEP] ";

class PivotSet {
public:
    PivotSet() = default;
    explicit PivotSet(std::vector<std::string> pivots) : pivots_(std::move(pivots)) {}

    /// en, fr, de; for an English source the set becomes fr, de, es.
    static PivotSet defaults_for(Language source);
    static PivotSet parse(std::string_view comma_separated);

    // Non-empty, no duplicates, no pivot equal to the source language.
    void validate(Language source) const;

    const std::vector<std::string>& codes() const noexcept { return pivots_; }
    std::size_t size() const noexcept { return pivots_.size(); }

private:
    std::vector<std::string> pivots_;
};

struct AugmentedExample {
    std::string id;
    std::string original_text;
    std::string translated_text;
    std::string pivot;
    Label label = Label::not_off;
    std::string rendered_text;
};

std::string render_pair(std::string_view original, std::string_view translation);

/// Anything that can translate a sentence between two language codes.
/// Implementations must be safe to call from several threads at once.
class TranslationProvider {
public:
    virtual ~TranslationProvider() = default;

    virtual std::string translate(const std::string& text, const std::string& source,
                                  const std::string& target) = 0;
    virtual bool supports(const std::string& source, const std::string& target) const = 0;
    virtual std::string name() const = 0;
};

/// Offline provider: returns `target⟦text⟧`. Targets listed in `failing`
/// raise ProviderUnavailable, which tests use to exercise error policies.
class MockProvider : public TranslationProvider {
public:
    MockProvider() = default;
    explicit MockProvider(std::set<std::string> failing) : failing_(std::move(failing)) {}

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;
    bool supports(const std::string& source, const std::string& target) const override;
    std::string name() const override { return "mock"; }

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::set<std::string> failing_;
    std::atomic<std::size_t> calls_{0};
};

/// Returns the input unchanged.
class IdentityProvider : public TranslationProvider {
public:
    std::string translate(const std::string& text, const std::string&, const std::string&) override {
        return text;
    }
    bool supports(const std::string& source, const std::string& target) const override { return source != target; }
    std::string name() const override { return "identity"; }
};

/// Pre-computed translations from a TSV of
/// `source_text<TAB>source<TAB>target<TAB>translation`.
class FileProvider : public TranslationProvider {
public:
    FileProvider() = default;
    static FileProvider load(const std::filesystem::path& path);

    void add(std::string text, std::string source, std::string target, std::string translation);

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;
    bool supports(const std::string& source, const std::string& target) const override;
    std::string name() const override { return "file"; }

private:
    std::map<std::tuple<std::string, std::string, std::string>, std::string> table_;
    std::set<std::pair<std::string, std::string>> pairs_;
};

/// Remote service speaking `POST {"q","source","target"}` and answering
/// `{"translation": ...}`. 5xx, 429 and transport failures are retryable.
class HttpProvider : public TranslationProvider {
public:
    struct Options {
        std::string endpoint;  // http://host[:port]/path
        std::string api_key;   // sent as a bearer token when non-empty
        std::chrono::milliseconds timeout{10000};
    };

    explicit HttpProvider(Options options);

    std::string translate(const std::string& text, const std::string& source,
                          const std::string& target) override;
    bool supports(const std::string& source, const std::string& target) const override { return source != target; }
    std::string name() const override { return "http"; }

private:
    Options options_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

/// (text, source, target) -> translation, optionally persisted as an
/// append-only TSV journal that is replayed on construction.
class TranslationCache {
public:
    TranslationCache() = default;
    explicit TranslationCache(std::filesystem::path journal);

    std::optional<std::string> lookup(const std::string& text, const std::string& source,
                                      const std::string& target) const;
    void store(const std::string& text, const std::string& source, const std::string& target,
               const std::string& translation);
    std::size_t size() const;

private:
    using Key = std::tuple<std::string, std::string, std::string>;

    mutable std::mutex mutex_;
    std::map<Key, std::string> entries_;
    std::optional<std::filesystem::path> journal_;
};

struct RetryPolicy {
    std::size_t max_attempts = 4;
    std::chrono::milliseconds base_backoff{200};
};

/// Consults the cache, then the provider (retrying ProviderUnavailable with
/// exponential backoff), then populates the cache. Empty results are errors.
std::string translate(TranslationProvider& provider, TranslationCache* cache, const std::string& text,
                      const std::string& source, const std::string& target, const RetryPolicy& retry = {});

enum class ErrorPolicy { fail_fast, skip_on_error };

struct AugmentOptions {
    ErrorPolicy policy = ErrorPolicy::skip_on_error;
    std::size_t max_in_flight = 4;
    RetryPolicy retry;
    TranslationCache* cache = nullptr;
};

struct AugmentFailure {
    std::string id;
    std::string pivot;
    std::string message;
};

struct AugmentResult {
    Corpus corpus;
    std::vector<AugmentFailure> failures;
};

std::vector<AugmentedExample> augment_example(const LabeledExample& example, Language source,
                                              const PivotSet& pivots, TranslationProvider& provider,
                                              const AugmentOptions& options = {},
                                              std::vector<AugmentFailure>* failures = nullptr);

/// Originals followed by one rendered pair per pivot, ordered by
/// (original index, pivot index) whatever order the translations finish in.
AugmentResult augment_corpus(const Corpus& corpus, const PivotSet& pivots, TranslationProvider& provider,
                             const AugmentOptions& options = {});

}  // namespace offlang::augment
