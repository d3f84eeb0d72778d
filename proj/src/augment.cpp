#include "offlang/augment.hpp"

#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "offlang/error.hpp"
#include "offlang/text.hpp"

namespace offlang::augment {

PivotSet PivotSet::defaults_for(Language source) {
    if (source == Language::en) {
        std::clog << "warning: English source corpus; using pivots fr,de,es instead of en,fr,de\n";
        return PivotSet({"fr", "de", "es"});
    }
    return PivotSet({"en", "fr", "de"});
}

PivotSet PivotSet::parse(std::string_view comma_separated) {
    std::vector<std::string> codes;
    for (auto part : text::split(comma_separated, ',')) {
        part = text::trim(part);
        if (!part.empty()) codes.push_back(text::ascii_lower(part));
    }
    return PivotSet(std::move(codes));
}

void PivotSet::validate(Language source) const {
    if (pivots_.empty()) throw Error(Errc::invalid_pivots, "pivot set is empty");
    std::set<std::string> seen;
    for (const auto& code : pivots_) {
        if (code == to_string(source)) {
            throw Error(Errc::invalid_pivots, "pivot '" + code + "' equals the source language");
        }
        if (!seen.insert(code).second) throw Error(Errc::invalid_pivots, "pivot '" + code + "' listed twice");
    }
}

std::string render_pair(std::string_view original, std::string_view translation) {
    std::string out;
    out.reserve(original.size() + kSeparator.size() + translation.size());
    out.append(original).append(kSeparator).append(translation);
    return out;
}

std::string MockProvider::translate(const std::string& text, const std::string& source,
                                    const std::string& target) {
    ++calls_;
    if (!supports(source, target)) throw Error(Errc::unsupported_pair, "mock: " + source + "->" + target);
    if (failing_.count(target)) throw Error(Errc::provider_unavailable, "mock: target " + target + " is offline");
    return target + "⟦" + text + "⟧";
}

bool MockProvider::supports(const std::string& source, const std::string& target) const {
    return !source.empty() && !target.empty() && source != target;
}

FileProvider FileProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    FileProvider provider;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        if (f.size() < 4) throw RowError(Errc::malformed_row, line_no, "translation table needs 4 columns");
        provider.add(text::unescape_tsv(f[0]), std::string(f[1]), std::string(f[2]), text::unescape_tsv(f[3]));
    }
    return provider;
}

void FileProvider::add(std::string text, std::string source, std::string target, std::string translation) {
    pairs_.emplace(source, target);
    table_[{std::move(text), std::move(source), std::move(target)}] = std::move(translation);
}

std::string FileProvider::translate(const std::string& text, const std::string& source,
                                    const std::string& target) {
    if (!supports(source, target)) throw Error(Errc::unsupported_pair, "file: no " + source + "->" + target + " table");
    const auto it = table_.find({text, source, target});
    if (it == table_.end()) throw Error(Errc::empty_translation, "file: no translation for '" + text + "'");
    return it->second;
}

bool FileProvider::supports(const std::string& source, const std::string& target) const {
    return pairs_.count({source, target}) != 0;
}

HttpProvider::HttpProvider(Options options) : options_(std::move(options)) {
    const std::string_view url = options_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || url.substr(0, scheme_end) != "http") {
        throw Error(Errc::config, "translation endpoint must be an http:// URL: " + options_.endpoint);
    }
    auto rest = url.substr(scheme_end + 3);
    const auto slash = rest.find('/');
    path_ = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    auto authority = rest.substr(0, slash);
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        port_ = std::stoi(std::string(authority.substr(colon + 1)));
        authority = authority.substr(0, colon);
    }
    host_ = std::string(authority);
    if (host_.empty()) throw Error(Errc::config, "translation endpoint has no host");
}

std::string HttpProvider::translate(const std::string& text, const std::string& source,
                                    const std::string& target) {
    httplib::Client client(host_, port_);
    const auto secs = options_.timeout.count() / 1000;
    const auto usecs = (options_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    const nlohmann::json body = {{"q", text}, {"source", source}, {"target", target}};
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(Errc::provider_unavailable, "http: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw Error(Errc::provider_unavailable, "http: status " + std::to_string(res->status));
    }
    if (res->status == 400 || res->status == 422) {
        throw Error(Errc::unsupported_pair, "http: rejected " + source + "->" + target);
    }
    if (res->status != 200) throw Error(Errc::provider_unavailable, "http: status " + std::to_string(res->status));

    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("translation") || !reply["translation"].is_string()) {
        throw Error(Errc::provider_unavailable, "http: malformed reply");
    }
    return reply["translation"].get<std::string>();
}

TranslationCache::TranslationCache(std::filesystem::path journal) : journal_(std::move(journal)) {
    std::ifstream in(*journal_, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        const auto f = text::split(line, '\t');
        // A torn final line from an interrupted run is skipped.
        if (f.size() != 4) continue;
        entries_[{text::unescape_tsv(f[0]), std::string(f[1]), std::string(f[2])}] = text::unescape_tsv(f[3]);
    }
}

std::optional<std::string> TranslationCache::lookup(const std::string& text, const std::string& source,
                                                    const std::string& target) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find({text, source, target});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TranslationCache::store(const std::string& text, const std::string& source, const std::string& target,
                             const std::string& translation) {
    std::lock_guard lock(mutex_);
    entries_[{text, source, target}] = translation;
    if (!journal_) return;
    std::ofstream out(*journal_, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::io, "cannot append to translation cache " + journal_->string());
    out << text::escape_tsv(text) << '\t' << source << '\t' << target << '\t' << text::escape_tsv(translation)
        << '\n';
}

std::size_t TranslationCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string translate(TranslationProvider& provider, TranslationCache* cache, const std::string& text,
                      const std::string& source, const std::string& target, const RetryPolicy& retry) {
    if (cache) {
        if (auto hit = cache->lookup(text, source, target)) return *hit;
    }
    if (!provider.supports(source, target)) {
        throw Error(Errc::unsupported_pair, provider.name() + " cannot translate " + source + "->" + target);
    }

    std::string result;
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            result = provider.translate(text, source, target);
            break;
        } catch (const Error& e) {
            if (e.code() != Errc::provider_unavailable || attempt + 1 >= retry.max_attempts) throw;
            std::this_thread::sleep_for(retry.base_backoff * (1LL << attempt));
        }
    }
    if (result.empty()) {
        throw Error(Errc::empty_translation, provider.name() + " returned an empty translation");
    }
    if (cache) cache->store(text, source, target, result);
    return result;
}

namespace {

AugmentedExample make_augmented(const LabeledExample& ex, const std::string& pivot, std::string translation) {
    AugmentedExample out;
    out.id = ex.id + "#" + pivot;
    out.original_text = ex.text;
    out.pivot = pivot;
    out.label = ex.label;
    out.rendered_text = render_pair(ex.text, translation);
    out.translated_text = std::move(translation);
    return out;
}

}  // namespace

std::vector<AugmentedExample> augment_example(const LabeledExample& example, Language source,
                                              const PivotSet& pivots, TranslationProvider& provider,
                                              const AugmentOptions& options,
                                              std::vector<AugmentFailure>* failures) {
    pivots.validate(source);
    const std::string src(to_string(source));
    std::vector<AugmentedExample> out;
    for (const auto& pivot : pivots.codes()) {
        try {
            out.push_back(make_augmented(
                example, pivot, translate(provider, options.cache, example.text, src, pivot, options.retry)));
        } catch (const Error& e) {
            const std::string message = "pivot " + pivot + ": " + e.what();
            if (options.policy == ErrorPolicy::fail_fast) throw Error(e.code(), message);
            std::clog << "warning: skipping " << example.id << " (" << message << ")\n";
            if (failures) failures->push_back({example.id, pivot, message});
        }
    }
    return out;
}

AugmentResult augment_corpus(const Corpus& corpus, const PivotSet& pivots, TranslationProvider& provider,
                             const AugmentOptions& options) {
    if (corpus.empty()) throw Error(Errc::empty_corpus, "cannot augment an empty corpus");
    pivots.validate(corpus.language());

    const std::string src(to_string(corpus.language()));
    const std::size_t n_pivots = pivots.size();
    const std::size_t jobs = corpus.size() * n_pivots;

    struct Slot {
        std::optional<std::string> translation;
        std::optional<Error> error;
    };
    std::vector<Slot> slots(jobs);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};

    const auto worker = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            const auto& ex = corpus[job / n_pivots];
            const auto& pivot = pivots.codes()[job % n_pivots];
            try {
                slots[job].translation = translate(provider, options.cache, ex.text, src, pivot, options.retry);
            } catch (const Error& e) {
                slots[job].error = Error(e.code(), "pivot " + pivot + ": " + e.what());
                if (options.policy == ErrorPolicy::fail_fast) abort = true;
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.max_in_flight, jobs));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    }

    AugmentResult result{Corpus(corpus.language(), corpus.split()), {}};
    for (std::size_t job = 0; job < jobs; ++job) {
        if (slots[job].error && options.policy == ErrorPolicy::fail_fast) throw *slots[job].error;
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& ex = corpus[i];
        result.corpus.add(ex);
        for (std::size_t p = 0; p < n_pivots; ++p) {
            auto& slot = slots[i * n_pivots + p];
            if (slot.translation) {
                auto aug = make_augmented(ex, pivots.codes()[p], std::move(*slot.translation));
                result.corpus.add({std::move(aug.id), std::move(aug.rendered_text), aug.label});
            } else if (slot.error) {
                std::clog << "warning: skipping " << ex.id << " (" << slot.error->what() << ")\n";
                result.failures.push_back({ex.id, pivots.codes()[p], slot.error->what()});
            }
        }
    }
    return result;
}

}  // namespace offlang::augment
