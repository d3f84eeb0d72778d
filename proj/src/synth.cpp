#include "offlang/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "offlang/error.hpp"

namespace offlang::synth {

namespace {

struct Table1Row {
    CorpusStats train;
    CorpusStats test;
};

// Indexed by Language: en, da, tr, ar, el.
constexpr Table1Row kTable1[] = {
    {{300000, 300000, 600000}, {1080, 2807, 3887}},
    {{307, 2061, 2368}, {41, 288, 329}},
    {{4837, 20184, 25021}, {716, 2812, 3528}},
    {{1371, 5468, 6839}, {402, 1598, 2000}},
    {{1989, 5005, 6994}, {242, 1302, 1544}},
};

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
    return items[d(rng)];
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace

CorpusStats table1_stats(Language language, Split split) {
    const auto& row = kTable1[static_cast<std::size_t>(language)];
    switch (split) {
        case Split::train: return row.train;
        case Split::test: return row.test;
        case Split::validation: break;
    }
    throw Error(Errc::invalid_argument, "dataset statistics exist for train and test splits only");
}

Corpus table1_corpus(Language language, Split split, std::uint64_t seed) {
    const auto stats = table1_stats(language, split);
    std::vector<Label> labels(stats.off_count, Label::off);
    labels.insert(labels.end(), stats.not_count, Label::not_off);
    std::mt19937_64 rng(seed);
    std::shuffle(labels.begin(), labels.end(), rng);

    Corpus corpus(language, split);
    const std::string lang(to_string(language));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        corpus.add({lang + "-" + std::string(to_string(split)) + "-" + std::to_string(i + 1),
                    "placeholder tweet " + std::to_string(i + 1), labels[i]});
    }
    return corpus;
}

Corpus separable_corpus(std::size_t n, std::uint64_t seed, Language language) {
    static const auto off_tokens = numbered("o", 20);
    static const auto not_tokens = numbered("n", 20);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> length(4, 9);
    Corpus corpus(language, Split::train);
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = i % 2 == 0 ? Label::off : Label::not_off;
        const auto& pool = label == Label::off ? off_tokens : not_tokens;
        std::string text;
        for (std::size_t k = 0, len = length(rng); k < len; ++k) {
            if (k) text += ' ';
            text += pick(pool, rng);
        }
        corpus.add({"sep-" + std::to_string(i + 1), std::move(text), label});
    }
    return corpus;
}

Corpus with_label_noise(const Corpus& corpus, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(Errc::invalid_argument, "noise fraction must lie in [0,1]");
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto flips = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(corpus.size()) + 0.5));
    std::vector<bool> flip(corpus.size(), false);
    for (std::size_t k = 0; k < flips; ++k) flip[order[k]] = true;

    Corpus out(corpus.language(), corpus.split());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto ex = corpus[i];
        if (flip[i]) ex.label = ex.label == Label::off ? Label::not_off : Label::off;
        out.add(std::move(ex));
    }
    return out;
}

DisambiguationTask disambiguation_task(std::uint64_t seed, std::size_t n_train, std::size_t n_validation) {
    static const auto fillers = numbered("w", 60);
    static const auto cues = numbered("c", 80);
    struct Pivot {
        const char* code;
        const char* off_concept;
        const char* not_concept;
    };
    static constexpr Pivot kPivots[] = {
        {"en", "insult", "neutral"}, {"fr", "insulte", "neutre"}, {"de", "beleidigung", "sachlich"}};

    std::mt19937_64 rng(seed);
    // Hidden cue polarity: a seeded half of the cue words mark OFF.
    std::vector<std::size_t> cue_order(cues.size());
    std::iota(cue_order.begin(), cue_order.end(), 0);
    std::shuffle(cue_order.begin(), cue_order.end(), rng);
    std::vector<Label> cue_label(cues.size());
    for (std::size_t k = 0; k < cues.size(); ++k) cue_label[cue_order[k]] = k < cues.size() / 2 ? Label::off : Label::not_off;

    DisambiguationTask task{Corpus(Language::tr, Split::train), Corpus(Language::tr, Split::validation), {},
                            augment::PivotSet({"en", "fr", "de"})};
    std::uniform_int_distribution<std::size_t> cue_pick(0, cues.size() - 1);
    std::uniform_int_distribution<std::size_t> filler_count(5, 8);

    const auto make = [&](Corpus& into, const std::string& prefix, std::size_t n, bool with_translations) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t cue = cue_pick(rng);
            std::vector<std::string> words;
            for (std::size_t k = 0, len = filler_count(rng); k < len; ++k) words.push_back(pick(fillers, rng));
            std::uniform_int_distribution<std::size_t> where(0, words.size());
            const auto at = static_cast<std::ptrdiff_t>(where(rng));
            words.insert(words.begin() + at, cues[cue]);

            std::string text;
            for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
            const Label label = cue_label[cue];
            if (with_translations) {
                for (const auto& p : kPivots) {
                    std::string translated;
                    for (const auto& w : words) {
                        if (!translated.empty()) translated += ' ';
                        translated += w == cues[cue] ? (label == Label::off ? p.off_concept : p.not_concept)
                                                     : std::string(p.code) + "_" + w;
                    }
                    task.translations.add(text, "tr", p.code, std::move(translated));
                }
            }
            into.add({prefix + std::to_string(i + 1), std::move(text), label});
        }
    };
    make(task.train, "dis-train-", n_train, true);
    make(task.validation, "dis-val-", n_validation, false);
    return task;
}

std::vector<ScoredExample> scored_corpus(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> milli(0, 1000);
    std::vector<ScoredExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double confidence = milli(rng) / 1000.0;
        // Every 50th row sits exactly on a threshold.
        if (i % 50 == 0) confidence = (i / 50) % 2 == 0 ? 0.8 : 0.2;
        out.push_back({"s" + std::to_string(i + 1), "scored tweet number " + std::to_string(i + 1), confidence});
    }
    return out;
}

namespace {

struct LanguageLexicon {
    std::vector<std::string> off_cues;
    std::vector<std::string> not_cues;
    std::vector<std::string> fillers;
};

const LanguageLexicon& lexicon_for(Language language) {
    static const LanguageLexicon kEn{
        {"idiot", "stupid", "trash", "loser", "pathetic", "clown", "moron", "disgusting", "shut up", "garbage"},
        {"lovely", "thanks", "great", "weather", "music", "congrats", "beautiful", "friends", "coffee", "weekend"},
        {"the", "this", "is", "you", "are", "so", "what", "a", "day", "game", "today", "really", "just", "he",
         "she", "they", "again", "always", "news", "team"}};
    static const LanguageLexicon kDa{
        {"idiot", "dum", "klovn", "taber", "lort", "fjols", "nar", "klam", "åndssvag", "tåbe"},
        {"tak", "dejlig", "vejret", "musik", "tillykke", "smuk", "venner", "kaffe", "weekend", "hygge"},
        {"det", "er", "du", "så", "hvad", "en", "dag", "i", "dag", "bare", "han", "hun", "de", "igen", "altid",
         "nyheder", "holdet", "meget", "lige", "jo"}};
    static const LanguageLexicon kTr{
        {"aptal", "salak", "ezik", "rezil", "gerizekalı", "beyinsiz", "soytarı", "iğrenç", "kes sesini", "çöp"},
        {"teşekkürler", "güzel", "hava", "müzik", "tebrikler", "harika", "arkadaşlar", "kahve", "hafta sonu", "sevgi"},
        {"bu", "bir", "sen", "çok", "ne", "gün", "bugün", "maç", "gerçekten", "sadece", "o", "onlar", "yine",
         "hep", "haber", "takım", "ve", "ama", "daha", "de"}};
    static const LanguageLexicon kAr{
        {"غبي", "احمق", "تافه", "فاشل", "حقير", "مهرج", "سخيف", "قذر", "اسكت", "زبالة"},
        {"شكرا", "جميل", "الطقس", "موسيقى", "مبروك", "رائع", "اصدقاء", "قهوة", "عطلة", "حب"},
        {"هذا", "هذه", "انت", "جدا", "ماذا", "يوم", "اليوم", "مباراة", "حقا", "فقط", "هو", "هي", "هم", "مرة",
         "دائما", "اخبار", "فريق", "و", "لكن", "اكثر"}};
    static const LanguageLexicon kEl{
        {"ηλίθιος", "χαζός", "βλάκας", "άχρηστος", "γελοίος", "κλόουν", "αηδία", "σκουπίδι", "σκάσε", "ανόητος"},
        {"ευχαριστώ", "ωραίος", "καιρός", "μουσική", "συγχαρητήρια", "υπέροχο", "φίλοι", "καφές", "σαββατοκύριακο",
         "αγάπη"},
        {"αυτό", "είναι", "εσύ", "πολύ", "τι", "μια", "μέρα", "σήμερα", "αγώνας", "πραγματικά", "μόνο", "αυτός",
         "αυτή", "αυτοί", "πάλι", "πάντα", "νέα", "ομάδα", "και", "αλλά"}};
    switch (language) {
        case Language::en: return kEn;
        case Language::da: return kDa;
        case Language::tr: return kTr;
        case Language::ar: return kAr;
        case Language::el: return kEl;
    }
    return kEn;
}

}  // namespace

Corpus mini_corpus(Language language, Split split, std::uint64_t seed) {
    const std::size_t n = split == Split::test ? 80 : 200;
    const auto& lex = lexicon_for(language);
    static const std::vector<std::string> kEnglishExtras = {"@USER", "URL", "😂", "👍", "#gameday", "#nowplaying",
                                                            "lol",   "brb", "idk", "2020", "#fail", "🙄"};
    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(language) << 8) ^ static_cast<std::uint64_t>(split));
    std::bernoulli_distribution is_off(0.3);
    std::bernoulli_distribution extra(0.5);
    std::uniform_int_distribution<std::size_t> filler_count(3, 7);

    Corpus corpus(language, split);
    const std::string prefix = std::string(to_string(language)) + "-" + std::string(to_string(split)) + "-";
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = is_off(rng) ? Label::off : Label::not_off;
        std::vector<std::string> words;
        for (std::size_t k = 0, len = filler_count(rng); k < len; ++k) words.push_back(pick(lex.fillers, rng));
        std::uniform_int_distribution<std::size_t> where(0, words.size());
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(where(rng)),
                     pick(label == Label::off ? lex.off_cues : lex.not_cues, rng));
        if (language == Language::en && extra(rng)) {
            std::uniform_int_distribution<std::size_t> pos(0, words.size());
            words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos(rng)), pick(kEnglishExtras, rng));
        }
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        corpus.add({prefix + std::to_string(i + 1), std::move(text), label});
    }
    return corpus;
}

}  // namespace offlang::synth
