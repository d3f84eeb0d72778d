#include "offlang/eval.hpp"

#include <cmath>
#include <unordered_set>

#include "offlang/digest.hpp"
#include "offlang/error.hpp"

namespace offlang::eval {

EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> gold) {
    if (predictions.size() != gold.size()) {
        throw Error(Errc::length_mismatch, "predictions and gold differ in length (" +
                                               std::to_string(predictions.size()) + " vs " +
                                               std::to_string(gold.size()) + ")");
    }
    if (gold.empty()) throw Error(Errc::invalid_argument, "cannot evaluate an empty prediction list");

    EvalReport report;
    auto& cm = report.confusion;
    for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[label_index(predictions[i])][label_index(gold[i])];
    cm.total = gold.size();

    double f1_sum = 0.0;
    for (Label label : {Label::off, Label::not_off}) {
        const std::size_t c = label_index(label);
        const std::size_t o = 1 - c;
        const double tp = static_cast<double>(cm.counts[c][c]);
        const double fp = static_cast<double>(cm.counts[c][o]);
        const double fn = static_cast<double>(cm.counts[o][c]);
        auto& m = report.per_class[c];
        m.support = cm.counts[c][c] + cm.counts[o][c];
        m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        f1_sum += m.f1;
    }
    report.macro_f1 = f1_sum / static_cast<double>(kNumLabels);
    report.accuracy = static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(cm.total);
    return report;
}

std::vector<Label> gold_labels(const Corpus& corpus) {
    std::vector<Label> out;
    out.reserve(corpus.size());
    for (const auto& ex : corpus.examples()) out.push_back(ex.label);
    return out;
}

Label majority_label(const CorpusStats& s) { return s.off_count > s.not_count ? Label::off : Label::not_off; }

EvalReport majority_baseline(const CorpusStats& train_stats, std::span<const Label> gold) {
    if (train_stats.total == 0) throw Error(Errc::invalid_argument, "majority baseline needs training statistics");
    const std::vector<Label> predictions(gold.size(), majority_label(train_stats));
    auto report = evaluate(predictions, gold);
    report.system = "Majority baseline";
    return report;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["system"] = r.system;
    j["language"] = r.language;
    j["macro_f1"] = round4(r.macro_f1);
    j["accuracy"] = round4(r.accuracy);
    for (Label label : {Label::off, Label::not_off}) {
        const auto& m = r.metrics(label);
        nlohmann::ordered_json c;
        c["precision"] = round4(m.precision);
        c["recall"] = round4(m.recall);
        c["f1"] = round4(m.f1);
        c["support"] = m.support;
        j["per_class"][std::string(to_string(label))] = c;
    }
    nlohmann::ordered_json cm;
    for (Label p : {Label::off, Label::not_off}) {
        for (Label g : {Label::off, Label::not_off}) {
            cm["pred_" + std::string(to_string(p)) + "_gold_" + std::string(to_string(g))] = r.confusion.at(p, g);
        }
    }
    cm["total"] = r.confusion.total;
    j["confusion"] = cm;
    j["config_fingerprint"] = r.config_fingerprint;
    j["seed"] = r.seed;
    if (r.head_input_dim) j["head_input_dim"] = r.head_input_dim;
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.system = j.at("system").get<std::string>();
        r.language = j.at("language").get<std::string>();
        r.macro_f1 = j.at("macro_f1").get<double>();
        r.accuracy = j.at("accuracy").get<double>();
        for (Label label : {Label::off, Label::not_off}) {
            const auto& c = j.at("per_class").at(std::string(to_string(label)));
            auto& m = r.per_class[label_index(label)];
            m.precision = c.at("precision").get<double>();
            m.recall = c.at("recall").get<double>();
            m.f1 = c.at("f1").get<double>();
            m.support = c.at("support").get<std::size_t>();
        }
        const auto& cm = j.at("confusion");
        for (Label p : {Label::off, Label::not_off}) {
            for (Label g : {Label::off, Label::not_off}) {
                r.confusion.counts[label_index(p)][label_index(g)] =
                    cm.at("pred_" + std::string(to_string(p)) + "_gold_" + std::string(to_string(g))).get<std::size_t>();
            }
        }
        r.confusion.total = cm.at("total").get<std::size_t>();
        r.config_fingerprint = j.value("config_fingerprint", "");
        r.seed = j.value("seed", std::uint64_t{0});
        r.head_input_dim = j.value("head_input_dim", std::size_t{0});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("malformed report: ") + e.what());
    }
}

encoder::EncoderModel fresh_encoder(const Corpus& train_corpus, const encoder::EncoderConfig& config) {
    return encoder::EncoderModel::initialize(config, encoder::Vocabulary::build(train_corpus, config.vocab_cap));
}

namespace {

std::string experiment_fingerprint(const encoder::EncoderConfig& e, const train::TrainConfig& t) {
    nlohmann::json j = {{"encoder", e}, {"train", t}};
    return fingerprint(j.dump());
}

EvalReport score(const train::Classifier& clf, const Corpus& eval_corpus, std::string system,
                 const encoder::EncoderConfig& e, const train::TrainConfig& t) {
    auto report = evaluate(clf.predict(eval_corpus), gold_labels(eval_corpus));
    report.system = std::move(system);
    report.language = std::string(to_string(eval_corpus.language()));
    report.config_fingerprint = experiment_fingerprint(e, t);
    report.seed = t.seed;
    report.head_input_dim = clf.head.input_dim();
    return report;
}

}  // namespace

GridSearchResult grid_search(const GridSpec& grid, const Corpus& train_corpus, const Corpus& validation,
                             const encoder::EncoderConfig& encoder_config, const train::TrainConfig& base_config) {
    if (grid.learning_rates.empty() || grid.batch_sizes.empty()) {
        throw Error(Errc::invalid_argument, "grid search needs at least one learning rate and batch size");
    }
    for (const auto& ex : validation.examples()) {
        if (train_corpus.contains(ex.id)) {
            throw Error(Errc::invalid_argument, "train and validation share id '" + ex.id + "'");
        }
    }

    const auto initial = fresh_encoder(train_corpus, encoder_config);
    GridSearchResult result;
    std::optional<std::size_t> best;
    for (double lr : grid.learning_rates) {
        for (std::size_t bs : grid.batch_sizes) {
            GridCell cell;
            cell.config = base_config;
            cell.config.learning_rate = lr;
            cell.config.batch_size = bs;
            try {
                auto trained = train::train_single(train_corpus, initial, cell.config);
                cell.report = score(trained.classifier, validation, "grid", encoder_config, cell.config);
                if (!best || cell.report->macro_f1 > result.cells[*best].report->macro_f1) best = result.cells.size();
            } catch (const Error& e) {
                if (e.code() != Errc::divergence && e.code() != Errc::non_finite) throw;
                cell.error = e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }
    if (!best) throw Error(Errc::all_cells_diverged, "every grid-search cell diverged");
    result.best_index = *best;
    result.best = result.cells[*best].config;
    return result;
}

std::vector<EvalReport> ablation_augmentation(const Corpus& train_corpus, const Corpus& validation,
                                              const augment::PivotSet& pivots,
                                              augment::TranslationProvider& provider,
                                              const ExperimentConfig& config,
                                              const augment::AugmentOptions& options) {
    std::vector<EvalReport> out;

    auto plain = train::train_single(train_corpus, fresh_encoder(train_corpus, config.encoder), config.train);
    out.push_back(score(plain.classifier, validation, kWithoutAugmentation, config.encoder, config.train));

    const auto augmented = augment::augment_corpus(train_corpus, pivots, provider, options).corpus;
    auto enriched = train::train_single(augmented, fresh_encoder(augmented, config.encoder), config.train);
    out.push_back(score(enriched.classifier, validation, kWithAugmentation, config.encoder, config.train));
    return out;
}

std::vector<EvalReport> ablation_english(const Corpus& corpus_a, const Corpus& corpus_b, const Corpus& test,
                                         const ExperimentConfig& config) {
    std::vector<std::string> texts;
    for (const auto* c : {&corpus_a, &corpus_b}) {
        for (const auto& ex : c->examples()) texts.push_back(ex.text);
    }
    const auto initial =
        encoder::EncoderModel::initialize(config.encoder, encoder::Vocabulary::build(texts, config.encoder.vocab_cap));

    auto fine_tune = config.train;
    fine_tune.freeze_encoders = false;
    auto encoder_a = train::train_single(corpus_a, initial, fine_tune).classifier.encoders.front();
    auto encoder_b = train::train_single(corpus_b, initial, fine_tune).classifier.encoders.front();

    auto head_cfg = config.head_config();
    head_cfg.freeze_encoders = true;
    std::vector<EvalReport> out;
    const auto a_only = train::train_single(corpus_a, encoder_a, head_cfg);
    out.push_back(score(a_only.classifier, test, kEncoderAOnly, config.encoder, head_cfg));
    const auto b_only = train::train_single(corpus_a, encoder_b, head_cfg);
    out.push_back(score(b_only.classifier, test, kEncoderBOnly, config.encoder, head_cfg));
    const auto dual = train::train_dual(corpus_a, std::move(encoder_a), std::move(encoder_b), head_cfg);
    out.push_back(score(dual.classifier, test, kDualEncoder, config.encoder, head_cfg));
    return out;
}

}  // namespace offlang::eval
