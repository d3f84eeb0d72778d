#include "offlang/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "offlang/error.hpp"

namespace offlang::train {

using encoder::EncoderModel;
using encoder::SentenceVector;
using encoder::TokenSequence;

TrainConfig TrainConfig::defaults_for(Language language) {
    TrainConfig c;
    c.language = language;
    c.epochs = 4;
    switch (language) {
        case Language::en: c.batch_size = 8; c.learning_rate = 2e-5; break;
        case Language::da: c.batch_size = 16; c.learning_rate = 1e-5; break;
        case Language::ar: c.batch_size = 24; c.learning_rate = 3e-5; break;
        case Language::el: c.batch_size = 32; c.learning_rate = 2e-5; break;
        case Language::tr: c.batch_size = 16; c.learning_rate = 2e-5; break;
    }
    return c;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw Error(Errc::invalid_argument, "epochs must be at least 1");
    if (batch_size < 1) throw Error(Errc::invalid_argument, "batch size must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(Errc::invalid_argument, "learning rate must be positive");
    }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"learning_rate", c.learning_rate},
                       {"seed", c.seed},
                       {"language", std::string(to_string(c.language))},
                       {"freeze_encoders", c.freeze_encoders}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    Language language = c.language;
    if (j.contains("language")) {
        const auto parsed = parse_language(j.at("language").get<std::string>());
        if (!parsed) throw Error(Errc::config, "unknown language " + j.at("language").dump());
        language = *parsed;
    }
    TrainConfig d = TrainConfig::defaults_for(language);
    d.seed = c.seed;
    d.freeze_encoders = c.freeze_encoders;
    c.language = language;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.seed = j.value("seed", d.seed);
    c.freeze_encoders = j.value("freeze_encoders", d.freeze_encoders);
}

ClassifierHead ClassifierHead::initialize(std::size_t input_dim, std::mt19937_64& rng) {
    ClassifierHead head{Matrix(input_dim, 2), Matrix(1, 2)};
    std::normal_distribution<double> normal(0.0, 0.02);
    for (double& w : head.weight.data) {
        do {
            w = normal(rng);
        } while (std::abs(w) > 0.04);
    }
    return head;
}

std::array<double, 2> ClassifierHead::logits(std::span<const double> features) const {
    if (features.size() != weight.rows) throw Error(Errc::shape_mismatch, "head input has the wrong width");
    std::array<double, 2> out{bias.data[0], bias.data[1]};
    for (std::size_t i = 0; i < features.size(); ++i) {
        out[0] += features[i] * weight(i, 0);
        out[1] += features[i] * weight(i, 1);
    }
    return out;
}

std::array<double, 2> softmax(const std::array<double, 2>& logits) {
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx);
    const double e1 = std::exp(logits[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

LossGrad cross_entropy_loss(const std::array<double, 2>& logits, Label label) {
    if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) {
        throw Error(Errc::non_finite, "cross entropy received non-finite logits");
    }
    const double mx = std::max(logits[0], logits[1]);
    const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
    const std::size_t y = label_index(label);
    const auto p = softmax(logits);
    LossGrad out;
    out.loss = lse - logits[y];
    out.grad = p;
    out.grad[y] -= 1.0;
    return out;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamState& state,
               double learning_rate) {
    if (params.size() != grads.size()) throw Error(Errc::shape_mismatch, "adam: parameter/gradient count differs");
    if (state.m.empty()) {
        for (const Matrix* p : params) {
            state.m.emplace_back(p->rows, p->cols);
            state.v.emplace_back(p->rows, p->cols);
        }
    }
    if (state.m.size() != params.size()) throw Error(Errc::shape_mismatch, "adam: state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.m[i])) {
            throw Error(Errc::shape_mismatch, "adam: tensor shapes differ");
        }
    }

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
    const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->data;
        const auto& g = grads[i]->data;
        auto& m = state.m[i].data;
        auto& v = state.v[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * g[k];
            v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * g[k] * g[k];
            p[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + AdamState::kEps);
        }
    }
}

SentenceVector Classifier::features(const TokenSequence& seq) const {
    if (encoders.empty()) throw Error(Errc::config_mismatch, "classifier has no encoder");
    if (mode == Mode::dual) return encoder::dual_encode(encoders.at(0), encoders.at(1), seq);
    return encoder::encode(encoders.front(), seq);
}

std::array<double, 2> Classifier::probabilities(std::string_view text) const {
    const auto& e = encoders.front();
    const auto seq = encoder::tokenize_encode(text, e.vocab, e.config.max_sequence_length);
    return softmax(head.logits(features(seq)));
}

Label Classifier::predict(std::string_view text) const {
    const auto p = probabilities(text);
    // Exact ties go to NOT, the majority class in every language.
    return p[0] > p[1] ? Label::off : Label::not_off;
}

std::vector<Label> Classifier::predict(const Corpus& corpus) const {
    std::vector<Label> out;
    out.reserve(corpus.size());
    for (const auto& ex : corpus.examples()) out.push_back(predict(ex.text));
    return out;
}

namespace {

struct ParameterList {
    std::vector<Matrix*> params;
    std::vector<const Matrix*> grads;
    std::vector<std::string> names;

    void add(std::string name, Matrix& p, const Matrix& g) {
        names.push_back(std::move(name));
        params.push_back(&p);
        grads.push_back(&g);
    }
};

void check_batch_loss(double batch_loss, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(batch_loss) || batch_loss > kDivergenceLoss) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch + 1 << ", batch " << batch + 1 << " (mean loss " << batch_loss
            << ")";
        throw Error(Errc::divergence, msg.str());
    }
}

/// Shared loop for single and dual training. Encoders are either all frozen
/// (features computed once) or all trainable.
TrainResult fit(const Corpus& corpus, std::vector<EncoderModel> encoders, Mode mode, const TrainConfig& config,
                bool frozen) {
    config.validate();
    if (corpus.empty()) throw Error(Errc::empty_corpus, "cannot train on an empty corpus");
    const auto& vocab = encoders.front().vocab;
    const std::size_t max_len = encoders.front().config.max_sequence_length;
    std::size_t input_dim = 0;
    for (const auto& e : encoders) {
        if (!(e.vocab == vocab) || e.config.max_sequence_length != max_len) {
            throw Error(Errc::config_mismatch, "encoders must share vocabulary and sequence length");
        }
        input_dim += e.config.hidden_size;
    }

    std::mt19937_64 rng(config.seed);
    TrainResult result;
    auto& clf = result.classifier;
    clf.mode = mode;
    clf.head = ClassifierHead::initialize(input_dim, rng);

    std::vector<TokenSequence> seqs;
    seqs.reserve(corpus.size());
    for (const auto& ex : corpus.examples()) seqs.push_back(encoder::tokenize_encode(ex.text, vocab, max_len));

    clf.encoders = std::move(encoders);
    std::vector<SentenceVector> cached;
    if (frozen) {
        cached.reserve(seqs.size());
        for (const auto& s : seqs) cached.push_back(clf.features(s));
    }

    ClassifierHead head_grad{Matrix(input_dim, 2), Matrix(1, 2)};
    std::vector<encoder::EncoderWeights> enc_grads;
    ParameterList plist;
    if (!frozen) {
        for (auto& e : clf.encoders) enc_grads.push_back(e.weights.zeros_like());
        for (std::size_t k = 0; k < clf.encoders.size(); ++k) {
            std::vector<Matrix*> gs;
            enc_grads[k].for_each([&](const std::string&, Matrix& m) { gs.push_back(&m); });
            std::size_t i = 0;
            clf.encoders[k].weights.for_each([&](const std::string& name, Matrix& m) {
                plist.add("encoder" + std::to_string(k) + "." + name, m, *gs[i++]);
            });
        }
    }
    plist.add("head.weight", clf.head.weight, head_grad.weight);
    plist.add("head.bias", clf.head.bias, head_grad.bias);

    const double dropout = frozen ? 0.0 : clf.encoders.front().config.dropout;
    std::bernoulli_distribution keep(1.0 - dropout);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    encoder::ForwardOptions train_opts{true, &rng, false};

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            head_grad.weight.set_zero();
            head_grad.bias.set_zero();
            for (auto& g : enc_grads) g.for_each([](const std::string&, Matrix& m) { m.set_zero(); });

            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = order[b];
                std::vector<encoder::ForwardTrace> traces;
                SentenceVector feat;
                if (frozen) {
                    feat = cached[idx];
                } else {
                    for (const auto& e : clf.encoders) {
                        traces.push_back(encoder::forward(e, seqs[idx], train_opts));
                        feat.insert(feat.end(), traces.back().cls.begin(), traces.back().cls.end());
                    }
                }
                std::vector<double> drop(feat.size(), 1.0);
                if (dropout > 0.0) {
                    for (std::size_t i = 0; i < feat.size(); ++i) {
                        drop[i] = keep(rng) ? 1.0 / (1.0 - dropout) : 0.0;
                        feat[i] *= drop[i];
                    }
                }
                const auto logits = clf.head.logits(feat);
                if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) {
                    check_batch_loss(std::numeric_limits<double>::quiet_NaN(), epoch, batch_index);
                }
                const auto lg = cross_entropy_loss(logits, corpus[idx].label);
                batch_loss += lg.loss;
                for (std::size_t i = 0; i < feat.size(); ++i) {
                    head_grad.weight(i, 0) += feat[i] * lg.grad[0] * inv_b;
                    head_grad.weight(i, 1) += feat[i] * lg.grad[1] * inv_b;
                }
                head_grad.bias.data[0] += lg.grad[0] * inv_b;
                head_grad.bias.data[1] += lg.grad[1] * inv_b;

                if (!frozen) {
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < clf.encoders.size(); ++k) {
                        const std::size_t h = clf.encoders[k].config.hidden_size;
                        std::vector<double> d_cls(h);
                        for (std::size_t i = 0; i < h; ++i) {
                            const std::size_t fi = offset + i;
                            d_cls[i] = (clf.head.weight(fi, 0) * lg.grad[0] + clf.head.weight(fi, 1) * lg.grad[1]) *
                                       drop[fi] * inv_b;
                        }
                        encoder::backward(clf.encoders[k], traces[k], d_cls, enc_grads[k]);
                        offset += h;
                    }
                }
            }
            check_batch_loss(batch_loss * inv_b, epoch, batch_index);
            epoch_loss += batch_loss;
            adam_step(plist.params, plist.grads, clf.adam, config.learning_rate);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return result;
}

}  // namespace

TrainResult train_single(const Corpus& corpus, EncoderModel encoder, const TrainConfig& config) {
    std::vector<EncoderModel> encoders;
    encoders.push_back(std::move(encoder));
    return fit(corpus, std::move(encoders), Mode::single, config, config.freeze_encoders);
}

TrainResult train_dual(const Corpus& head_corpus, EncoderModel encoder_a, EncoderModel encoder_b,
                       const TrainConfig& config, bool joint) {
    if (!(encoder_a.vocab == encoder_b.vocab) ||
        encoder_a.config.max_sequence_length != encoder_b.config.max_sequence_length) {
        throw Error(Errc::config_mismatch, "dual training needs encoders with a shared vocabulary");
    }
    std::vector<EncoderModel> encoders;
    encoders.push_back(std::move(encoder_a));
    encoders.push_back(std::move(encoder_b));
    return fit(head_corpus, std::move(encoders), Mode::dual, config, !joint);
}

void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss) {
    out << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, epoch_loss[i]);
        out << buf;
    }
}

namespace {

nlohmann::json matrices_to_json(const std::vector<Matrix>& ms) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : ms) out.push_back({{"shape", {m.rows, m.cols}}, {"data", m.data}});
    return out;
}

std::vector<Matrix> matrices_from_json(const nlohmann::json& j) {
    std::vector<Matrix> out;
    for (const auto& t : j) {
        const auto shape = t.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2) throw Error(Errc::checkpoint_format, "optimizer tensor shape must be 2-d");
        Matrix m(shape[0], shape[1]);
        m.data = t.at("data").get<std::vector<double>>();
        if (m.data.size() != shape[0] * shape[1]) throw Error(Errc::checkpoint_format, "optimizer tensor size");
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

nlohmann::json to_checkpoint(const Classifier& c) {
    nlohmann::json encoders = nlohmann::json::array();
    for (const auto& e : c.encoders) encoders.push_back(encoder::to_checkpoint(e));
    return {{"format", "offlang.classifier"},
            {"version", encoder::kCheckpointVersion},
            {"mode", c.mode == Mode::dual ? "dual" : "single"},
            {"encoders", std::move(encoders)},
            {"head", {{"weight", {{"shape", {c.head.weight.rows, 2}}, {"data", c.head.weight.data}}},
                      {"bias", {{"shape", {1, 2}}, {"data", c.head.bias.data}}}}},
            {"adam", {{"t", c.adam.t}, {"m", matrices_to_json(c.adam.m)}, {"v", matrices_to_json(c.adam.v)}}}};
}

Classifier classifier_from_checkpoint(const nlohmann::json& j) {
    try {
        if (j.at("format") != "offlang.classifier" || j.at("version").get<int>() != encoder::kCheckpointVersion) {
            throw Error(Errc::checkpoint_format, "not a supported classifier checkpoint");
        }
        Classifier c;
        c.mode = j.at("mode") == "dual" ? Mode::dual : Mode::single;
        for (const auto& e : j.at("encoders")) c.encoders.push_back(encoder::from_checkpoint(e));
        if (c.encoders.size() != (c.mode == Mode::dual ? 2u : 1u)) {
            throw Error(Errc::checkpoint_format, "encoder count does not match the classifier mode");
        }
        std::size_t input_dim = 0;
        for (const auto& e : c.encoders) input_dim += e.config.hidden_size;
        const auto head = matrices_from_json(nlohmann::json::array({j.at("head").at("weight"), j.at("head").at("bias")}));
        if (head[0].rows != input_dim || head[0].cols != 2 || head[1].size() != 2) {
            throw Error(Errc::checkpoint_format, "classifier head has the wrong shape");
        }
        c.head = {head[0], head[1]};
        c.adam.t = j.at("adam").at("t").get<std::uint64_t>();
        c.adam.m = matrices_from_json(j.at("adam").at("m"));
        c.adam.v = matrices_from_json(j.at("adam").at("v"));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::checkpoint_format, std::string("malformed classifier checkpoint: ") + e.what());
    }
}

void save_classifier(const std::filesystem::path& path, const Classifier& classifier) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << to_checkpoint(classifier).dump() << '\n';
}

Classifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::checkpoint_format, path.string() + " is not valid JSON");
    return classifier_from_checkpoint(j);
}

}  // namespace offlang::train
