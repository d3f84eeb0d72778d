#include "offlang/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "offlang/digest.hpp"
#include "offlang/error.hpp"
#include "offlang/text.hpp"

namespace offlang::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSubcommands = {"stats", "normalize", "weaklabel", "augment",
                                               "train", "evaluate",  "gridsearch", "ablate"};

[[noreturn]] void config_error(const std::string& message) { throw Error(Errc::config, message); }

void reject_unknown_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            config_error("unknown key '" + key + "' in " + where);
        }
    }
}

Language language_from(const std::string& code) {
    const auto parsed = parse_language(code);
    if (!parsed) config_error("unknown language '" + code + "'");
    return *parsed;
}

augment::ErrorPolicy policy_from(const std::string& name) {
    if (name == "fail_fast") return augment::ErrorPolicy::fail_fast;
    if (name == "skip_on_error") return augment::ErrorPolicy::skip_on_error;
    config_error("unknown error policy '" + name + "'");
}

std::string_view policy_name(augment::ErrorPolicy p) {
    return p == augment::ErrorPolicy::fail_fast ? "fail_fast" : "skip_on_error";
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

json weaklabel_json(const weaklabel::WeakLabelConfig& c) {
    return {{"hi_threshold", c.hi_threshold}, {"lo_threshold", c.lo_threshold}, {"per_class_count", c.per_class_count}};
}

}  // namespace

json PipelineConfig::settings_json() const {
    json steps = json::array();
    for (auto s : normalize.steps) steps.push_back(std::string(normalize::to_string(s)));
    json pivots = augment.pivots ? json(*augment.pivots) : json(nullptr);
    json j = {{"language", std::string(to_string(language))},
              {"seed", seed},
              {"normalize", {{"enabled", normalization_enabled()}, {"steps", steps}}},
              {"weaklabel", weaklabel_json(weaklabel)},
              {"augment",
               {{"pivots", pivots},
                {"provider", augment.provider},
                {"policy", std::string(policy_name(augment.policy))},
                {"max_in_flight", augment.max_in_flight},
                {"max_attempts", augment.max_attempts},
                {"base_backoff_ms", augment.base_backoff_ms}}},
              {"encoder", encoder},
              {"train", train},
              {"head", head ? json(*head) : json(nullptr)},
              {"grid", {{"learning_rates", grid.learning_rates}, {"batch_sizes", grid.batch_sizes}}},
              {"holdout_fraction", holdout_fraction}};
    return j;
}

std::string PipelineConfig::fingerprint() const { return offlang::fingerprint(settings_json().dump()); }

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
    try {
        reject_unknown_keys(j, "config", {"language", "seed", "out_dir", "paths", "normalize", "weaklabel", "augment",
                                          "encoder", "train", "head", "grid", "holdout_fraction"});
        PipelineConfig c;
        if (j.contains("language")) c.language = language_from(j.at("language").get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("out_dir")) c.out_dir = resolve(base_dir, j.at("out_dir").get<std::string>());

        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            reject_unknown_keys(p, "paths", {"train", "validation", "test", "scored", "weak", "model", "emoji_map",
                                             "slang_map", "lexicon", "translations", "cache"});
            const auto get = [&](const char* key) { return resolve(base_dir, p.value(key, std::string())); };
            c.paths = {get("train"),     get("validation"), get("test"),      get("scored"),
                       get("weak"),      get("model"),      get("emoji_map"), get("slang_map"),
                       get("lexicon"),   get("translations"), get("cache")};
        }

        if (j.contains("normalize")) {
            const auto& n = j.at("normalize");
            reject_unknown_keys(n, "normalize", {"enabled", "steps"});
            if (n.contains("enabled")) c.normalize.enabled = n.at("enabled").get<bool>();
            if (n.contains("steps")) {
                c.normalize.steps.clear();
                for (const auto& s : n.at("steps")) {
                    const auto step = normalize::parse_step(s.get<std::string>());
                    if (!step) config_error("unknown normalization step " + s.dump());
                    c.normalize.steps.push_back(*step);
                }
            }
        }

        if (j.contains("weaklabel")) {
            const auto& w = j.at("weaklabel");
            reject_unknown_keys(w, "weaklabel", {"hi_threshold", "lo_threshold", "per_class_count"});
            c.weaklabel.hi_threshold = w.value("hi_threshold", c.weaklabel.hi_threshold);
            c.weaklabel.lo_threshold = w.value("lo_threshold", c.weaklabel.lo_threshold);
            c.weaklabel.per_class_count = w.value("per_class_count", c.weaklabel.per_class_count);
        }

        if (j.contains("augment")) {
            const auto& a = j.at("augment");
            reject_unknown_keys(a, "augment", {"pivots", "provider", "endpoint", "timeout_ms", "policy",
                                               "max_in_flight", "max_attempts", "base_backoff_ms"});
            if (a.contains("pivots")) c.augment.pivots = a.at("pivots").get<std::vector<std::string>>();
            c.augment.provider = a.value("provider", c.augment.provider);
            c.augment.endpoint = a.value("endpoint", c.augment.endpoint);
            c.augment.timeout_ms = a.value("timeout_ms", c.augment.timeout_ms);
            if (a.contains("policy")) c.augment.policy = policy_from(a.at("policy").get<std::string>());
            c.augment.max_in_flight = a.value("max_in_flight", c.augment.max_in_flight);
            c.augment.max_attempts = a.value("max_attempts", c.augment.max_attempts);
            c.augment.base_backoff_ms = a.value("base_backoff_ms", c.augment.base_backoff_ms);
        }

        if (j.contains("encoder")) {
            reject_unknown_keys(j.at("encoder"), "encoder",
                                {"hidden_size", "layers", "heads", "ff_size", "max_sequence_length", "vocab_cap",
                                 "dropout"});
            c.encoder = j.at("encoder").get<encoder::EncoderConfig>();
        }

        const auto train_section = [&](const char* key) {
            json t = j.contains(key) ? j.at(key) : json::object();
            reject_unknown_keys(t, key, {"epochs", "batch_size", "learning_rate", "language", "freeze_encoders"});
            if (t.contains("language") && language_from(t.at("language").get<std::string>()) != c.language) {
                config_error(std::string(key) + ".language disagrees with the pipeline language");
            }
            t["language"] = std::string(to_string(c.language));
            return t.get<train::TrainConfig>();
        };
        c.train = train_section("train");
        if (j.contains("head")) c.head = train_section("head");

        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown_keys(g, "grid", {"learning_rates", "batch_sizes"});
            c.grid.learning_rates = g.value("learning_rates", c.grid.learning_rates);
            c.grid.batch_sizes = g.value("batch_sizes", c.grid.batch_sizes);
        }
        c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
        // One seed drives every stage.
        c.encoder.seed = c.train.seed = c.weaklabel.seed = c.seed;
        if (c.head) c.head->seed = c.seed;
        return c;
    } catch (const json::exception& e) {
        config_error(std::string("invalid config value: ") + e.what());
    }
}

namespace {

json read_config_tree(const fs::path& path) {
    std::ifstream in(path);
    if (!in) config_error("config file not found: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        config_error("cannot parse config file " + path.string() + ": " + e.what());
    }
}

}  // namespace

PipelineConfig load_config(const fs::path& path) { return parse_config(read_config_tree(path), path.parent_path()); }

std::string_view language_name(Language language) {
    switch (language) {
        case Language::en: return "English";
        case Language::da: return "Danish";
        case Language::tr: return "Turkish";
        case Language::ar: return "Arabic";
        case Language::el: return "Greek";
    }
    return "?";
}

Layout parse_layout(std::string_view name) {
    if (name == "table2") return Layout::table2;
    if (name == "table3") return Layout::table3;
    if (name == "table4") return Layout::table4;
    throw Error(Errc::invalid_argument, "unknown table layout '" + std::string(name) + "'");
}

namespace {

std::string fmt4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", eval::round4(x));
    return buf;
}

std::string language_heading(const std::string& code) {
    const auto lang = parse_language(code);
    return lang ? std::string(language_name(*lang)) : code;
}

[[noreturn]] void arity(const std::string& message) { throw Error(Errc::arity_mismatch, message); }

}  // namespace

std::string emit_report_table(std::span<const eval::EvalReport> reports, Layout layout) {
    std::ostringstream out;
    switch (layout) {
        case Layout::table2: {
            if (reports.empty()) arity("table2 needs at least one report");
            std::vector<std::string> systems, languages;
            std::map<std::pair<std::string, std::string>, double> cell;
            for (const auto& r : reports) {
                if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) systems.push_back(r.system);
                if (std::find(languages.begin(), languages.end(), r.language) == languages.end()) {
                    languages.push_back(r.language);
                }
                if (!cell.emplace(std::pair{r.system, r.language}, r.macro_f1).second) {
                    arity("table2 got two reports for " + r.system + " / " + r.language);
                }
            }
            if (cell.size() != systems.size() * languages.size()) {
                arity("table2 needs one report per system and language (" + std::to_string(systems.size()) + " x " +
                      std::to_string(languages.size()) + " grid, " + std::to_string(cell.size()) + " reports)");
            }
            out << "System";
            for (const auto& l : languages) out << '\t' << language_heading(l);
            out << '\n';
            for (const auto& s : systems) {
                out << s;
                for (const auto& l : languages) out << '\t' << fmt4(cell.at({s, l}));
                out << '\n';
            }
            break;
        }
        case Layout::table3: {
            if (reports.size() != 3) arity("table3 needs 3 reports, got " + std::to_string(reports.size()));
            out << "System\tMacro-F1\tAccuracy\n";
            // Removing the clean-data encoder leaves B; removing the weak one leaves A.
            const std::pair<const char*, const eval::EvalReport*> rows[] = {
                {"-OLID", &reports[1]}, {"-Weak", &reports[0]}, {"Full", &reports[2]}};
            for (const auto& [label, r] : rows) out << label << '\t' << fmt4(r->macro_f1) << '\t' << fmt4(r->accuracy) << '\n';
            break;
        }
        case Layout::table4: {
            if (reports.empty() || reports.size() % 2 != 0) {
                arity("table4 needs one (-Augmentation, +Augmentation) pair per language, got " +
                      std::to_string(reports.size()) + " reports");
            }
            out << "System";
            for (std::size_t i = 0; i < reports.size(); i += 2) {
                if (reports[i].language != reports[i + 1].language) {
                    throw Error(Errc::invalid_argument, "table4 pair " + std::to_string(i / 2 + 1) +
                                                            " mixes languages " + reports[i].language + " and " +
                                                            reports[i + 1].language);
                }
                const auto name = language_heading(reports[i].language);
                out << '\t' << name << " Macro-F1\t" << name << " Accuracy";
            }
            out << '\n';
            for (std::size_t arm = 0; arm < 2; ++arm) {
                out << (arm == 0 ? eval::kWithoutAugmentation : eval::kWithAugmentation);
                for (std::size_t i = arm; i < reports.size(); i += 2) {
                    out << '\t' << fmt4(reports[i].macro_f1) << '\t' << fmt4(reports[i].accuracy);
                }
                out << '\n';
            }
            break;
        }
    }
    return out.str();
}

namespace {

struct Flags {
    std::string config;
    std::string input, validation, test, weak, model, out_dir, language;
    std::string provider, pivots, endpoint, translations, cache;
    std::string reports, layout, kind = "augmentation";
    std::string input_key = "train";  // config path that --input overrides
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> k, epochs, batch_size;
    std::optional<double> learning_rate;
    bool baseline = false;
    bool no_normalize = false;
};

// Records every file a run reads or writes, for the manifest.
class Run {
public:
    Run(std::string subcommand, const PipelineConfig& config, std::ostream& out)
        : subcommand_(std::move(subcommand)), config_(config), out_(out) {
        fs::create_directories(config.out_dir);
    }

    std::ostream& out() { return out_; }
    const PipelineConfig& config() const { return config_; }

    void input(const fs::path& p) {
        if (!p.empty()) inputs_.push_back(p);
    }

    fs::path output_path(const std::string& name) const { return config_.out_dir / name; }

    void wrote(const std::string& name) { outputs_.push_back(name); }

    void write_text(const std::string& name, const std::string& content) {
        std::ofstream f(output_path(name), std::ios::binary);
        if (!f) throw Error(Errc::io, "cannot write " + output_path(name).string());
        f << content;
        f.close();
        if (!f) throw Error(Errc::io, "write failed for " + output_path(name).string());
        wrote(name);
    }

    void write_manifest() const {
        json inputs = json::array();
        for (const auto& p : inputs_) inputs.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
        json outputs = json::array();
        for (const auto& name : outputs_) {
            const auto p = output_path(name);
            outputs.push_back({{"path", name}, {"sha256", file_sha256(p)}, {"bytes", fs::file_size(p)}});
        }
        nlohmann::ordered_json m;
        m["tool"] = "offlang";
        m["version"] = kVersion;
        m["subcommand"] = subcommand_;
        m["created_at"] = timestamp();
        m["config_fingerprint"] = config_.fingerprint();
        m["seed"] = config_.seed;
        m["settings"] = config_.settings_json();
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["libraries"] = {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"crypto", crypto_library_version()},
                          {"compiler", __VERSION__}};
        std::ofstream f(output_path("manifest.json"));
        f << m.dump(2) << '\n';
        if (!f) throw Error(Errc::io, "cannot write manifest");
    }

private:
    static std::string timestamp() {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::string subcommand_;
    const PipelineConfig& config_;
    std::ostream& out_;
    std::vector<fs::path> inputs_;
    std::vector<std::string> outputs_;
};

void add_common(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON pipeline config");
    app.add_option("--out-dir", f.out_dir, "output directory");
    app.add_option("--seed", f.seed, "global seed");
    app.add_option("--language", f.language, "en, da, tr, ar or el");
}

void add_normalize_flag(CLI::App& app, Flags& f) {
    app.add_flag("--no-normalize", f.no_normalize, "skip tweet normalization before encoding");
}

void add_training(CLI::App& app, Flags& f) {
    app.add_option("--epochs", f.epochs);
    app.add_option("--batch-size", f.batch_size);
    app.add_option("--lr", f.learning_rate);
    add_normalize_flag(app, f);
}

void add_augmentation(CLI::App& app, Flags& f) {
    app.add_option("--provider", f.provider, "mock, identity, file or http");
    app.add_option("--pivots", f.pivots, "comma-separated pivot languages");
    app.add_option("--endpoint", f.endpoint, "http provider URL");
    app.add_option("--translations", f.translations, "translation table for the file provider");
    app.add_option("--cache", f.cache, "translation cache journal");
}

void configure(const std::string& sub, CLI::App& app, Flags& f) {
    add_common(app, f);
    if (sub == "stats" || sub == "normalize") {
        app.add_option("--input", f.input, "labeled TSV");
    } else if (sub == "weaklabel") {
        f.input_key = "scored";
        app.add_option("--input", f.input, "scored TSV (id, text, confidence)");
        app.add_option("-k,--per-class", f.k, "examples drawn per class");
    } else if (sub == "augment") {
        app.add_option("--input", f.input, "labeled TSV");
        add_augmentation(app, f);
    } else if (sub == "train") {
        app.add_option("--input", f.input, "training TSV");
        app.add_option("--weak", f.weak, "weakly labeled TSV; trains the dual-encoder English model");
        add_training(app, f);
    } else if (sub == "evaluate") {
        app.add_option("--model", f.model, "classifier checkpoint");
        app.add_option("--test", f.test, "labeled evaluation TSV");
        app.add_flag("--baseline", f.baseline, "majority baseline from --input statistics");
        app.add_option("--input", f.input, "training TSV for --baseline");
        app.add_option("--reports", f.reports, "comma-separated report.json files to tabulate");
        app.add_option("--layout", f.layout, "table2, table3 or table4");
        add_normalize_flag(app, f);
    } else if (sub == "gridsearch") {
        app.add_option("--input", f.input, "training TSV");
        app.add_option("--validation", f.validation, "validation TSV; default holds out part of --input");
        add_training(app, f);
    } else if (sub == "ablate") {
        app.add_option("--kind", f.kind, "augmentation or english")->check(CLI::IsMember({"augmentation", "english"}));
        app.add_option("--input", f.input, "training TSV (clean data for --kind english)");
        app.add_option("--validation", f.validation, "validation TSV; default holds out part of --input");
        app.add_option("--weak", f.weak, "noisy training TSV for --kind english");
        app.add_option("--test", f.test, "evaluation TSV for --kind english");
        add_augmentation(app, f);
        add_training(app, f);
    }
}

// Flags override file values; flag paths are taken relative to the working directory.
PipelineConfig resolve_config(const Flags& f) {
    json tree = f.config.empty() ? json::object() : read_config_tree(f.config);
    const fs::path base = f.config.empty() ? fs::path() : fs::path(f.config).parent_path();
    if (!tree.is_object()) config_error("config root must be an object");
    auto& paths = tree["paths"];
    if (paths.is_null()) paths = json::object();
    if (!paths.is_object()) config_error("paths must be an object");
    for (auto& [key, value] : paths.items()) {
        if (!value.is_string()) config_error("paths." + key + " must be a string");
        value = resolve(base, value.get<std::string>()).string();
    }
    if (tree.contains("out_dir") && tree["out_dir"].is_string()) {
        tree["out_dir"] = resolve(base, tree["out_dir"].get<std::string>()).string();
    }

    const auto set_path = [&](const char* key, const std::string& v) {
        if (!v.empty()) paths[key] = v;
    };
    set_path(f.input_key.c_str(), f.input);
    set_path("validation", f.validation);
    set_path("test", f.test);
    set_path("weak", f.weak);
    set_path("model", f.model);
    set_path("translations", f.translations);
    set_path("cache", f.cache);
    if (!f.out_dir.empty()) tree["out_dir"] = f.out_dir;
    if (!f.language.empty()) tree["language"] = f.language;
    if (f.seed) tree["seed"] = *f.seed;
    if (f.no_normalize) tree["normalize"]["enabled"] = false;
    if (!f.provider.empty()) tree["augment"]["provider"] = f.provider;
    if (!f.endpoint.empty()) tree["augment"]["endpoint"] = f.endpoint;
    if (!f.pivots.empty()) {
        tree["augment"]["pivots"] = augment::PivotSet::parse(f.pivots).codes();
    }
    if (f.k) tree["weaklabel"]["per_class_count"] = *f.k;
    if (f.epochs) tree["train"]["epochs"] = *f.epochs;
    if (f.batch_size) tree["train"]["batch_size"] = *f.batch_size;
    if (f.learning_rate) tree["train"]["learning_rate"] = *f.learning_rate;

    auto c = parse_config(tree, {});
    if (const char* key = std::getenv("OFFLANG_API_KEY")) c.api_key = key;

    try {
        c.encoder.validate();
        c.train.validate();
        if (c.head) c.head->validate();
        c.weaklabel.validate();
        if (c.augment.pivots) augment::PivotSet(*c.augment.pivots).validate(c.language);
        if (c.augment.max_in_flight == 0) config_error("augment.max_in_flight must be positive");
        if (c.augment.max_attempts == 0) config_error("augment.max_attempts must be positive");
        if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0)) config_error("holdout_fraction must lie in (0,1)");
        static const std::set<std::string> providers = {"mock", "identity", "file", "http"};
        if (!providers.count(c.augment.provider)) config_error("unknown provider '" + c.augment.provider + "'");
        std::set<normalize::Step> seen(c.normalize.steps.begin(), c.normalize.steps.end());
        if (seen.size() != c.normalize.steps.size()) config_error("normalize.steps lists a step twice");
    } catch (const Error& e) {
        if (e.code() == Errc::config) throw;
        config_error(e.what());
    }
    return c;
}

void require_path(const fs::path& p, const std::string& what) {
    if (p.empty()) config_error("missing " + what);
    if (!fs::exists(p)) config_error(what + " not found: " + p.string());
}

void check_optional(const fs::path& p, const std::string& what) {
    if (!p.empty() && !fs::exists(p)) config_error(what + " not found: " + p.string());
}

// Inputs each subcommand needs, checked before any work starts.
void check_inputs(const std::string& sub, const PipelineConfig& c, const Flags& f) {
    const auto& p = c.paths;
    check_optional(p.emoji_map, "emoji map");
    check_optional(p.slang_map, "slang map");
    check_optional(p.lexicon, "lexicon");
    const bool augmenting = sub == "augment" || (sub == "ablate" && f.kind == "augmentation");
    if (augmenting) {
        if (c.augment.provider == "file") require_path(p.translations, "translation table");
        if (c.augment.provider == "http" && c.augment.endpoint.empty()) config_error("http provider needs an endpoint");
    }
    if (sub == "stats" || sub == "normalize" || sub == "augment" || sub == "train" || sub == "gridsearch" ||
        sub == "ablate") {
        require_path(p.train, "input file");
    }
    if (sub == "weaklabel") require_path(p.scored, "scored input file");
    if (sub == "train") check_optional(p.weak, "weak training file");
    if (sub == "gridsearch" || (sub == "ablate" && f.kind == "augmentation")) check_optional(p.validation, "validation file");
    if (sub == "ablate" && f.kind == "english") {
        require_path(p.weak, "weak training file");
        require_path(p.test, "test file");
    }
    if (sub == "evaluate") {
        if (!f.reports.empty()) {
            if (f.layout.empty()) config_error("--reports needs --layout");
            for (const auto& r : text::split(f.reports, ',')) require_path(r, "report file");
            parse_layout(f.layout);
        } else if (f.baseline) {
            require_path(p.train, "input file");
            require_path(p.test, "test file");
        } else {
            require_path(p.model, "model checkpoint");
            require_path(p.test, "test file");
        }
    }
}

normalize::NormalizationConfig normalization(const PipelineConfig& c) {
    normalize::NormalizationConfig n;
    n.steps = c.normalize.steps;
    if (!c.paths.emoji_map.empty()) n.emoji = normalize::PhraseMap::load(c.paths.emoji_map);
    if (!c.paths.slang_map.empty()) n.slang = normalize::SlangMap::load(c.paths.slang_map);
    if (!c.paths.lexicon.empty()) n.lexicon = normalize::Lexicon::load(c.paths.lexicon);
    return n;
}

Corpus normalized_copy(const Corpus& corpus, const normalize::NormalizationConfig& n) {
    Corpus out(corpus.language(), corpus.split());
    for (auto ex : corpus.examples()) {
        ex.text = normalize::normalize(ex.text, n);
        out.add(std::move(ex));
    }
    return out;
}

// Loads a labeled file, normalizing the text when the pipeline asks for it.
Corpus load_for_model(Run& run, const fs::path& path, Split split) {
    run.input(path);
    const auto& c = run.config();
    auto corpus = load_labeled_tsv(path, c.language, split);
    if (!c.normalization_enabled()) return corpus;
    for (const auto* p : {&c.paths.emoji_map, &c.paths.slang_map, &c.paths.lexicon}) run.input(*p);
    return normalized_copy(corpus, normalization(c));
}

std::string stats_line(const CorpusStats& s) {
    return "{off=" + std::to_string(s.off_count) + ", not=" + std::to_string(s.not_count) +
           ", total=" + std::to_string(s.total) + "}";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }
std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string labeled_tsv(const Corpus& corpus) {
    std::ostringstream s;
    write_labeled_tsv(s, corpus);
    return s.str();
}

std::string loss_csv(const std::vector<double>& loss) {
    std::ostringstream s;
    train::write_loss_csv(s, loss);
    return s.str();
}

augment::PivotSet pivots_for(const PipelineConfig& c) {
    return c.augment.pivots ? augment::PivotSet(*c.augment.pivots) : augment::PivotSet::defaults_for(c.language);
}

std::unique_ptr<augment::TranslationProvider> make_provider(Run& run) {
    const auto& c = run.config();
    if (c.augment.provider == "identity") return std::make_unique<augment::IdentityProvider>();
    if (c.augment.provider == "file") {
        run.input(c.paths.translations);
        return std::make_unique<augment::FileProvider>(augment::FileProvider::load(c.paths.translations));
    }
    if (c.augment.provider == "http") {
        return std::make_unique<augment::HttpProvider>(augment::HttpProvider::Options{
            c.augment.endpoint, c.api_key, std::chrono::milliseconds(c.augment.timeout_ms)});
    }
    return std::make_unique<augment::MockProvider>();
}

augment::AugmentOptions augment_options(const PipelineConfig& c, augment::TranslationCache* cache) {
    augment::AugmentOptions o;
    o.policy = c.augment.policy;
    o.max_in_flight = c.augment.max_in_flight;
    o.retry = {c.augment.max_attempts, std::chrono::milliseconds(c.augment.base_backoff_ms)};
    o.cache = cache;
    return o;
}

std::string failures_tsv(const std::vector<augment::AugmentFailure>& failures) {
    std::string s = "id\tpivot\tmessage\n";
    for (const auto& f : failures) s += text::escape_tsv(f.id) + '\t' + f.pivot + '\t' + text::escape_tsv(f.message) + '\n';
    return s;
}

eval::ExperimentConfig experiment(const PipelineConfig& c) { return {c.encoder, c.train, c.head}; }

// Tags a report with run identity so two identical runs serialize identically.
void stamp(eval::EvalReport& r, const PipelineConfig& c) {
    r.language = std::string(to_string(c.language));
    r.config_fingerprint = c.fingerprint();
    r.seed = c.seed;
}

std::pair<Corpus, Corpus> train_and_validation(Run& run) {
    const auto& c = run.config();
    auto train_corpus = load_for_model(run, c.paths.train, Split::train);
    if (!c.paths.validation.empty()) {
        return {std::move(train_corpus), load_for_model(run, c.paths.validation, Split::validation)};
    }
    auto split = split_holdout(train_corpus, c.holdout_fraction, c.seed);
    return {std::move(split.train), std::move(split.validation)};
}

int cmd_stats(Run& run) {
    const auto& c = run.config();
    run.input(c.paths.train);
    const auto s = corpus_stats(load_labeled_tsv(c.paths.train, c.language));
    run.out() << stats_line(s) << '\n';
    run.write_text("stats.json", dump(json{{"off", s.off_count}, {"not", s.not_count}, {"total", s.total}}));
    return kExitOk;
}

int cmd_normalize(Run& run) {
    const auto& c = run.config();
    run.input(c.paths.train);
    for (const auto* p : {&c.paths.emoji_map, &c.paths.slang_map, &c.paths.lexicon}) run.input(*p);
    const auto corpus = normalized_copy(load_labeled_tsv(c.paths.train, c.language), normalization(c));
    run.write_text("normalized.tsv", labeled_tsv(corpus));
    run.out() << "normalized " << corpus.size() << " rows\n";
    return kExitOk;
}

int cmd_weaklabel(Run& run) {
    const auto& c = run.config();
    const auto& path = c.paths.scored;
    run.input(path);
    const auto corpus = weaklabel::build_weak_corpus(load_scored_tsv(path), c.weaklabel);
    run.write_text("weak.tsv", labeled_tsv(corpus));
    run.out() << "weak corpus " << stats_line(corpus_stats(corpus)) << '\n';
    return kExitOk;
}

int cmd_augment(Run& run) {
    const auto& c = run.config();
    run.input(c.paths.train);
    const auto corpus = load_labeled_tsv(c.paths.train, c.language);
    const auto pivots = pivots_for(c);
    auto provider = make_provider(run);
    std::optional<augment::TranslationCache> cache;
    if (!c.paths.cache.empty()) cache.emplace(c.paths.cache);
    const auto result = augment::augment_corpus(corpus, pivots, *provider, augment_options(c, cache ? &*cache : nullptr));
    run.write_text("augmented.tsv", labeled_tsv(result.corpus));
    run.write_text("failures.tsv", failures_tsv(result.failures));
    run.out() << "augmented " << corpus.size() << " -> " << result.corpus.size() << " rows, "
              << result.failures.size() << " failures\n";
    return kExitOk;
}

int cmd_train(Run& run) {
    const auto& c = run.config();
    const auto corpus = load_for_model(run, c.paths.train, Split::train);
    train::TrainResult result;
    if (!c.paths.weak.empty()) {
        // English system: encoder A on the gold data, encoder B on the weak data,
        // then a head over both CLS vectors trained on the gold data.
        const auto weak = load_for_model(run, c.paths.weak, Split::train);
        std::vector<std::string> texts;
        for (const auto* k : {&corpus, &weak}) {
            for (const auto& ex : k->examples()) texts.push_back(ex.text);
        }
        const auto initial = encoder::EncoderModel::initialize(
            c.encoder, encoder::Vocabulary::build(texts, c.encoder.vocab_cap));
        auto fine_tune = c.train;
        fine_tune.freeze_encoders = false;
        auto a = train::train_single(corpus, initial, fine_tune);
        auto b = train::train_single(weak, initial, fine_tune);
        run.write_text("encoder_a_loss.csv", loss_csv(a.epoch_loss));
        run.write_text("encoder_b_loss.csv", loss_csv(b.epoch_loss));
        result = train::train_dual(corpus, std::move(a.classifier.encoders.front()),
                                   std::move(b.classifier.encoders.front()), c.head ? *c.head : c.train);
    } else {
        result = train::train_single(corpus, eval::fresh_encoder(corpus, c.encoder), c.train);
    }
    train::save_classifier(run.output_path("model.json"), result.classifier);
    run.wrote("model.json");
    run.write_text("loss.csv", loss_csv(result.epoch_loss));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", result.epoch_loss.back());
    run.out() << "trained " << (result.classifier.mode == train::Mode::dual ? "dual" : "single")
              << " model, final mean loss " << buf << '\n';
    return kExitOk;
}

int cmd_evaluate(Run& run, const Flags& f) {
    const auto& c = run.config();
    if (!f.reports.empty()) {
        std::vector<eval::EvalReport> reports;
        for (const auto& r : text::split(f.reports, ',')) {
            run.input(r);
            std::ifstream in{fs::path(r)};
            reports.push_back(eval::report_from_json(json::parse(in)));
        }
        const auto table = emit_report_table(reports, parse_layout(f.layout));
        run.write_text(f.layout + ".tsv", table);
        run.out() << table;
        return kExitOk;
    }

    const auto test = load_for_model(run, c.paths.test, Split::test);
    const auto gold = eval::gold_labels(test);
    eval::EvalReport report;
    if (f.baseline) {
        run.input(c.paths.train);
        report = eval::majority_baseline(corpus_stats(load_labeled_tsv(c.paths.train, c.language)), gold);
    } else {
        run.input(c.paths.model);
        const auto clf = train::load_classifier(c.paths.model);
        const auto predictions = clf.predict(test);
        std::string tsv = "id\tprediction\n";
        for (std::size_t i = 0; i < test.size(); ++i) {
            tsv += text::escape_tsv(test[i].id) + '\t' + std::string(to_string(predictions[i])) + '\n';
        }
        run.write_text("predictions.tsv", tsv);
        report = eval::evaluate(predictions, gold);
        report.system = "offlang";
        report.head_input_dim = clf.head.input_dim();
    }
    stamp(report, c);
    run.write_text("report.json", dump(eval::to_json(report)));
    run.out() << report.system << " macro-F1 " << fmt4(report.macro_f1) << " accuracy " << fmt4(report.accuracy)
              << '\n';
    return kExitOk;
}

int cmd_gridsearch(Run& run) {
    const auto& c = run.config();
    auto [train_corpus, validation] = train_and_validation(run);
    const auto result = eval::grid_search(c.grid, train_corpus, validation, c.encoder, c.train);
    std::string tsv = "learning_rate\tbatch_size\tmacro_f1\n";
    for (const auto& cell : result.cells) {
        char lr[32];
        std::snprintf(lr, sizeof lr, "%g", cell.config.learning_rate);
        tsv += std::string(lr) + '\t' + std::to_string(cell.config.batch_size) + '\t' +
               (cell.report ? fmt4(cell.report->macro_f1) : "diverged") + '\n';
    }
    run.write_text("grid.tsv", tsv);
    run.write_text("best.json", dump(json(result.best)));
    run.out() << tsv << "best: learning_rate " << result.best.learning_rate << " batch_size "
              << result.best.batch_size << '\n';
    return kExitOk;
}

int cmd_ablate(Run& run, const Flags& f) {
    const auto& c = run.config();
    std::vector<eval::EvalReport> reports;
    Layout layout;
    if (f.kind == "english") {
        const auto clean = load_for_model(run, c.paths.train, Split::train);
        const auto weak = load_for_model(run, c.paths.weak, Split::train);
        const auto test = load_for_model(run, c.paths.test, Split::test);
        reports = eval::ablation_english(clean, weak, test, experiment(c));
        layout = Layout::table3;
    } else {
        auto [train_corpus, validation] = train_and_validation(run);
        auto provider = make_provider(run);
        std::optional<augment::TranslationCache> cache;
        if (!c.paths.cache.empty()) cache.emplace(c.paths.cache);
        reports = eval::ablation_augmentation(train_corpus, validation, pivots_for(c), *provider, experiment(c),
                                              augment_options(c, cache ? &*cache : nullptr));
        layout = Layout::table4;
    }
    auto all = nlohmann::ordered_json::array();
    for (auto& r : reports) {
        r.language = std::string(to_string(c.language));
        all.push_back(eval::to_json(r));
    }
    run.write_text("reports.json", dump(all));
    const auto table = emit_report_table(reports, layout);
    run.write_text(layout == Layout::table3 ? "table3.tsv" : "table4.tsv", table);
    run.out() << table;
    return kExitOk;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
    err << json{{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}}.dump() << '\n';
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
        std::string names;
        for (const auto& s : kSubcommands) names += (names.empty() ? "" : ", ") + s;
        (args.empty() ? err : out) << "usage: offlang <subcommand> [options]\nsubcommands: " << names << '\n';
        return args.empty() ? kExitUsage : kExitOk;
    }
    if (args[0] == "--version") {
        out << "offlang " << kVersion << '\n';
        return kExitOk;
    }
    const std::string& sub = args[0];
    if (std::find(kSubcommands.begin(), kSubcommands.end(), sub) == kSubcommands.end()) {
        report_error(err, "UnknownSubcommand", "unknown subcommand '" + sub + "'", kExitUsage);
        return kExitUsage;
    }

    Flags flags;
    CLI::App app("offlang " + sub, "offlang " + sub);
    configure(sub, app, flags);
    try {
        std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "Usage", e.what(), kExitUsage);
        return kExitUsage;
    }

    PipelineConfig config;
    try {
        config = resolve_config(flags);
        check_inputs(sub, config, flags);
    } catch (const Error& e) {
        report_error(err, "ConfigError", e.what(), kExitConfig);
        return kExitConfig;
    } catch (const std::exception& e) {
        report_error(err, "ConfigError", e.what(), kExitConfig);
        return kExitConfig;
    }

    try {
        Run run(sub, config, out);
        int code = kExitOk;
        if (sub == "stats") code = cmd_stats(run);
        else if (sub == "normalize") code = cmd_normalize(run);
        else if (sub == "weaklabel") code = cmd_weaklabel(run);
        else if (sub == "augment") code = cmd_augment(run);
        else if (sub == "train") code = cmd_train(run);
        else if (sub == "evaluate") code = cmd_evaluate(run, flags);
        else if (sub == "gridsearch") code = cmd_gridsearch(run);
        else code = cmd_ablate(run, flags);
        run.write_manifest();
        return code;
    } catch (const Error& e) {
        report_error(err, errc_name(e.code()), e.what(), kExitRuntime);
    } catch (const std::exception& e) {
        report_error(err, "RuntimeError", e.what(), kExitRuntime);
    }
    return kExitRuntime;
}

}  // namespace offlang::cli
