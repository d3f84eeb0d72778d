// Regenerates the bundled offline corpora:
//   offlang-gen --out data/mini                mini-corpora for every language
//   offlang-gen --out DIR --table1             placeholder corpora with the
//                                              shared-task class counts
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "offlang/corpus.hpp"
#include "offlang/error.hpp"
#include "offlang/synth.hpp"

namespace fs = std::filesystem;
using namespace offlang;

namespace {

constexpr Language kLanguages[] = {Language::en, Language::da, Language::tr, Language::ar, Language::el};

std::string file_name(Language l, Split s) {
    return std::string(to_string(l)) + "_" + std::string(to_string(s)) + ".tsv";
}

// Unlabeled English tweets with ensemble-style OFF confidences: OFF-cue
// sentences lean high, the rest lean low, with overlap near the middle.
std::vector<ScoredExample> english_scored(std::uint64_t seed) {
    const auto source = synth::mini_corpus(Language::en, Split::train, seed + 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.15);
    std::vector<ScoredExample> out;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const double centre = source[i].label == Label::off ? 0.85 : 0.15;
        double c = std::clamp(centre + noise(rng), 0.0, 1.0);
        c = std::round(c * 1000.0) / 1000.0;
        out.push_back({"en-unlabeled-" + std::to_string(i + 1), source[i].text, c});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("offlang-gen");
    fs::path out_dir = "data/mini";
    std::uint64_t seed = 2020;
    bool table1 = false;
    app.add_option("--out", out_dir);
    app.add_option("--seed", seed);
    app.add_flag("--table1", table1);
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        if (table1) {
            for (Language l : kLanguages) {
                for (Split s : {Split::train, Split::test}) {
                    if (l == Language::en && s == Split::train) continue;  // 600k rows; use weaklabel instead
                    save_labeled_tsv(out_dir / file_name(l, s), synth::table1_corpus(l, s, seed));
                }
            }
            return 0;
        }
        for (Language l : kLanguages) {
            for (Split s : {Split::train, Split::test}) save_labeled_tsv(out_dir / file_name(l, s), synth::mini_corpus(l, s, seed));
        }
        std::ofstream scored(out_dir / "en_scored.tsv");
        write_scored_tsv(scored, english_scored(seed));
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
