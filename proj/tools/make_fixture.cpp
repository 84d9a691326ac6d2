// Writes the bundled toy corpus. Every draw comes from one splitmix64 stream,
// so the output is identical on every run.
#include "isle/embedder.hpp"
#include "isle/hash.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Rng {
    std::uint64_t state;
    std::uint64_t next() { return isle::splitmix64(state); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    double unit() { return isle::unit_double(next()); }
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
};

struct Theme {
    std::string subject;
    std::vector<std::string> title_heads;
    std::vector<std::string> words;
};

const std::vector<Theme> kThemes = {
    {"cs.CL",
     {"machine translation", "neural machine translation", "low resource machine translation"},
     {"translation", "bilingual", "parallel", "corpus", "decoder", "encoder", "attention",
      "alignment", "bleu", "sentence", "vocabulary", "subword", "multilingual", "language",
      "target", "source", "beam", "fluency", "adequacy", "transformer"}},
    {"cs.CV",
     {"image classification", "object detection", "semantic segmentation"},
     {"image", "pixel", "convolutional", "detection", "segmentation", "visual", "bounding",
      "backbone", "augmentation", "resolution", "camera", "scene", "feature", "pooling",
      "classification", "imagenet", "label", "mask", "region", "texture"}},
    {"cs.LG",
     {"reinforcement learning", "policy optimization", "offline reinforcement learning"},
     {"policy", "reward", "agent", "environment", "exploration", "value", "actor", "critic",
      "trajectory", "return", "markov", "episode", "bandit", "regret", "simulation", "control",
      "planning", "dynamics", "state", "action"}},
    {"cs.SI",
     {"graph neural networks", "link prediction", "node classification"},
     {"graph", "node", "edge", "message", "passing", "neighbor", "aggregation", "embedding",
      "spectral", "community", "network", "relational", "heterogeneous", "citation",
      "adjacency", "walk", "subgraph", "homophily", "propagation", "topology"}},
    {"eess.AS",
     {"speech recognition", "speaker verification", "spoken language understanding"},
     {"speech", "acoustic", "audio", "speaker", "phoneme", "waveform", "spectrogram",
      "recognition", "utterance", "noise", "microphone", "prosody", "transcription", "voice",
      "frame", "ctc", "streaming", "latency", "keyword", "signal"}},
    {"q-bio.BM",
     {"protein structure prediction", "molecular property prediction", "drug discovery"},
     {"protein", "molecule", "residue", "folding", "ligand", "binding", "sequence", "structure",
      "chemical", "atom", "docking", "enzyme", "genome", "mutation", "assay", "compound",
      "conformation", "affinity", "biological", "dataset"}},
};

const std::vector<std::string> kShared = {
    "method", "model", "results", "performance", "benchmark", "approach", "propose", "show",
    "experiments", "training", "evaluation", "baseline", "improvement", "framework", "data",
    "learning", "novel", "efficient", "robust", "analysis"};

const std::vector<std::string> kTitleTails = {
    "with limited supervision", "at scale", "revisited", "via contrastive pretraining",
    "for real world deployment", "under distribution shift", "using sparse experts",
    "with curriculum learning"};

const std::vector<std::pair<std::string, std::string>> kInstitutions = {
    {"I01", "US"}, {"I02", "US"}, {"I03", "US"}, {"I04", "GB"}, {"I05", "GB"},
    {"I06", "DE"}, {"I07", "DE"}, {"I08", "CN"}, {"I09", "CN"}, {"I10", "CN"},
    {"I11", "JP"}, {"I12", "FR"}, {"I13", "CA"}, {"I14", "CA"}, {"I15", "IN"},
    {"I16", "KR"}, {"I17", "CH"}, {"I18", "NL"}, {"I19", "SG"}, {"I20", "AU"}};

const std::vector<std::string> kGiven = {"Ada", "Bo", "Chen", "Dana", "Emil", "Farah", "Goran",
                                         "Hana", "Ivo", "Jun", "Kemal", "Lena", "Mateo", "Nia",
                                         "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tomas"};
const std::vector<std::string> kFamily = {"Abe", "Brandt", "Costa", "Dubois", "Eriksen", "Fujita",
                                          "Garcia", "Huang", "Iyer", "Jansen", "Kim", "Lopez",
                                          "Moreau", "Novak", "Okafor", "Park", "Quist", "Rossi",
                                          "Sato", "Tanaka"};

std::string abstract_for(Rng& rng, const Theme& theme, const Theme& other) {
    std::vector<std::string> words;
    const std::size_t n = 30 + rng.below(16);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.unit();
        if (u < 0.6) {
            words.push_back(rng.pick(theme.words));
        } else if (u < 0.68) {
            words.push_back(rng.pick(other.words));
        } else {
            words.push_back(rng.pick(kShared));
        }
    }
    std::string out = "We study " + theme.title_heads[0];
    for (std::size_t i = 0; i < words.size(); ++i) {
        out += (i % 9 == 0 ? ". " : " ") + words[i];
    }
    return out + ".";
}

void write_lines(const fs::path& path, const std::vector<ordered_json>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const auto& r : rows) out << r.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the toy scholarly corpus"};
    fs::path out_dir = "tests/fixtures/toy";
    std::uint64_t seed = 20240517;
    std::size_t papers = 200, authors = 180, citations = 950;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--papers", papers);
    app.add_option("--authors", authors);
    app.add_option("--citations", citations);
    CLI11_PARSE(app, argc, argv);

    Rng rng{seed};
    fs::create_directories(out_dir);

    // Authors: each leans toward one theme and holds zero to two affiliations.
    std::vector<std::size_t> author_theme(authors);
    std::vector<ordered_json> author_rows;
    for (std::size_t a = 0; a < authors; ++a) {
        author_theme[a] = a % kThemes.size();
        char id[24];
        std::snprintf(id, sizeof id, "A%03zu", a + 1);
        std::set<std::string> inst, countries;
        const std::size_t n_inst = a % 17 == 0 ? 0 : 1 + (rng.unit() < 0.2);
        while (inst.size() < n_inst) {
            const auto& [iid, cc] = kInstitutions[rng.below(kInstitutions.size())];
            inst.insert(iid);
            countries.insert(cc);
        }
        std::string name = kGiven[a % kGiven.size()] + " " +
                           kFamily[(a / kGiven.size() + a * 7) % kFamily.size()];
        author_rows.push_back({{"author_id", id},
                               {"name", name},
                               {"institution_ids", std::vector<std::string>(inst.begin(), inst.end())},
                               {"country_codes",
                                std::vector<std::string>(countries.begin(), countries.end())}});
    }

    std::vector<ordered_json> paper_rows, authorship_rows, citation_rows, embedding_rows;
    std::vector<std::size_t> paper_theme(papers);
    std::vector<int> paper_year(papers);
    std::vector<std::string> paper_ids(papers), paper_text(papers);
    for (std::size_t p = 0; p < papers; ++p) {
        char id[24];
        std::snprintf(id, sizeof id, "P%04zu", p + 1);
        paper_ids[p] = id;
        const auto theme_idx = rng.below(kThemes.size());
        paper_theme[p] = theme_idx;
        const auto& theme = kThemes[theme_idx];
        const auto& other = kThemes[(theme_idx + 1 + rng.below(kThemes.size() - 1)) % kThemes.size()];
        const std::string title = rng.pick(theme.title_heads) + " " + rng.pick(kTitleTails);
        std::string title_cased = title;
        title_cased[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title_cased[0])));
        const std::string abstract = abstract_for(rng, theme, other);
        paper_year[p] = 2015 + static_cast<int>(rng.below(10));

        ordered_json row{{"paper_id", id},
                         {"arxiv_id", "24" + std::to_string(10 + p % 3) + "." +
                                          std::to_string(10000 + p * 37)},
                         {"title", title_cased},
                         {"abstract", abstract},
                         {"subject", theme.subject}};
        if (p == 137) {
            paper_year[p] = 0; // no usable date at all
        } else if (p % 5 == 0) {
            row["submitted_date"] = std::to_string(paper_year[p]) + "-0" +
                                    std::to_string(1 + rng.below(9)) + "-15";
        } else {
            row["publication_year"] = paper_year[p];
        }
        if (p % 4 == 0) row["doi"] = "10.5555/toy." + std::to_string(p + 1);
        paper_rows.push_back(std::move(row));
        paper_text[p] = title_cased + " " + abstract;

        // One to four authors, mostly from the paper's theme.
        std::set<std::size_t> chosen;
        const std::size_t n_auth = 1 + rng.below(4);
        while (chosen.size() < n_auth) {
            std::size_t a = rng.below(authors);
            if (rng.unit() < 0.8) {
                while (author_theme[a] != theme_idx) a = (a + 1) % authors;
            }
            chosen.insert(a);
        }
        for (auto a : chosen) {
            authorship_rows.push_back({{"author_id", author_rows[a]["author_id"]}, {"paper_id", id}});
        }
    }

    // Citations point backwards in index order, mostly within a theme.
    std::set<std::pair<std::size_t, std::size_t>> cites;
    while (cites.size() < citations) {
        const std::size_t from = 1 + rng.below(papers - 1);
        std::size_t to = rng.below(from);
        if (rng.unit() < 0.7) {
            for (std::size_t tries = 0; tries < 8 && paper_theme[to] != paper_theme[from]; ++tries) {
                to = rng.below(from);
            }
        }
        cites.emplace(from, to);
    }
    for (auto [from, to] : cites) {
        citation_rows.push_back({{"citing_paper_id", paper_ids[from]}, {"cited_paper_id", paper_ids[to]}});
    }

    auto embedder = isle::vec::make_embedder(isle::vec::EmbedderBinding::projection(42, 384));
    const std::set<std::size_t> missing{11, 58, 103, 171};
    const std::size_t zero_vector = 77;
    for (std::size_t p = 0; p < papers; ++p) {
        if (missing.contains(p)) continue;
        std::vector<double> v(384, 0.0);
        if (p != zero_vector) v = embedder->embed(paper_text[p]).vector;
        embedding_rows.push_back({{"paper_id", paper_ids[p]}, {"vector", v}});
    }

    write_lines(out_dir / "papers.jsonl", paper_rows);
    write_lines(out_dir / "authors.jsonl", author_rows);
    write_lines(out_dir / "authorship.jsonl", authorship_rows);
    write_lines(out_dir / "citations.jsonl", citation_rows);
    write_lines(out_dir / "embeddings.jsonl", embedding_rows);

    std::set<std::string> institutions, countries;
    for (const auto& a : author_rows) {
        for (const auto& i : a["institution_ids"]) institutions.insert(i.get<std::string>());
        for (const auto& c : a["country_codes"]) countries.insert(c.get<std::string>());
    }
    ordered_json manifest{{"generator_seed", seed},
                          {"embedding_model", embedder->embed("seed").model},
                          {"papers", paper_rows.size()},
                          {"authors", author_rows.size()},
                          {"authorship", authorship_rows.size()},
                          {"citations", citation_rows.size()},
                          {"embeddings", embedding_rows.size()},
                          {"institutions", institutions.size()},
                          {"countries", countries.size()}};
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    std::cout << manifest.dump() << '\n';
    return 0;
}
