#include "support.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace isle::testing {

using nlohmann::json;

TempDir::TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    for (;;) {
        auto candidate = fs::temp_directory_path() / ("isle-test-" + std::to_string(rng()));
        if (fs::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_corpus(const fs::path& dir, const MiniCorpus& c) {
    fs::create_directories(dir);
    std::ofstream papers(dir / "papers.jsonl");
    for (const auto& p : c.papers) {
        json j{{"paper_id", p.id}, {"title", p.title}, {"abstract", p.abstract}};
        if (p.year != corpus::kUnknownYear) j["publication_year"] = p.year;
        papers << j.dump() << '\n';
    }
    std::ofstream authors(dir / "authors.jsonl");
    for (const auto& a : c.authors) {
        authors << json{{"author_id", a.id},
                        {"name", a.name},
                        {"institution_ids", a.institutions},
                        {"country_codes", a.countries}}
                       .dump()
                << '\n';
    }
    std::ofstream authorship(dir / "authorship.jsonl");
    for (const auto& [a, p] : c.authorship) {
        authorship << json{{"author_id", a}, {"paper_id", p}}.dump() << '\n';
    }
    std::ofstream citations(dir / "citations.jsonl");
    for (const auto& [from, to] : c.citations) {
        citations << json{{"citing_paper_id", from}, {"cited_paper_id", to}}.dump() << '\n';
    }
    if (!c.embeddings.empty()) {
        std::ofstream emb(dir / "embeddings.jsonl");
        for (const auto& [id, v] : c.embeddings) {
            emb << json{{"paper_id", id}, {"vector", v}}.dump() << '\n';
        }
    }
}

corpus::CorpusSnapshot load_mini(const MiniCorpus& c, std::string embedding_model) {
    TempDir dir;
    write_corpus(dir.path(), c);
    return corpus::load_corpus(corpus::CorpusPaths::in_directory(dir.path()), {},
                               std::move(embedding_model));
}

namespace {

std::vector<json> read_jsonl(const fs::path& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

} // namespace

const RawFixture& raw_fixture() {
    static const RawFixture raw = [] {
        RawFixture r;
        for (const auto& j : read_jsonl(fixture_dir() / "papers.jsonl")) {
            RawFixture::Paper p{j["paper_id"], j["title"], j["abstract"], std::nullopt};
            if (j.contains("publication_date")) {
                p.year = std::stoi(j["publication_date"].get<std::string>().substr(0, 4));
            } else if (j.contains("publication_year")) {
                p.year = j["publication_year"].get<int>();
            } else if (j.contains("submitted_date")) {
                p.year = std::stoi(j["submitted_date"].get<std::string>().substr(0, 4));
            }
            r.papers.push_back(std::move(p));
        }
        for (const auto& j : read_jsonl(fixture_dir() / "authors.jsonl")) {
            r.authors[j["author_id"]] = {j["author_id"], j["name"], j["institution_ids"],
                                         j["country_codes"]};
        }
        for (const auto& j : read_jsonl(fixture_dir() / "authorship.jsonl")) {
            r.authorship.emplace_back(j["author_id"], j["paper_id"]);
        }
        for (const auto& j : read_jsonl(fixture_dir() / "citations.jsonl")) {
            r.citations.emplace_back(j["citing_paper_id"], j["cited_paper_id"]);
        }
        return r;
    }();
    return raw;
}

fs::path fixture_dir() { return ISLE_FIXTURE_DIR; }
fs::path source_dir() { return ISLE_SOURCE_DIR; }

const corpus::CorpusSnapshot& fixture() {
    static const corpus::CorpusSnapshot snap = [] {
        auto manifest = json::parse(read_file(fixture_dir() / "manifest.json"));
        return corpus::load_corpus(corpus::CorpusPaths::in_directory(fixture_dir()), {},
                                   manifest.at("embedding_model").get<std::string>());
    }();
    return snap;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> synthetic_terms(std::size_t n, std::mt19937_64& rng) {
    static const std::string consonants = "bcdfghjklmnpqrtvwxz";
    static const std::string vowels = "aiou";
    text::AnalyzerConfig cfg;
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
        std::string w;
        const std::size_t syllables = 2 + rng() % 2;
        for (std::size_t s = 0; s < syllables; ++s) {
            w += consonants[rng() % consonants.size()];
            w += vowels[rng() % vowels.size()];
            w += consonants[rng() % consonants.size()];
        }
        auto analyzed = text::analyze(w, cfg);
        if (analyzed.size() == 1 && analyzed[0] == w && seen.insert(w).second) out.push_back(w);
    }
    return out;
}

ThreeTopicCorpus three_topic_corpus(std::uint64_t seed, std::size_t pure, std::size_t mixed) {
    std::mt19937_64 rng(seed);
    auto pool = synthetic_terms(30, rng);
    ThreeTopicCorpus c;
    for (std::size_t g = 0; g < 3; ++g) {
        c.vocabularies.emplace_back(pool.begin() + static_cast<long>(g * 10),
                                    pool.begin() + static_cast<long>((g + 1) * 10));
    }
    const std::vector<std::vector<std::size_t>> kinds{{0}, {1}, {2}, {0, 1}, {1, 2}, {2, 0}};
    for (std::size_t kind = 0; kind < kinds.size(); ++kind) {
        for (std::size_t i = 0, n = kind < 3 ? pure : mixed; i < n; ++i) {
            text::TokenList doc;
            for (auto g : kinds[kind]) {
                for (const auto& w : c.vocabularies[g]) {
                    for (std::size_t r = 0, reps = 1 + rng() % 3; r < reps; ++r) doc.push_back(w);
                }
            }
            std::shuffle(doc.begin(), doc.end(), rng);
            c.docs.push_back(std::move(doc));
            c.group_of.push_back(kind < 3 ? static_cast<int>(kind) : -1);
        }
    }
    return c;
}

} // namespace isle::testing
