#pragma once

#include "isle/corpus.hpp"
#include "isle/text.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace isle::testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

struct MiniPaper {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 2020;
};

struct MiniAuthor {
    std::string id;
    std::string name;
    std::vector<std::string> institutions;
    std::vector<std::string> countries;
};

struct MiniCorpus {
    std::vector<MiniPaper> papers;
    std::vector<MiniAuthor> authors;
    std::vector<std::pair<std::string, std::string>> authorship; // author, paper
    std::vector<std::pair<std::string, std::string>> citations;  // citing, cited
    std::map<std::string, std::vector<double>> embeddings;
};

void write_corpus(const fs::path& dir, const MiniCorpus& corpus);
corpus::CorpusSnapshot load_mini(const MiniCorpus& corpus, std::string embedding_model = {});

fs::path fixture_dir();
fs::path source_dir();
/// The bundled toy corpus, loaded once.
const corpus::CorpusSnapshot& fixture();

std::string read_file(const fs::path& p);

/// The toy corpus read straight from its jsonl files, without the loader.
struct RawFixture {
    struct Paper {
        std::string id;
        std::string title;
        std::string abstract;
        std::optional<int> year;
    };
    struct Author {
        std::string id;
        std::string name;
        std::vector<std::string> institutions;
        std::vector<std::string> countries;
    };
    std::vector<Paper> papers; // file order
    std::map<std::string, Author> authors;
    std::vector<std::pair<std::string, std::string>> authorship; // author, paper
    std::vector<std::pair<std::string, std::string>> citations;  // citing, cited
};
const RawFixture& raw_fixture();

/// Random word drawn from a pool of n synthetic alphabetic terms that the
/// default analyzer keeps intact.
std::vector<std::string> synthetic_terms(std::size_t n, std::mt19937_64& rng);

/// Three disjoint ten-word vocabularies. Each group has `pure` documents of its
/// own words and each pair of groups shares `mixed` documents holding both
/// vocabularies; group_of is the group for pure documents and -1 otherwise.
struct ThreeTopicCorpus {
    std::vector<std::vector<std::string>> vocabularies;
    std::vector<text::TokenList> docs;
    std::vector<int> group_of;
};
ThreeTopicCorpus three_topic_corpus(std::uint64_t seed, std::size_t pure = 12, std::size_t mixed = 12);

} // namespace isle::testing
