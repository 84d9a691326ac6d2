#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace isle::corpus {

inline constexpr int kUnknownYear = 0;
inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;

struct PaperRecord {
    std::string paper_id;
    std::optional<std::string> arxiv_id;
    std::string title;
    std::string abstract;
    int publication_year = kUnknownYear;
    std::optional<std::string> submitted_date;
    std::optional<std::string> doi;
    std::string subject;

    bool operator==(const PaperRecord&) const = default;
};

struct AuthorRecord {
    std::string author_id;
    std::string name;
    std::vector<std::string> institution_ids;
    std::vector<std::string> country_codes;

    bool operator==(const AuthorRecord&) const = default;
};

struct AuthorshipRecord {
    std::string author_id;
    std::string paper_id;

    auto operator<=>(const AuthorshipRecord&) const = default;
};

struct CitationRecord {
    std::string citing_paper_id;
    std::string cited_paper_id;

    auto operator<=>(const CitationRecord&) const = default;
};

struct EmbeddingRecord {
    std::string paper_id;
    std::vector<double> vector;

    bool operator==(const EmbeddingRecord&) const = default;
};

struct CorpusStats {
    std::size_t paper_count = 0;
    std::size_t author_count = 0;
    std::size_t institution_count = 0;
    std::size_t country_count = 0;
    std::size_t citation_count = 0;
    double avg_citations_per_paper = 0.0;

    bool operator==(const CorpusStats&) const = default;
};

/// strict: duplicate ids and unresolvable years are fatal.
/// lenient: duplicates are dropped (first wins), unresolvable years become 0.
enum class Strictness { strict, lenient };

/// Applies to citations, authorship pairs, and embeddings whose referenced
/// paper/author is absent from the corpus.
enum class DanglingPolicy { strict, drop };

struct ValidationPolicy {
    Strictness mode = Strictness::lenient;
    DanglingPolicy dangling = DanglingPolicy::drop;
};

struct IngestReport {
    std::map<std::string, std::size_t> malformed; // per file kind
    std::size_t duplicate_ids = 0;
    std::size_t dangling = 0;
    std::size_t self_citations = 0;
    std::size_t duplicate_citations = 0;
    std::size_t duplicate_authorship = 0;
    std::size_t invalid_country_codes = 0;
    std::size_t unknown_years = 0;
    std::size_t missing_embeddings = 0;

    std::size_t malformed_total() const;
    bool operator==(const IngestReport&) const = default;
};

struct CorpusPaths {
    std::filesystem::path papers;
    std::filesystem::path authors;
    std::filesystem::path authorship;
    std::filesystem::path citations;
    std::optional<std::filesystem::path> embeddings;

    /// The five conventional file names inside `dir`; embeddings only if present.
    static CorpusPaths in_directory(const std::filesystem::path& dir);
};

/// Immutable, validated corpus. Papers are held in paper_id order and a
/// paper's position in that order is its ordinal in every index built from
/// the snapshot.
class CorpusSnapshot {
public:
    const std::vector<PaperRecord>& papers() const noexcept { return papers_; }
    const std::vector<AuthorRecord>& authors() const noexcept { return authors_; }
    const std::vector<AuthorshipRecord>& authorship() const noexcept { return authorship_; }
    const std::vector<CitationRecord>& citations() const noexcept { return citations_; }
    const std::map<std::string, std::vector<double>>& embeddings() const noexcept {
        return embeddings_;
    }
    std::size_t embedding_dimension() const noexcept { return embedding_dim_; }
    const std::string& embedding_model() const noexcept { return embedding_model_; }
    const CorpusStats& stats() const noexcept { return stats_; }
    const IngestReport& report() const noexcept { return report_; }

    /// SHA-256 over the canonical serialized form.
    const std::string& content_hash() const noexcept { return content_hash_; }

    std::optional<std::size_t> ordinal_of(std::string_view paper_id) const;
    const AuthorRecord* find_author(std::string_view author_id) const;

    // Denormalized per-paper views, indexed by ordinal.
    const std::vector<std::string>& paper_authors(std::size_t ordinal) const {
        return paper_authors_.at(ordinal);
    }
    const std::vector<std::string>& paper_institutions(std::size_t ordinal) const {
        return paper_institutions_.at(ordinal);
    }
    const std::vector<std::string>& paper_countries(std::size_t ordinal) const {
        return paper_countries_.at(ordinal);
    }
    /// Ordinals of papers cited by `ordinal`, ascending.
    const std::vector<std::size_t>& cited_by_paper(std::size_t ordinal) const {
        return outgoing_.at(ordinal);
    }

    bool operator==(const CorpusSnapshot& other) const;

private:
    friend class SnapshotBuilder;

    std::vector<PaperRecord> papers_;
    std::vector<AuthorRecord> authors_;
    std::vector<AuthorshipRecord> authorship_;
    std::vector<CitationRecord> citations_;
    std::map<std::string, std::vector<double>> embeddings_;
    std::size_t embedding_dim_ = 0;
    std::string embedding_model_;
    CorpusStats stats_;
    IngestReport report_;
    std::string content_hash_;

    std::unordered_map<std::string, std::size_t> paper_index_;
    std::unordered_map<std::string, std::size_t> author_index_;
    std::vector<std::vector<std::string>> paper_authors_;
    std::vector<std::vector<std::string>> paper_institutions_;
    std::vector<std::vector<std::string>> paper_countries_;
    std::vector<std::vector<std::size_t>> outgoing_;
};

CorpusSnapshot load_corpus(const CorpusPaths& paths, const ValidationPolicy& policy = {},
                           std::string embedding_model = {});

CorpusStats compute_stats(const CorpusSnapshot& snapshot);

/// nullptr when absent. Ids are case-sensitive.
const PaperRecord* get_paper(const CorpusSnapshot& snapshot, std::string_view paper_id);

/// Writes the canonical line files plus `manifest.json` into `dir`.
void persist_snapshot(const CorpusSnapshot& snapshot, const std::filesystem::path& dir);

/// Loads a directory written by persist_snapshot and checks its manifest hash.
CorpusSnapshot load_snapshot(const std::filesystem::path& dir);

/// Reads only the manifest's content hash (cheap staleness checks).
std::string read_snapshot_hash(const std::filesystem::path& dir);

std::string stats_to_json(const CorpusStats& stats);

} // namespace isle::corpus
