#pragma once

#include "isle/corpus.hpp"
#include "isle/ranking.hpp"
#include "isle/text.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isle::lexical {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

struct FieldWeights {
    double title_weight = 2.0;
    double abstract_weight = 1.0;
    double phrase_bonus_factor = 1.5;

    void validate() const;
};

/// Expansion of absent query terms to near spellings in the index.
struct FuzzyOptions {
    std::size_t min_term_len = 5;
    std::size_t max_expansions = 10;
    double idf_discount = 0.5;
};

enum class Field : std::size_t { title = 0, abstract = 1 };
inline constexpr std::size_t kFieldCount = 2;
inline constexpr std::array<Field, kFieldCount> kFields{Field::title, Field::abstract};

std::string_view field_name(Field f) noexcept;

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); non-negative for 0 <= df <= N.
double bm25_idf(std::size_t df, std::size_t doc_count);

/// One term's BM25 contribution. Throws Error(invalid_index) when avgdl <= 0.
double bm25_term_score(double tf, double doc_len, double avgdl, double idf,
                       const Bm25Params& params);

/// True when the optimal-string-alignment (restricted Damerau-Levenshtein)
/// distance between a and b is at most 1.
bool within_one_edit(std::string_view a, std::string_view b);

class InvertedIndex {
public:
    using PostingMap = std::map<std::string, std::vector<Posting>, std::less<>>;

    std::size_t doc_count() const noexcept { return paper_ids_.size(); }
    const std::string& paper_id(std::size_t ordinal) const { return paper_ids_.at(ordinal); }
    const std::vector<std::string>& paper_ids() const noexcept { return paper_ids_; }

    const PostingMap& postings(Field f) const { return fields_[idx(f)].postings; }
    /// nullptr when the term is absent from the field.
    const std::vector<Posting>* find(Field f, std::string_view term) const;
    std::size_t df(Field f, std::string_view term) const;
    double idf(Field f, std::string_view term) const;

    std::uint32_t doc_length(Field f, std::size_t ordinal) const {
        return fields_[idx(f)].lengths.at(ordinal);
    }
    double avgdl(Field f) const { return fields_[idx(f)].avgdl; }

    const text::TokenList& title_tokens(std::size_t ordinal) const {
        return title_tokens_.at(ordinal);
    }

    /// Sorted union of the terms of every field.
    const std::vector<std::string>& all_terms() const noexcept { return all_terms_; }

    const Bm25Params& params() const noexcept { return params_; }
    const std::string& analyzer_fingerprint() const noexcept { return analyzer_fingerprint_; }
    const std::string& snapshot_hash() const noexcept { return snapshot_hash_; }

    void save(const std::filesystem::path& dir) const;
    static InvertedIndex load(const std::filesystem::path& dir);

    bool operator==(const InvertedIndex&) const;

private:
    friend InvertedIndex build_lexical_index(const corpus::CorpusSnapshot&,
                                             const text::AnalyzerConfig&, const Bm25Params&);

    struct FieldData {
        PostingMap postings;
        std::vector<std::uint32_t> lengths;
        double avgdl = 0.0;
    };

    static std::size_t idx(Field f) { return static_cast<std::size_t>(f); }
    void finalize();

    std::vector<std::string> paper_ids_;
    std::array<FieldData, kFieldCount> fields_;
    std::vector<text::TokenList> title_tokens_;
    std::vector<std::string> all_terms_;
    Bm25Params params_;
    std::string analyzer_fingerprint_;
    std::string snapshot_hash_;
};

InvertedIndex build_lexical_index(const corpus::CorpusSnapshot& snapshot,
                                  const text::AnalyzerConfig& analyzer,
                                  const Bm25Params& params = {});

struct LexicalQuery {
    std::span<const std::string> tokens;
    FieldWeights weights;
    std::size_t top_k = 10;
    const DocSet* filter = nullptr; // nullptr: every document
    bool fuzzy = false;
    FuzzyOptions fuzzy_options;
};

/// Weighted sum of per-field BM25 with a multiplicative title-phrase bonus.
/// Descending score, ties by paper_id ascending.
RankedList lexical_search(const InvertedIndex& index, const LexicalQuery& query);

/// True when `needle` (length >= 2) occurs contiguously in `haystack`.
bool contains_phrase(std::span<const std::string> haystack, std::span<const std::string> needle);

} // namespace isle::lexical
