#pragma once

#include "isle/corpus.hpp"
#include "isle/embedder.hpp"
#include "isle/lexical_index.hpp"
#include "isle/ranking.hpp"
#include "isle/text.hpp"
#include "isle/vector_index.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isle::retrieval {

struct FilterSpec {
    std::optional<std::pair<int, int>> year_range; // inclusive
    std::vector<std::string> authors;              // display names
    std::vector<std::string> institutions;         // institution ids
    std::vector<std::string> countries;            // ISO alpha-2

    bool empty() const noexcept {
        return !year_range && authors.empty() && institutions.empty() && countries.empty();
    }
    void validate() const;
};

struct QueryRequest {
    std::string text;
    FilterSpec filters;
    std::size_t limit = 5000;
    std::size_t rrf_k = 60;
    std::optional<std::size_t> per_path_depth; // defaults to 2 * limit

    std::size_t depth() const noexcept { return per_path_depth.value_or(2 * limit); }
    void validate() const;
};

/// Lowercase, punctuation to spaces, collapse whitespace, trim.
std::string preprocess_query(std::string_view text);

/// std::nullopt means "no filter: every document". Kinds intersect; values
/// within one kind are alternatives. Author names match on token equality.
std::optional<DocSet> resolve_filter_set(const corpus::CorpusSnapshot& snapshot,
                                         const FilterSpec& filters);

/// True when the paper satisfies every active filter kind.
bool paper_matches(const corpus::CorpusSnapshot& snapshot, std::size_t ordinal,
                   const FilterSpec& filters);

/// RRF(D) = sum over lists of 1 / (k + rank). Documents absent from a list
/// contribute nothing from it. Ties: better best-rank, then paper_id.
RankedList rrf_fuse(std::span<const RankedList> lists, std::size_t k);

struct RetrievalConfig {
    text::AnalyzerConfig analyzer;
    lexical::FieldWeights weights;
    bool fuzzy = true;
};

struct RetrievalResult {
    RankedList fused;
    RankedList lexical;
    RankedList semantic;
    std::string normalized_query;
    bool semantic_degraded = false;
    std::string degradation_reason;
};

/// Runs both paths concurrently over the filtered set, fuses, truncates to
/// request.limit. `embedder` may be null (lexical-only, flagged degraded).
/// Throws Error(consistency) when the indexes were not built from `snapshot`,
/// Error(model_mismatch) when the embedder's model differs from the index's.
RetrievalResult retrieve(const corpus::CorpusSnapshot& snapshot,
                         const lexical::InvertedIndex& lexical_index,
                         const vec::VectorIndex& vector_index, vec::Embedder* embedder,
                         const QueryRequest& request, const RetrievalConfig& config = {});

} // namespace isle::retrieval
