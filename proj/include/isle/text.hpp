#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace isle::text {

using TokenList = std::vector<std::string>;

/// The bundled English stop-word list (lowercase, sorted).
const std::set<std::string>& bundled_stopwords();

/// Reads a one-word-per-line list; blank lines and `#` comments are skipped.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

struct AnalyzerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords = bundled_stopwords();
    bool stem = true;
    std::size_t min_token_len = 2;
    std::size_t max_token_len = 40;

    /// Throws Error(invalid_argument) when the length bounds are inconsistent.
    void validate() const;

    /// Stable hash of every setting; recorded in index manifests.
    std::string fingerprint() const;
};

/// Splits on any non-alphanumeric ASCII byte. Non-ASCII bytes are separators too.
TokenList tokenize(std::string_view text, bool lowercase);

/// Tokenize, drop out-of-bounds tokens and stopwords, then stem.
///
/// Stemming is iterated to a fixed point and the length/stopword checks are
/// re-applied to the stem, so analyzing the joined output reproduces it.
TokenList analyze(std::string_view text, const AnalyzerConfig& config);

/// Analyzer for person names: lowercase tokens, no stopwords, no stemming.
TokenList analyze_name(std::string_view name);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> sorted_terms, std::vector<std::size_t> df,
               std::size_t total_docs);

    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    std::size_t total_docs() const noexcept { return total_docs_; }

    std::optional<std::size_t> find(std::string_view term) const;
    const std::string& term(std::size_t index) const { return terms_.at(index); }
    std::size_t df(std::size_t index) const { return df_.at(index); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }

private:
    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t total_docs_ = 0;
};

/// Terms with df < min_df or df / N > max_df_ratio are excluded; indices follow
/// lexicographic term order.
Vocabulary build_vocabulary(std::span<const TokenList> docs, std::size_t min_df,
                            double max_df_ratio);

} // namespace isle::text
