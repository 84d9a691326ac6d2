#include "isle/text.hpp"

#include "isle/error.hpp"
#include "isle/hash.hpp"
#include "isle/stemmer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace isle::text {

const std::set<std::string>& bundled_stopwords() {
    // v1 list. Changing it changes every analyzer fingerprint.
    static const std::set<std::string> kWords{
        "a",          "about",    "above",   "after",     "again",   "against",  "all",
        "also",       "am",       "an",      "and",       "any",     "are",      "aren",
        "as",         "at",       "be",      "because",   "been",    "before",   "being",
        "below",      "between",  "both",    "but",       "by",      "can",      "cannot",
        "could",      "couldn",   "did",     "didn",      "do",      "does",     "doesn",
        "doing",      "don",      "down",    "during",    "each",    "either",   "etc",
        "few",        "for",      "from",    "further",   "had",     "hadn",     "has",
        "hasn",       "have",     "haven",   "having",    "he",      "her",      "here",
        "hers",       "herself",  "him",     "himself",   "his",     "how",      "however",
        "i",          "if",       "in",      "into",      "is",      "isn",      "it",
        "its",        "itself",   "just",    "ll",        "may",     "me",       "might",
        "more",       "most",     "must",    "mustn",     "my",      "myself",   "neither",
        "no",         "nor",      "not",     "now",       "of",      "off",      "on",
        "once",       "only",     "or",      "other",     "our",     "ours",     "ourselves",
        "out",        "over",     "own",     "re",        "same",    "shall",    "shan",
        "she",        "should",   "shouldn", "so",        "some",    "such",     "than",
        "that",       "the",      "their",   "theirs",    "them",    "themselves", "then",
        "there",      "therefore", "these",  "they",      "this",    "those",    "through",
        "thus",       "to",       "too",     "under",     "until",   "up",       "upon",
        "us",         "ve",       "very",    "via",       "was",     "wasn",     "we",
        "were",       "weren",    "what",    "when",      "where",   "whereas",  "whether",
        "which",      "while",    "who",     "whom",      "whose",   "why",      "will",
        "with",       "within",   "without", "won",       "would",   "wouldn",   "yet",
        "you",        "your",     "yours",   "yourself",  "yourselves",
    };
    return kWords;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io, "cannot read stopword file: " + path.string());
    }
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t\r");
        std::string w = line.substr(first, last - first + 1);
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        words.insert(std::move(w));
    }
    return words;
}

void AnalyzerConfig::validate() const {
    if (min_token_len < 1) {
        throw Error(Errc::invalid_argument, "min_token_len must be >= 1");
    }
    if (max_token_len < min_token_len) {
        throw Error(Errc::invalid_argument, "max_token_len must be >= min_token_len");
    }
}

std::string AnalyzerConfig::fingerprint() const {
    Sha256 h;
    h.update("analyzer-v1;");
    h.update(lowercase ? "lc=1;" : "lc=0;");
    h.update(stem ? "stem=porter;" : "stem=none;");
    h.update("min=" + std::to_string(min_token_len) + ";max=" + std::to_string(max_token_len) + ";");
    for (const auto& w : stopwords) {
        h.update(w);
        h.update("\n");
    }
    return h.hex_digest();
}

namespace {

bool is_alnum_ascii(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool length_ok(const std::string& t, const AnalyzerConfig& cfg) {
    return t.size() >= cfg.min_token_len && t.size() <= cfg.max_token_len;
}

std::string stem_fixpoint(std::string token) {
    // Porter is not idempotent on every word; a handful of passes always settles.
    for (int pass = 0; pass < 8; ++pass) {
        std::string next = porter_stem(token);
        if (next == token) break;
        token = std::move(next);
    }
    return token;
}

} // namespace

TokenList tokenize(std::string_view text, bool lowercase) {
    TokenList out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_alnum_ascii(c)) {
            cur.push_back(lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

TokenList analyze(std::string_view text, const AnalyzerConfig& config) {
    TokenList out;
    for (auto& tok : tokenize(text, config.lowercase)) {
        if (!length_ok(tok, config) || config.stopwords.contains(tok)) continue;
        if (config.stem) {
            tok = stem_fixpoint(std::move(tok));
            if (!length_ok(tok, config) || config.stopwords.contains(tok)) continue;
        }
        out.push_back(std::move(tok));
    }
    return out;
}

TokenList analyze_name(std::string_view name) { return tokenize(name, true); }

Vocabulary::Vocabulary(std::vector<std::string> sorted_terms, std::vector<std::size_t> df,
                       std::size_t total_docs)
    : terms_(std::move(sorted_terms)), df_(std::move(df)), total_docs_(total_docs) {
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        index_.emplace(terms_[i], i);
    }
}

std::optional<std::size_t> Vocabulary::find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocabulary(std::span<const TokenList> docs, std::size_t min_df,
                            double max_df_ratio) {
    if (min_df < 1) {
        throw Error(Errc::invalid_argument, "min_df must be >= 1");
    }
    if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) {
        throw Error(Errc::invalid_argument, "max_df_ratio must lie in (0, 1]");
    }
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string_view> seen(doc.begin(), doc.end());
        for (auto t : seen) {
            ++df[std::string(t)];
        }
    }
    const auto n = static_cast<double>(docs.size());
    std::vector<std::string> terms;
    std::vector<std::size_t> counts;
    for (auto& [term, count] : df) {
        if (count < min_df) continue;
        if (static_cast<double>(count) / n > max_df_ratio) continue;
        terms.push_back(term);
        counts.push_back(count);
    }
    return Vocabulary(std::move(terms), std::move(counts), docs.size());
}

} // namespace isle::text
