#include "isle/lexical_index.hpp"

#include "isle/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace isle::lexical {

using nlohmann::json;
namespace fs = std::filesystem;

void Bm25Params::validate() const {
    if (!(k1 >= 0.0)) throw Error(Errc::invalid_argument, "bm25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw Error(Errc::invalid_argument, "bm25 b must lie in [0, 1]");
}

void FieldWeights::validate() const {
    if (!(title_weight > 0.0 && abstract_weight > 0.0 && phrase_bonus_factor > 0.0)) {
        throw Error(Errc::invalid_argument, "field weights must be positive");
    }
}

std::string_view field_name(Field f) noexcept {
    return f == Field::title ? "title" : "abstract";
}

double bm25_idf(std::size_t df, std::size_t doc_count) {
    const auto n = static_cast<double>(doc_count);
    const auto d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_term_score(double tf, double doc_len, double avgdl, double idf,
                       const Bm25Params& params) {
    if (!(avgdl > 0.0)) {
        throw Error(Errc::invalid_index, "avgdl must be positive");
    }
    if (tf <= 0.0) return 0.0;
    const double norm = params.k1 * (1.0 - params.b + params.b * doc_len / avgdl);
    return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

bool within_one_edit(std::string_view a, std::string_view b) {
    if (a == b) return true;
    const auto la = a.size(), lb = b.size();
    if (la > lb + 1 || lb > la + 1) return false;
    auto tail = [](std::string_view s, std::size_t from) {
        return from >= s.size() ? std::string_view{} : s.substr(from);
    };
    std::size_t i = 0;
    while (i < la && i < lb && a[i] == b[i]) ++i;
    if (la == lb) {
        // substitution, or adjacent transposition
        if (tail(a, i + 1) == tail(b, i + 1)) return true;
        return i + 1 < la && a[i] == b[i + 1] && a[i + 1] == b[i] && tail(a, i + 2) == tail(b, i + 2);
    }
    // one insertion/deletion
    return la < lb ? tail(a, i) == tail(b, i + 1) : tail(a, i + 1) == tail(b, i);
}

bool contains_phrase(std::span<const std::string> haystack, std::span<const std::string> needle) {
    if (needle.size() < 2 || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

const std::vector<Posting>* InvertedIndex::find(Field f, std::string_view term) const {
    const auto& m = fields_[idx(f)].postings;
    auto it = m.find(term);
    return it == m.end() ? nullptr : &it->second;
}

std::size_t InvertedIndex::df(Field f, std::string_view term) const {
    const auto* p = find(f, term);
    return p ? p->size() : 0;
}

double InvertedIndex::idf(Field f, std::string_view term) const {
    return bm25_idf(df(f, term), doc_count());
}

void InvertedIndex::finalize() {
    std::set<std::string> terms;
    for (auto& fd : fields_) {
        std::uint64_t total = 0;
        for (auto len : fd.lengths) total += len;
        fd.avgdl = fd.lengths.empty()
                       ? 0.0
                       : static_cast<double>(total) / static_cast<double>(fd.lengths.size());
        for (const auto& [t, _] : fd.postings) terms.insert(t);
    }
    all_terms_.assign(terms.begin(), terms.end());
}

bool InvertedIndex::operator==(const InvertedIndex& o) const {
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        if (fields_[f].postings != o.fields_[f].postings ||
            fields_[f].lengths != o.fields_[f].lengths) {
            return false;
        }
    }
    return paper_ids_ == o.paper_ids_ && title_tokens_ == o.title_tokens_ &&
           params_.k1 == o.params_.k1 && params_.b == o.params_.b &&
           analyzer_fingerprint_ == o.analyzer_fingerprint_ && snapshot_hash_ == o.snapshot_hash_;
}

InvertedIndex build_lexical_index(const corpus::CorpusSnapshot& snapshot,
                                  const text::AnalyzerConfig& analyzer, const Bm25Params& params) {
    analyzer.validate();
    params.validate();
    InvertedIndex index;
    index.params_ = params;
    index.analyzer_fingerprint_ = analyzer.fingerprint();
    index.snapshot_hash_ = snapshot.content_hash();

    const auto& papers = snapshot.papers();
    index.paper_ids_.reserve(papers.size());
    for (auto& fd : index.fields_) fd.lengths.reserve(papers.size());

    for (std::size_t ord = 0; ord < papers.size(); ++ord) {
        const auto& p = papers[ord];
        index.paper_ids_.push_back(p.paper_id);
        std::array<text::TokenList, kFieldCount> tokens{text::analyze(p.title, analyzer),
                                                         text::analyze(p.abstract, analyzer)};
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            auto& fd = index.fields_[f];
            fd.lengths.push_back(static_cast<std::uint32_t>(tokens[f].size()));
            std::map<std::string_view, std::uint32_t> tf;
            for (const auto& t : tokens[f]) ++tf[t];
            for (const auto& [term, count] : tf) {
                auto it = fd.postings.find(term);
                if (it == fd.postings.end()) {
                    it = fd.postings.emplace(std::string(term), std::vector<Posting>{}).first;
                }
                it->second.push_back(Posting{static_cast<std::uint32_t>(ord), count});
            }
        }
        index.title_tokens_.push_back(std::move(tokens[0]));
    }
    index.finalize();
    return index;
}

namespace {

std::string join(const text::TokenList& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read " + path.string());
    return in;
}

} // namespace

void InvertedIndex::save(const fs::path& dir) const {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "docs.tsv");
        for (std::size_t d = 0; d < paper_ids_.size(); ++d) {
            out << d << '\t' << paper_ids_[d] << '\t' << fields_[0].lengths[d] << '\t'
                << fields_[1].lengths[d] << '\t' << join(title_tokens_[d]) << '\n';
        }
    }
    for (auto f : kFields) {
        auto out = open_out(dir / ("postings." + std::string(field_name(f)) + ".tsv"));
        for (const auto& [term, plist] : fields_[idx(f)].postings) {
            out << term << '\t' << plist.size() << '\t';
            for (std::size_t i = 0; i < plist.size(); ++i) {
                if (i) out << ',';
                out << plist[i].doc << ':' << plist[i].tf;
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "terms.txt");
        for (const auto& t : all_terms_) out << t << '\n';
    }
    json manifest{{"format", "isle-lexical-v1"},
                  {"doc_count", paper_ids_.size()},
                  {"term_count", all_terms_.size()},
                  {"k1", params_.k1},
                  {"b", params_.b},
                  {"analyzer_fingerprint", analyzer_fingerprint_},
                  {"snapshot_hash", snapshot_hash_}};
    open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

InvertedIndex InvertedIndex::load(const fs::path& dir) {
    InvertedIndex index;
    json manifest = json::parse(open_in(dir / "manifest.json"), nullptr, false);
    if (!manifest.is_object() || manifest.value("format", "") != "isle-lexical-v1") {
        throw Error(Errc::parse, "bad lexical index manifest in " + dir.string());
    }
    index.params_.k1 = manifest.at("k1").get<double>();
    index.params_.b = manifest.at("b").get<double>();
    index.analyzer_fingerprint_ = manifest.at("analyzer_fingerprint").get<std::string>();
    index.snapshot_hash_ = manifest.at("snapshot_hash").get<std::string>();

    auto docs = open_in(dir / "docs.tsv");
    std::string line;
    while (std::getline(docs, line)) {
        std::istringstream ss(line);
        std::string ord, id, tlen, alen, title;
        std::getline(ss, ord, '\t');
        std::getline(ss, id, '\t');
        std::getline(ss, tlen, '\t');
        std::getline(ss, alen, '\t');
        std::getline(ss, title);
        if (std::stoul(ord) != index.paper_ids_.size()) {
            throw Error(Errc::parse, "lexical docs file out of order");
        }
        index.paper_ids_.push_back(id);
        index.fields_[0].lengths.push_back(static_cast<std::uint32_t>(std::stoul(tlen)));
        index.fields_[1].lengths.push_back(static_cast<std::uint32_t>(std::stoul(alen)));
        index.title_tokens_.push_back(text::tokenize(title, false));
    }
    if (index.paper_ids_.size() != manifest.at("doc_count").get<std::size_t>()) {
        throw Error(Errc::consistency, "lexical doc count does not match manifest");
    }
    for (auto f : kFields) {
        auto in = open_in(dir / ("postings." + std::string(field_name(f)) + ".tsv"));
        auto& m = index.fields_[idx(f)].postings;
        while (std::getline(in, line)) {
            auto t1 = line.find('\t');
            auto t2 = line.find('\t', t1 + 1);
            if (t1 == std::string::npos || t2 == std::string::npos) {
                throw Error(Errc::parse, "bad postings line");
            }
            std::vector<Posting> plist;
            plist.reserve(std::stoul(line.substr(t1 + 1, t2 - t1 - 1)));
            std::istringstream ps(line.substr(t2 + 1));
            std::string item;
            while (std::getline(ps, item, ',')) {
                auto colon = item.find(':');
                plist.push_back(Posting{static_cast<std::uint32_t>(std::stoul(item.substr(0, colon))),
                                        static_cast<std::uint32_t>(std::stoul(item.substr(colon + 1)))});
            }
            m.emplace(line.substr(0, t1), std::move(plist));
        }
    }
    index.finalize();
    return index;
}

namespace {

// Indexed terms within one edit of `term`, lexicographically smallest first.
std::vector<std::string_view> fuzzy_expansions(const InvertedIndex& index, std::string_view term,
                                               const FuzzyOptions& opts) {
    std::vector<std::string_view> out;
    for (const auto& candidate : index.all_terms()) {
        if (out.size() >= opts.max_expansions) break;
        if (candidate != term && within_one_edit(candidate, term)) out.push_back(candidate);
    }
    return out;
}

} // namespace

RankedList lexical_search(const InvertedIndex& index, const LexicalQuery& query) {
    if (query.top_k < 1) throw Error(Errc::invalid_argument, "top_k must be >= 1");
    query.weights.validate();
    RankedList result;
    result.source = RankSource::lexical;
    if (query.tokens.empty() || index.doc_count() == 0) return result;

    const auto n = index.doc_count();
    std::array<std::vector<double>, kFieldCount> field_score;
    for (auto& v : field_score) v.assign(n, 0.0);
    std::vector<bool> touched(n, false);

    auto accumulate = [&](std::string_view term, double idf_scale) {
        for (auto f : kFields) {
            const auto* plist = index.find(f, term);
            if (plist == nullptr) continue;
            const double idf = index.idf(f, term) * idf_scale;
            auto& acc = field_score[static_cast<std::size_t>(f)];
            for (const auto& p : *plist) {
                if (query.filter != nullptr && !query.filter->contains(p.doc)) continue;
                acc[p.doc] += bm25_term_score(p.tf, index.doc_length(f, p.doc), index.avgdl(f), idf,
                                              index.params());
                touched[p.doc] = true;
            }
        }
    };

    for (const auto& term : query.tokens) {
        bool present = index.find(Field::title, term) || index.find(Field::abstract, term);
        if (present) {
            accumulate(term, 1.0);
        } else if (query.fuzzy && term.size() >= query.fuzzy_options.min_term_len) {
            for (auto expanded : fuzzy_expansions(index, term, query.fuzzy_options)) {
                accumulate(expanded, query.fuzzy_options.idf_discount);
            }
        }
    }

    std::vector<std::pair<std::size_t, double>> scored;
    for (std::size_t d = 0; d < n; ++d) {
        if (!touched[d]) continue;
        double title = field_score[0][d];
        if (contains_phrase(index.title_tokens(d), query.tokens)) {
            title *= query.weights.phrase_bonus_factor;
        }
        scored.emplace_back(d, query.weights.title_weight * title +
                                   query.weights.abstract_weight * field_score[1][d]);
    }
    auto by_rank = [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return index.paper_id(a.first) < index.paper_id(b.first);
    };
    const auto keep = std::min(query.top_k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), by_rank);
    scored.resize(keep);

    std::vector<std::pair<std::string, double>> ordered;
    ordered.reserve(keep);
    for (const auto& [d, s] : scored) ordered.emplace_back(index.paper_id(d), s);
    return make_ranked_list(std::move(ordered), RankSource::lexical);
}

} // namespace isle::lexical
