#include "isle/retrieval.hpp"

#include "isle/error.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <map>
#include <set>
#include <unordered_map>

namespace isle::retrieval {

void FilterSpec::validate() const {
    if (year_range && year_range->first > year_range->second) {
        throw Error(Errc::invalid_argument, "year_range min must be <= max");
    }
}

void QueryRequest::validate() const {
    if (limit < 1) throw Error(Errc::invalid_argument, "limit must be >= 1");
    if (rrf_k < 1) throw Error(Errc::invalid_argument, "rrf_k must be >= 1");
    if (depth() < limit) throw Error(Errc::invalid_argument, "per_path_depth must be >= limit");
    filters.validate();
}

std::string preprocess_query(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

namespace {

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

struct CompiledFilter {
    const FilterSpec& spec;
    std::set<text::TokenList> author_names;
    std::set<std::string> institutions;
    std::set<std::string> countries;

    explicit CompiledFilter(const FilterSpec& f) : spec(f) {
        for (const auto& a : f.authors) author_names.insert(text::analyze_name(a));
        institutions.insert(f.institutions.begin(), f.institutions.end());
        for (const auto& c : f.countries) countries.insert(upper(c));
    }

    bool matches(const corpus::CorpusSnapshot& s, std::size_t ord) const {
        const auto& paper = s.papers()[ord];
        if (spec.year_range && (paper.publication_year < spec.year_range->first ||
                                paper.publication_year > spec.year_range->second)) {
            return false;
        }
        if (!spec.authors.empty()) {
            bool any = false;
            for (const auto& id : s.paper_authors(ord)) {
                const auto* a = s.find_author(id);
                if (a && author_names.contains(text::analyze_name(a->name))) {
                    any = true;
                    break;
                }
            }
            if (!any) return false;
        }
        auto intersects = [](const std::vector<std::string>& have, const std::set<std::string>& want) {
            return std::any_of(have.begin(), have.end(),
                               [&](const std::string& x) { return want.contains(x); });
        };
        if (!spec.institutions.empty() && !intersects(s.paper_institutions(ord), institutions)) {
            return false;
        }
        if (!spec.countries.empty() && !intersects(s.paper_countries(ord), countries)) {
            return false;
        }
        return true;
    }
};

} // namespace

bool paper_matches(const corpus::CorpusSnapshot& snapshot, std::size_t ordinal,
                   const FilterSpec& filters) {
    return CompiledFilter(filters).matches(snapshot, ordinal);
}

std::optional<DocSet> resolve_filter_set(const corpus::CorpusSnapshot& snapshot,
                                         const FilterSpec& filters) {
    filters.validate();
    if (filters.empty()) return std::nullopt;
    CompiledFilter compiled(filters);
    DocSet set(snapshot.papers().size());
    for (std::size_t ord = 0; ord < snapshot.papers().size(); ++ord) {
        if (compiled.matches(snapshot, ord)) set.insert(ord);
    }
    return set;
}

RankedList rrf_fuse(std::span<const RankedList> lists, std::size_t k) {
    if (k < 1) throw Error(Errc::invalid_argument, "rrf k must be >= 1");
    struct Acc {
        double score = 0.0;
        std::size_t best_rank = 0;
    };
    std::unordered_map<std::string_view, Acc> acc;
    for (const auto& list : lists) {
        for (const auto& e : list.entries) {
            auto& a = acc[e.paper_id];
            a.score += 1.0 / (static_cast<double>(k) + static_cast<double>(e.rank));
            if (a.best_rank == 0 || e.rank < a.best_rank) a.best_rank = e.rank;
        }
    }
    std::vector<std::pair<std::string_view, Acc>> items(acc.begin(), acc.end());
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
        if (x.second.score != y.second.score) return x.second.score > y.second.score;
        if (x.second.best_rank != y.second.best_rank) return x.second.best_rank < y.second.best_rank;
        return x.first < y.first;
    });
    std::vector<std::pair<std::string, double>> ordered;
    ordered.reserve(items.size());
    for (const auto& [id, a] : items) ordered.emplace_back(std::string(id), a.score);
    return make_ranked_list(std::move(ordered), RankSource::fused);
}

RetrievalResult retrieve(const corpus::CorpusSnapshot& snapshot,
                         const lexical::InvertedIndex& lexical_index,
                         const vec::VectorIndex& vector_index, vec::Embedder* embedder,
                         const QueryRequest& request, const RetrievalConfig& config) {
    request.validate();
    if (lexical_index.snapshot_hash() != snapshot.content_hash() ||
        vector_index.snapshot_hash() != snapshot.content_hash()) {
        throw Error(Errc::consistency, "indexes were built from a different corpus snapshot");
    }
    if (lexical_index.analyzer_fingerprint() != config.analyzer.fingerprint()) {
        throw Error(Errc::consistency, "lexical index was built with a different analyzer");
    }

    RetrievalResult result;
    result.normalized_query = preprocess_query(request.text);
    const auto filter = resolve_filter_set(snapshot, request.filters);
    const DocSet* filter_ptr = filter ? &*filter : nullptr;
    const auto depth = request.depth();

    auto lexical_future = std::async(std::launch::async, [&] {
        auto tokens = text::analyze(result.normalized_query, config.analyzer);
        lexical::LexicalQuery q;
        q.tokens = tokens;
        q.weights = config.weights;
        q.top_k = depth;
        q.filter = filter_ptr;
        q.fuzzy = config.fuzzy;
        return lexical::lexical_search(lexical_index, q);
    });

    RankedList semantic;
    semantic.source = RankSource::semantic;
    std::exception_ptr semantic_error;
    if (embedder == nullptr) {
        result.semantic_degraded = true;
        result.degradation_reason = "no embedder configured";
    } else if (vector_index.size() > 0 && !result.normalized_query.empty()) {
        try {
            auto emb = embedder->embed(result.normalized_query);
            if (!vector_index.model_id().empty() && !emb.model.empty() &&
                emb.model != vector_index.model_id()) {
                throw Error(Errc::model_mismatch, "query embedder model '" + emb.model +
                                                      "' differs from index model '" +
                                                      vector_index.model_id() + "'");
            }
            semantic = vec::knn_search(vector_index, emb.vector, depth, filter_ptr);
        } catch (const Error& e) {
            if (e.code() == Errc::embedder_unavailable) {
                result.semantic_degraded = true;
                result.degradation_reason = e.what();
            } else if (e.code() != Errc::invalid_argument) {
                semantic_error = std::current_exception();
            }
        }
    }

    result.lexical = lexical_future.get();
    if (semantic_error) std::rethrow_exception(semantic_error);
    result.semantic = std::move(semantic);

    std::vector<RankedList> inputs{result.lexical};
    if (!result.semantic_degraded) inputs.push_back(result.semantic);
    result.fused = rrf_fuse(inputs, request.rrf_k);
    if (result.fused.entries.size() > request.limit) result.fused.entries.resize(request.limit);
    return result;
}

} // namespace isle::retrieval
