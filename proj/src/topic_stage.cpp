#include "isle/error.hpp"
#include "isle/topics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace isle::topics {

std::string_view to_string(TopicMode mode) noexcept {
    switch (mode) {
    case TopicMode::auto_select: return "auto";
    case TopicMode::nmf: return "nmf";
    case TopicMode::cluster: return "cluster";
    }
    return "auto";
}

std::string_view to_string(TopicPath path) noexcept {
    switch (path) {
    case TopicPath::nmf: return "nmf";
    case TopicPath::cluster: return "cluster";
    case TopicPath::fallback: return "fallback";
    }
    return "fallback";
}

std::optional<TopicMode> parse_topic_mode(std::string_view s) {
    if (s == "auto") return TopicMode::auto_select;
    if (s == "nmf") return TopicMode::nmf;
    if (s == "cluster") return TopicMode::cluster;
    return std::nullopt;
}

namespace {

bool usable_embedding(const TopicDocument& d) {
    if (!d.embedding || d.embedding->empty()) return false;
    return std::any_of(d.embedding->begin(), d.embedding->end(), [](double x) { return x != 0.0; });
}

CoherenceReport coherence_of(const std::vector<TopicSummary>& summaries,
                             std::span<const text::TokenList> docs) {
    CoherenceReport report;
    double total = 0.0;
    for (const auto& s : summaries) {
        if (s.topic_id == kOutlierTopic) continue;
        ++report.k;
        std::vector<std::string> words;
        for (const auto& kw : s.keywords) words.push_back(kw.first);
        const double v = words.size() >= 2 ? compute_npmi(words, docs).mean : 0.0;
        report.per_topic.push_back(v);
        total += v;
    }
    if (report.k > 0) report.mean_npmi = total / static_cast<double>(report.k);
    return report;
}

std::vector<TopicAssignment> hard_assignments(std::span<const TopicDocument> docs,
                                              const std::vector<int>& labels) {
    std::vector<TopicAssignment> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out.push_back(TopicAssignment{docs[i].paper_id, labels[i], 1.0, {}});
    }
    return out;
}

TopicStageResult fallback_stage(std::span<const TopicDocument> docs,
                                const std::vector<text::TokenList>& tokens,
                                const TopicStageOptions& options) {
    TopicStageResult r;
    r.path = TopicPath::fallback;
    std::vector<int> labels(docs.size(), 0);
    r.summaries = ctfidf_keywords(labels, tokens, docs.size(), options.top_n);
    r.assignments = hard_assignments(docs, labels);
    r.coherence = coherence_of(r.summaries, tokens);
    return r;
}

// Runs the cluster path; returns nullopt when no cluster survives.
std::optional<TopicStageResult> cluster_stage(std::span<const TopicDocument> docs,
                                              const std::vector<text::TokenList>& tokens,
                                              const std::vector<std::size_t>& eligible,
                                              const TopicStageOptions& options) {
    std::vector<std::size_t> rows;
    std::size_t dim = 0;
    for (auto i : eligible) {
        if (!usable_embedding(docs[i])) continue;
        if (dim == 0) dim = docs[i].embedding->size();
        if (docs[i].embedding->size() != dim) {
            throw Error(Errc::shape, "embedding dimensions differ across documents");
        }
        rows.push_back(i);
    }
    if (dim < 2) return std::nullopt;
    const std::size_t p = std::min(options.reduced_dim, dim - 1);
    if (rows.size() < std::max<std::size_t>(p, 1)) return std::nullopt;

    Eigen::MatrixXd E(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            E(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                (*docs[rows[r]].embedding)[c];
        }
    }
    auto model = density_cluster(reduce_dimensions(E, p, options.seed), options.min_cluster_size);
    if (model.cluster_count == 0) return std::nullopt;

    std::vector<int> labels(docs.size(), kOutlierTopic);
    for (std::size_t r = 0; r < rows.size(); ++r) labels[rows[r]] = model.labels[r];

    TopicStageResult result;
    result.path = TopicPath::cluster;
    result.summaries = ctfidf_keywords(labels, tokens, docs.size(), options.top_n);
    result.assignments = hard_assignments(docs, labels);
    std::vector<text::TokenList> eligible_tokens;
    for (auto i : eligible) eligible_tokens.push_back(tokens[i]);
    result.coherence = coherence_of(result.summaries, eligible_tokens);
    return result;
}

std::optional<TopicStageResult> nmf_stage(std::span<const TopicDocument> docs,
                                          const std::vector<text::TokenList>& tokens,
                                          const std::vector<std::size_t>& eligible,
                                          const TopicStageOptions& options) {
    std::vector<text::TokenList> sub;
    std::vector<std::string> ids;
    for (auto i : eligible) {
        sub.push_back(tokens[i]);
        ids.push_back(docs[i].paper_id);
    }
    auto vocab = text::build_vocabulary(sub, options.min_df, options.max_df_ratio);
    if (vocab.empty()) return std::nullopt;
    auto X = build_tfidf(sub, vocab);
    if (X.weights.nonZeros() == 0) return std::nullopt;

    const std::size_t max_k = std::min(sub.size(), vocab.size());
    std::vector<std::size_t> ks;
    for (auto k : options.k_range) {
        if (k >= 1 && k <= max_k) ks.push_back(k);
    }
    if (ks.empty()) ks.push_back(std::min(max_k, options.k_range.empty()
                                                     ? max_k
                                                     : *std::min_element(options.k_range.begin(),
                                                                         options.k_range.end())));

    NmfOptions base;
    base.max_iter = options.max_iter;
    base.tol = options.tol;
    auto sel = select_k(X, sub, ks, options.seed, options.top_n, base);

    std::map<std::string, TopicAssignment> by_id;
    for (auto& a : assign_topics_nmf(sel.best_model, ids)) by_id.emplace(a.paper_id, std::move(a));

    TopicStageResult result;
    result.path = TopicPath::nmf;
    std::map<int, std::size_t> counts;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto it = by_id.find(docs[i].paper_id);
        if (it != by_id.end()) {
            result.assignments.push_back(it->second);
        } else {
            result.assignments.push_back(TopicAssignment{docs[i].paper_id, kOutlierTopic, 1.0, {}});
        }
        ++counts[result.assignments.back().topic_id];
    }
    if (counts.contains(kOutlierTopic)) {
        result.summaries.push_back(TopicSummary{kOutlierTopic, {}, counts[kOutlierTopic]});
    }
    for (std::size_t t = 0; t < sel.best_k; ++t) {
        auto kw = topic_keywords(sel.best_model, t, X.terms, options.top_n);
        std::erase_if(kw, [](const auto& p) { return !(p.second > 0.0); });
        result.summaries.push_back(
            TopicSummary{static_cast<int>(t), std::move(kw), counts[static_cast<int>(t)]});
    }
    for (const auto& report : sel.reports) {
        if (report.k == sel.best_k) result.coherence = report;
    }
    result.k_sweep = std::move(sel.reports);
    return result;
}

} // namespace

TopicStageResult run_topic_stage(std::span<const TopicDocument> docs,
                                 const TopicStageOptions& options) {
    if (docs.empty()) throw Error(Errc::empty_retrieval, "no documents for the topic stage");
    options.analyzer.validate();

    std::vector<text::TokenList> tokens;
    tokens.reserve(docs.size());
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        tokens.push_back(text::analyze(docs[i].text, options.analyzer));
        if (tokens.back().size() >= options.min_tokens) eligible.push_back(i);
    }
    if (eligible.size() < options.min_docs) return fallback_stage(docs, tokens, options);

    bool use_cluster = options.mode == TopicMode::cluster;
    if (options.mode == TopicMode::auto_select) {
        const auto covered = static_cast<std::size_t>(std::count_if(
            eligible.begin(), eligible.end(), [&](auto i) { return usable_embedding(docs[i]); }));
        use_cluster = eligible.size() >= options.cluster_min_docs &&
                      static_cast<double>(covered) >=
                          options.cluster_coverage * static_cast<double>(eligible.size());
    }
    if (use_cluster) {
        if (auto r = cluster_stage(docs, tokens, eligible, options)) return std::move(*r);
    }
    if (auto r = nmf_stage(docs, tokens, eligible, options)) return std::move(*r);
    return fallback_stage(docs, tokens, options);
}

} // namespace isle::topics
