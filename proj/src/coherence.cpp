#include "isle/error.hpp"
#include "isle/topics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <unordered_map>

namespace isle::topics {

NpmiResult compute_npmi(std::span<const std::string> words, std::span<const text::TokenList> docs,
                        double epsilon) {
    if (words.size() < 2) {
        throw Error(Errc::invalid_topic, "NPMI needs at least two topic words");
    }
    const std::size_t n = words.size();
    std::unordered_map<std::string_view, std::size_t> slot;
    for (std::size_t i = 0; i < n; ++i) slot.emplace(words[i], i);

    // occurs[d][i]: word i appears in document d
    std::vector<std::size_t> df(n, 0);
    std::vector<std::size_t> co(n * n, 0);
    std::vector<char> present(n);
    std::vector<std::size_t> hits;
    for (const auto& doc : docs) {
        std::fill(present.begin(), present.end(), 0);
        for (const auto& tok : doc) {
            auto it = slot.find(tok);
            if (it != slot.end()) present[it->second] = 1;
        }
        hits.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (present[i]) hits.push_back(i);
        }
        for (std::size_t a = 0; a < hits.size(); ++a) {
            ++df[hits[a]];
            for (std::size_t b = a + 1; b < hits.size(); ++b) ++co[hits[a] * n + hits[b]];
        }
    }

    const auto m = static_cast<double>(docs.size());
    NpmiResult result;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t joint = co[i * n + j];
            double value;
            if (joint == 0) {
                value = -1.0;
            } else if (joint == docs.size()) {
                value = 1.0;
            } else {
                const double pij = static_cast<double>(joint) / m;
                const double pi = static_cast<double>(df[i]) / m;
                const double pj = static_cast<double>(df[j]) / m;
                value = std::log((pij + epsilon) / (pi * pj + epsilon)) / -std::log(pij + epsilon);
                value = std::clamp(value, -1.0, 1.0);
            }
            result.pairs.push_back(NpmiPair{i, j, value});
            sum += value;
        }
    }
    result.mean = sum / static_cast<double>(result.pairs.size());
    return result;
}

std::vector<std::size_t> default_k_range() { return {5, 10, 15, 20, 25}; }

namespace {

struct Candidate {
    NmfModel model;
    CoherenceReport report;
};

Candidate evaluate_k(const TfidfMatrix& X, std::span<const text::TokenList> docs, std::size_t k,
                     std::uint64_t seed, std::size_t top_n, const NmfOptions& base) {
    NmfOptions opts = base;
    opts.k = k;
    opts.seed = seed;
    Candidate c;
    c.model = nmf_factorize(X.weights, opts);
    c.report.k = k;
    double total = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        auto kw = topic_keywords(c.model, t, X.terms, top_n);
        std::vector<std::string> words;
        for (auto& [w, _] : kw) words.push_back(w);
        double coherence = words.size() >= 2 ? compute_npmi(words, docs).mean : 0.0;
        c.report.per_topic.push_back(coherence);
        total += coherence;
    }
    c.report.mean_npmi = total / static_cast<double>(k);
    return c;
}

} // namespace

KSelection select_k(const TfidfMatrix& X, std::span<const text::TokenList> docs,
                    std::span<const std::size_t> k_range, std::uint64_t seed, std::size_t top_n,
                    const NmfOptions& base) {
    if (k_range.empty()) throw Error(Errc::invalid_argument, "k range is empty");
    std::vector<std::future<Candidate>> jobs;
    for (auto k : k_range) {
        jobs.push_back(std::async(std::launch::async, evaluate_k, std::cref(X), docs, k, seed,
                                  top_n, std::cref(base)));
    }
    KSelection sel;
    std::optional<std::size_t> best;
    std::vector<Candidate> candidates;
    for (auto& j : jobs) candidates.push_back(j.get());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        sel.reports.push_back(candidates[i].report);
        if (!best) {
            best = i;
            continue;
        }
        const auto& cur = candidates[i].report;
        const auto& top = candidates[*best].report;
        if (cur.mean_npmi > top.mean_npmi || (cur.mean_npmi == top.mean_npmi && cur.k < top.k)) {
            best = i;
        }
    }
    sel.best_k = candidates[*best].report.k;
    sel.best_model = std::move(candidates[*best].model);
    return sel;
}

} // namespace isle::topics
