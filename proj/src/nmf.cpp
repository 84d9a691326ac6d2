#include "isle/error.hpp"
#include "isle/hash.hpp"
#include "isle/topics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace isle::topics {

TfidfMatrix build_tfidf(std::span<const text::TokenList> docs, const text::Vocabulary& vocabulary) {
    if (vocabulary.empty()) {
        throw Error(Errc::empty_matrix, "cannot build TF-IDF over an empty vocabulary");
    }
    const auto n_docs = static_cast<double>(docs.size());
    std::vector<double> idf(vocabulary.size());
    for (std::size_t t = 0; t < vocabulary.size(); ++t) {
        idf[t] = std::log(n_docs / static_cast<double>(vocabulary.df(t)));
    }

    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::map<std::size_t, std::size_t> tf;
        for (const auto& tok : docs[d]) {
            if (auto idx = vocabulary.find(tok)) ++tf[*idx];
        }
        for (const auto& [t, count] : tf) {
            const double w = static_cast<double>(count) * idf[t];
            if (w > 0.0) {
                triplets.emplace_back(static_cast<int>(d), static_cast<int>(t), w);
            }
        }
    }
    TfidfMatrix out;
    out.weights.resize(static_cast<Eigen::Index>(docs.size()),
                       static_cast<Eigen::Index>(vocabulary.size()));
    out.weights.setFromTriplets(triplets.begin(), triplets.end());
    out.terms = vocabulary.terms();
    return out;
}

double frobenius_objective(const SparseMatrix& X, const Eigen::MatrixXd& W,
                           const Eigen::MatrixXd& H) {
    const auto m = X.rows(), n = X.cols();
    if (static_cast<double>(m) * static_cast<double>(n) <= 4.0e6) {
        Eigen::MatrixXd R = Eigen::MatrixXd(X) - W * H;
        return R.squaredNorm();
    }
    // ||X||^2 - 2<X, WH> + ||WH||^2, with the cross term taken over nonzeros only.
    double cross = 0.0;
    for (Eigen::Index r = 0; r < X.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(X, r); it; ++it) {
            cross += it.value() * W.row(it.row()).dot(H.col(it.col()));
        }
    }
    const double wh = ((W.transpose() * W).cwiseProduct(H * H.transpose())).sum();
    return std::max(0.0, X.squaredNorm() - 2.0 * cross + wh);
}

NmfModel nmf_factorize(const SparseMatrix& X, const NmfOptions& options) {
    const auto m = static_cast<std::size_t>(X.rows());
    const auto n = static_cast<std::size_t>(X.cols());
    const auto k = options.k;
    if (k < 1 || k > std::min(m, n)) {
        throw Error(Errc::invalid_rank, "NMF rank " + std::to_string(k) + " invalid for a " +
                                            std::to_string(m) + "x" + std::to_string(n) + " matrix");
    }

    const double mean = X.sum() / (static_cast<double>(m) * static_cast<double>(n));
    const double scale = std::sqrt(std::max(mean, 0.0) / static_cast<double>(k));
    std::uint64_t state = options.seed;
    auto draw = [&] { return scale * (1.0 - unit_double(splitmix64(state))); }; // (0, 1] * scale

    NmfModel model;
    model.k = k;
    model.W.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    model.H.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < model.W.rows(); ++i)
        for (Eigen::Index j = 0; j < model.W.cols(); ++j) model.W(i, j) = draw();
    for (Eigen::Index i = 0; i < model.H.rows(); ++i)
        for (Eigen::Index j = 0; j < model.H.cols(); ++j) model.H(i, j) = draw();

    // Adding eps to numerator and denominator keeps each update an exact
    // majorize-minimize step, so the objective cannot increase.
    constexpr double eps = 1e-12;
    double prev = frobenius_objective(X, model.W, model.H);
    model.objective_history.push_back(prev);

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        if (prev == 0.0) break;
        {
            Eigen::MatrixXd num = model.W.transpose() * X;
            Eigen::MatrixXd den = (model.W.transpose() * model.W) * model.H;
            model.H = model.H.cwiseProduct((num.array() + eps).matrix())
                          .cwiseQuotient((den.array() + eps).matrix());
        }
        {
            Eigen::MatrixXd num = X * model.H.transpose();
            Eigen::MatrixXd den = model.W * (model.H * model.H.transpose());
            model.W = model.W.cwiseProduct((num.array() + eps).matrix())
                          .cwiseQuotient((den.array() + eps).matrix());
        }
        const double obj = frobenius_objective(X, model.W, model.H);
        model.objective_history.push_back(obj);
        ++model.iterations_run;
        const double improvement = (prev - obj) / prev;
        prev = obj;
        if (improvement < options.tol) break;
    }
    model.final_objective = prev;
    return model;
}

std::vector<std::pair<std::string, double>> topic_keywords(const NmfModel& model, std::size_t topic,
                                                           std::span<const std::string> terms,
                                                           std::size_t top_n) {
    std::vector<std::pair<std::string, double>> all;
    const auto row = model.H.row(static_cast<Eigen::Index>(topic));
    for (std::size_t t = 0; t < terms.size(); ++t) {
        all.emplace_back(terms[t], row(static_cast<Eigen::Index>(t)));
    }
    const auto keep = std::min(top_n, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) return a.second > b.second;
                          return a.first < b.first;
                      });
    all.resize(keep);
    return all;
}

std::vector<TopicAssignment> assign_topics_nmf(const NmfModel& model,
                                               std::span<const std::string> paper_ids) {
    std::vector<TopicAssignment> out;
    out.reserve(static_cast<std::size_t>(model.W.rows()));
    const auto k = static_cast<std::size_t>(model.W.cols());
    for (Eigen::Index r = 0; r < model.W.rows(); ++r) {
        TopicAssignment a;
        a.paper_id = paper_ids[static_cast<std::size_t>(r)];
        const double total = model.W.row(r).sum();
        a.distribution.resize(k);
        if (!(total > 0.0)) {
            std::fill(a.distribution.begin(), a.distribution.end(), 1.0 / static_cast<double>(k));
            a.topic_id = kOutlierTopic;
            a.probability = 1.0 / static_cast<double>(k);
        } else {
            std::size_t best = 0;
            for (std::size_t t = 0; t < k; ++t) {
                a.distribution[t] = model.W(r, static_cast<Eigen::Index>(t)) / total;
                if (a.distribution[t] > a.distribution[best]) best = t;
            }
            a.topic_id = static_cast<int>(best);
            a.probability = a.distribution[best];
        }
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace isle::topics
