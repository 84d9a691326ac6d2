#include "isle/error.hpp"
#include "isle/hash.hpp"
#include "isle/topics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace isle::topics {

Eigen::MatrixXd reduce_dimensions(const Eigen::MatrixXd& embeddings, std::size_t p,
                                  std::uint64_t seed) {
    const auto m = static_cast<std::size_t>(embeddings.rows());
    const auto d = static_cast<std::size_t>(embeddings.cols());
    if (p < 1 || m < p || p > d) {
        throw Error(Errc::invalid_dimension, "cannot project " + std::to_string(m) + "x" +
                                                 std::to_string(d) + " onto " + std::to_string(p) +
                                                 " axes");
    }
    const Eigen::RowVectorXd mean = embeddings.colwise().mean();
    const Eigen::MatrixXd centered = embeddings.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(m);

    std::uint64_t state = seed;
    Eigen::MatrixXd axes(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p));
    auto orthogonalize = [&](Eigen::VectorXd& v, Eigen::Index found) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < found; ++j) v -= axes.col(j).dot(v) * axes.col(j);
        }
    };

    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(p); ++a) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        for (auto& x : v) x = 2.0 * unit_double(splitmix64(state)) - 1.0;
        orthogonalize(v, a);
        v.normalize();
        for (int it = 0; it < 3000; ++it) {
            Eigen::VectorXd w = cov * v;
            orthogonalize(w, a);
            const double norm = w.norm();
            if (norm < 1e-300) break; // v spans part of the null space already
            w /= norm;
            const double delta = (w - v).norm();
            v = w;
            if (delta < 1e-13) break;
        }
        orthogonalize(v, a);
        v.normalize();
        axes.col(a) = v;
    }

    // Order by Rayleigh quotient so column variances come out non-increasing.
    std::vector<Eigen::Index> order(p);
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd rq(static_cast<Eigen::Index>(p));
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(p); ++a) {
        rq(a) = axes.col(a).dot(cov * axes.col(a));
    }
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return rq(x) > rq(y); });
    Eigen::MatrixXd sorted(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p));
    for (std::size_t a = 0; a < p; ++a) {
        Eigen::VectorXd col = axes.col(order[a]);
        Eigen::Index argmax = 0;
        col.cwiseAbs().maxCoeff(&argmax);
        if (col(argmax) < 0) col = -col;
        sorted.col(static_cast<Eigen::Index>(a)) = col;
    }
    return centered * sorted;
}

ClusterModel density_cluster(const Eigen::MatrixXd& points, std::size_t min_cluster_size,
                             std::optional<double> radius) {
    ClusterModel model;
    model.reduced = points;
    const auto m = static_cast<std::size_t>(points.rows());
    model.labels.assign(m, kOutlierTopic);
    if (min_cluster_size < 1) throw Error(Errc::invalid_argument, "min_cluster_size must be >= 1");
    if (m < min_cluster_size || m < 2) return model;

    auto dist = [&](std::size_t i, std::size_t j) {
        return (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j)))
            .norm();
    };

    // k nearest neighbours (self excluded), nearest first, ties by index.
    const std::size_t k = std::min(min_cluster_size, m - 1);
    std::vector<std::vector<std::pair<double, std::size_t>>> knn(m);
    std::vector<double> kdist(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::pair<double, std::size_t>> row;
        row.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) row.emplace_back(dist(i, j), j);
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        row.resize(k);
        kdist[i] = row.back().first;
        knn[i] = std::move(row);
    }

    double r;
    if (radius) {
        r = *radius;
    } else {
        std::vector<double> sorted = kdist;
        std::sort(sorted.begin(), sorted.end());
        r = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    }
    model.radius = r;

    std::vector<char> core(m);
    for (std::size_t i = 0; i < m; ++i) core[i] = kdist[i] <= r;

    // Components of core points linked within r; keep those with enough core support.
    int next_label = 0;
    std::vector<int> label(m, kOutlierTopic);
    std::vector<char> visited(m, 0);
    for (std::size_t seed = 0; seed < m; ++seed) {
        if (!core[seed] || visited[seed]) continue;
        std::vector<std::size_t> members{seed}, stack{seed};
        visited[seed] = 1;
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            for (std::size_t q = 0; q < m; ++q) {
                if (core[q] && !visited[q] && dist(cur, q) <= r) {
                    visited[q] = 1;
                    members.push_back(q);
                    stack.push_back(q);
                }
            }
        }
        if (members.size() >= min_cluster_size) {
            for (auto q : members) label[q] = next_label;
            ++next_label;
        }
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return kdist[a] < kdist[b]; });
    for (bool changed = true; changed;) {
        changed = false;
        for (auto i : order) {
            if (label[i] != kOutlierTopic) continue;
            for (const auto& [dq, q] : knn[i]) {
                if (label[q] != kOutlierTopic && dq <= 3.0 * r) {
                    label[i] = label[q];
                    changed = true;
                    break;
                }
            }
        }
    }

    model.labels = std::move(label);
    model.cluster_count = static_cast<std::size_t>(next_label);
    return model;
}

std::vector<std::pair<int, std::vector<std::pair<std::string, double>>>>
ctfidf_scores(std::span<const int> labels, std::span<const text::TokenList> docs,
              std::size_t total_docs) {
    if (labels.size() != docs.size()) {
        throw Error(Errc::shape, "labels and documents differ in length");
    }
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string_view> seen(doc.begin(), doc.end());
        for (auto t : seen) ++df[std::string(t)];
    }
    std::map<int, std::map<std::string, std::size_t>> tf;
    std::map<int, std::size_t> size;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& counts = tf[labels[d]];
        for (const auto& t : docs[d]) ++counts[t];
        size[labels[d]] += docs[d].size();
    }
    const auto n = static_cast<double>(total_docs);
    std::vector<std::pair<int, std::vector<std::pair<std::string, double>>>> out;
    for (auto& [label, counts] : tf) {
        std::vector<std::pair<std::string, double>> scores;
        const auto len = static_cast<double>(size[label]);
        for (auto& [term, count] : counts) {
            const double idf = std::log(n / static_cast<double>(df.at(term)));
            scores.emplace_back(term, static_cast<double>(count) / len * idf);
        }
        out.emplace_back(label, std::move(scores));
    }
    return out;
}

std::vector<TopicSummary> ctfidf_keywords(std::span<const int> labels,
                                          std::span<const text::TokenList> docs,
                                          std::size_t total_docs, std::size_t top_n) {
    if (std::none_of(labels.begin(), labels.end(), [](int l) { return l != kOutlierTopic; })) {
        return {};
    }
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];

    std::vector<TopicSummary> out;
    for (auto& [label, scores] : ctfidf_scores(labels, docs, total_docs)) {
        std::erase_if(scores, [](const auto& s) { return !(s.second > 0.0); });
        std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (scores.size() > top_n) scores.resize(top_n);
        out.push_back(TopicSummary{label, std::move(scores), counts[label]});
    }
    return out;
}

} // namespace isle::topics
