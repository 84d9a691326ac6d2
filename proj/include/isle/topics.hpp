#pragma once

#include "isle/text.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace isle::topics {

inline constexpr int kOutlierTopic = -1;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// TF-IDF + NMF path
// ---------------------------------------------------------------------------

/// Document-term weights tf(t,d) * ln(N / df(t)); columns follow vocabulary order.
struct TfidfMatrix {
    SparseMatrix weights;
    std::vector<std::string> terms;
};

/// Throws Error(empty_matrix) for an empty vocabulary.
TfidfMatrix build_tfidf(std::span<const text::TokenList> docs, const text::Vocabulary& vocabulary);

struct NmfOptions {
    std::size_t k = 10;
    std::uint64_t seed = 42;
    std::size_t max_iter = 400;
    double tol = 1e-5;
};

struct NmfModel {
    Eigen::MatrixXd W; // m x k document-topic weights
    Eigen::MatrixXd H; // k x n topic-term weights
    std::size_t k = 0;
    double final_objective = 0.0;
    std::size_t iterations_run = 0;
    /// Objective after initialization, then after every iteration.
    std::vector<double> objective_history;
};

/// ||X - WH||_F^2.
double frobenius_objective(const SparseMatrix& X, const Eigen::MatrixXd& W,
                           const Eigen::MatrixXd& H);

/// Lee-Seung multiplicative updates on the Frobenius objective. Stops after
/// max_iter or when the relative improvement drops below tol.
/// Throws Error(invalid_rank) unless 1 <= k <= min(m, n).
NmfModel nmf_factorize(const SparseMatrix& X, const NmfOptions& options);

/// Top-n (term, weight) per row of H, weight descending then term ascending.
std::vector<std::pair<std::string, double>> topic_keywords(const NmfModel& model, std::size_t topic,
                                                           std::span<const std::string> terms,
                                                           std::size_t top_n);

struct TopicAssignment {
    std::string paper_id;
    int topic_id = kOutlierTopic;
    double probability = 0.0;
    /// Full normalized weight vector over topics (NMF path); empty for hard assignments.
    std::vector<double> distribution;

    bool operator==(const TopicAssignment&) const = default;
};

/// pi[p,t] = W[p,t] / sum_t W[p,t]; argmax with lowest-index ties; all-zero
/// rows get a uniform distribution and the outlier topic.
std::vector<TopicAssignment> assign_topics_nmf(const NmfModel& model,
                                               std::span<const std::string> paper_ids);

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

struct NpmiPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double value = 0.0;
};

struct NpmiResult {
    std::vector<NpmiPair> pairs;
    double mean = 0.0;
};

/// Pairwise NPMI over document-level co-occurrence in `docs`.
/// NPMI = ln((P(ij) + eps) / (P(i)P(j) + eps)) / -ln(P(ij) + eps); pairs that
/// never co-occur score -1, pairs present in every document score +1.
/// Throws Error(invalid_topic) for fewer than two words.
NpmiResult compute_npmi(std::span<const std::string> words, std::span<const text::TokenList> docs,
                        double epsilon = 1e-12);

struct CoherenceReport {
    std::size_t k = 0;
    std::vector<double> per_topic; // mean pairwise NPMI of each topic
    double mean_npmi = 0.0;
};

struct KSelection {
    std::size_t best_k = 0;
    std::vector<CoherenceReport> reports; // one per evaluated k, in range order
    NmfModel best_model;
};

/// Fits one model per k and keeps the k with the highest mean NPMI over
/// each topic's top words (ties go to the smaller k).
KSelection select_k(const TfidfMatrix& X, std::span<const text::TokenList> docs,
                    std::span<const std::size_t> k_range, std::uint64_t seed,
                    std::size_t top_n = 10, const NmfOptions& base = {});

std::vector<std::size_t> default_k_range();

// ---------------------------------------------------------------------------
// Embedding-cluster path
// ---------------------------------------------------------------------------

/// Projection of centered rows onto the top-p principal axes, computed by
/// power iteration with re-orthogonalization. Axes are ordered by variance.
/// Throws Error(invalid_dimension) when m < p or p > d.
Eigen::MatrixXd reduce_dimensions(const Eigen::MatrixXd& embeddings, std::size_t p = 5,
                                  std::uint64_t seed = 42);

struct ClusterModel {
    Eigen::MatrixXd reduced;
    std::vector<int> labels; // cluster id or kOutlierTopic
    std::size_t cluster_count = 0;
    double radius = 0.0;
};

/// Density-reachability clustering. Core points have their
/// min_cluster_size-th neighbour within `radius` (default: the median of that
/// distance over all points). Core points linked within the radius form
/// clusters when a component holds at least min_cluster_size of them; other
/// points join the cluster of a labelled k-nearest neighbour no further than
/// three radii away, iterated to a fixed point. Everything else is an outlier.
ClusterModel density_cluster(const Eigen::MatrixXd& points, std::size_t min_cluster_size = 10,
                             std::optional<double> radius = std::nullopt);

struct TopicSummary {
    int topic_id = kOutlierTopic;
    std::vector<std::pair<std::string, double>> keywords;
    std::size_t document_count = 0;

    bool operator==(const TopicSummary&) const = default;
};

/// Per-label class-based TF-IDF: (tf(t,c) / |c|) * ln(N / df(t)).
std::vector<std::pair<int, std::vector<std::pair<std::string, double>>>>
ctfidf_scores(std::span<const int> labels, std::span<const text::TokenList> docs,
              std::size_t total_docs);

/// One summary per label present (outliers included), ordered by topic id.
/// Empty when no document carries a non-outlier label.
std::vector<TopicSummary> ctfidf_keywords(std::span<const int> labels,
                                          std::span<const text::TokenList> docs,
                                          std::size_t total_docs, std::size_t top_n = 10);

// ---------------------------------------------------------------------------
// Stage orchestration
// ---------------------------------------------------------------------------

enum class TopicMode { auto_select, nmf, cluster };
enum class TopicPath { nmf, cluster, fallback };

std::string_view to_string(TopicMode mode) noexcept;
std::string_view to_string(TopicPath path) noexcept;
std::optional<TopicMode> parse_topic_mode(std::string_view s);

struct TopicDocument {
    std::string paper_id;
    std::string text; // title + abstract
    std::optional<std::vector<double>> embedding;
};

struct TopicStageOptions {
    TopicMode mode = TopicMode::auto_select;
    text::AnalyzerConfig analyzer;
    std::vector<std::size_t> k_range = default_k_range();
    std::uint64_t seed = 42;
    std::size_t min_tokens = 20;
    std::size_t min_docs = 10;
    std::size_t top_n = 10;
    std::size_t min_df = 2;
    double max_df_ratio = 0.95;
    std::size_t reduced_dim = 5;
    std::size_t min_cluster_size = 10;
    double cluster_coverage = 0.95;
    std::size_t cluster_min_docs = 50;
    std::size_t max_iter = 400;
    double tol = 1e-5;
};

struct TopicStageResult {
    TopicPath path = TopicPath::fallback;
    std::vector<TopicSummary> summaries;
    std::vector<TopicAssignment> assignments; // input order
    CoherenceReport coherence;
    std::vector<CoherenceReport> k_sweep; // NMF path only
};

/// Throws Error(empty_retrieval) for an empty document list.
TopicStageResult run_topic_stage(std::span<const TopicDocument> docs,
                                 const TopicStageOptions& options = {});

} // namespace isle::topics
