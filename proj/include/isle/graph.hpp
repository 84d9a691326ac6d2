#pragma once

#include "isle/corpus.hpp"
#include "isle/ranking.hpp"
#include "isle/topics.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isle::graph {

enum class NodeKind { paper, author, institution, country, topic, year };
enum class EdgeLabel { authorship, affiliated_with, located_in, published_in, has_topic, cites };

std::string_view to_string(NodeKind kind) noexcept;
std::string_view to_string(EdgeLabel label) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<EdgeLabel> parse_edge_label(std::string_view s);

/// Required (from, to) kinds of each label.
std::pair<NodeKind, NodeKind> signature(EdgeLabel label) noexcept;

inline constexpr std::string_view kUnknownYearKey = "unknown";

struct NodeRef {
    NodeKind kind = NodeKind::paper;
    std::string key;

    auto operator<=>(const NodeRef&) const = default;
};

struct PaperAttrs {
    std::string title;
    int year = corpus::kUnknownYear;
    std::size_t citation_count = 0; // indegree over Cites edges in this graph
    int topic_id = topics::kOutlierTopic;
    double topic_probability = 0.0;

    bool operator==(const PaperAttrs&) const = default;
};

struct TopicAttrs {
    int topic_id = topics::kOutlierTopic;
    std::vector<std::pair<std::string, double>> keywords;
    std::size_t document_count = 0;

    bool operator==(const TopicAttrs&) const = default;
};

struct Node {
    NodeRef ref;
    std::optional<PaperAttrs> paper;
    std::optional<TopicAttrs> topic;
    std::string name; // authors only
    std::optional<int> year; // year nodes; empty for "unknown"

    bool operator==(const Node&) const = default;
};

struct Edge {
    NodeRef from;
    NodeRef to;
    EdgeLabel label = EdgeLabel::cites;
    std::optional<double> weight; // pi on HasTopic

    bool operator==(const Edge&) const = default;
};

struct Provenance {
    std::string query_hash;
    std::string snapshot_hash;
    std::size_t generation = 0;

    bool operator==(const Provenance&) const = default;
};

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    /// Sorts nodes by (kind, key) and edges by (label, from, to).
    /// Throws Error(consistency) on duplicate nodes, dangling endpoints or a
    /// label whose endpoint kinds do not match its signature.
    KnowledgeGraph(std::vector<Node> nodes, std::vector<Edge> edges, Provenance provenance);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    const Node* find(const NodeRef& ref) const;
    std::size_t count(NodeKind kind) const;
    /// Indices into edges() leaving / entering a node.
    const std::vector<std::size_t>& out_edges(const NodeRef& ref) const;
    const std::vector<std::size_t>& in_edges(const NodeRef& ref) const;

    bool operator==(const KnowledgeGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_ &&
               provenance_ == other.provenance_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    Provenance provenance_;
    std::map<NodeRef, std::size_t> index_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
};

/// Builds the typed graph of one retrieved set. Throws Error(consistency) for
/// an assignment naming a paper outside `retrieved` or a retrieved paper
/// missing from the snapshot.
KnowledgeGraph build_graph(const RankedList& retrieved,
                           std::span<const topics::TopicAssignment> assignments,
                           std::span<const topics::TopicSummary> summaries,
                           const corpus::CorpusSnapshot& snapshot, Provenance provenance = {});

/// Cites indegree. Throws Error(type_error) for non-paper nodes and
/// Error(not_found) for nodes absent from the graph.
std::size_t paper_impact(const KnowledgeGraph& graph, const NodeRef& paper);

/// Sum of paper impacts over the distinct papers linked to an author,
/// institution or country. Throws Error(type_error) for other kinds.
std::size_t entity_impact(const KnowledgeGraph& graph, const NodeRef& entity);

/// Distinct papers linked to an author, institution or country, key order.
std::vector<std::string> linked_papers(const KnowledgeGraph& graph, const NodeRef& entity);

struct YearTopicCount {
    int year = corpus::kUnknownYear;
    int topic_id = topics::kOutlierTopic;
    std::size_t count = 0;

    bool operator==(const YearTopicCount&) const = default;
};

struct RankedKey {
    std::string key;
    std::size_t value = 0;

    bool operator==(const RankedKey&) const = default;
};

struct AnalyticsBundle {
    std::map<int, std::size_t> topic_distribution;
    std::vector<YearTopicCount> yearly_topic_counts; // year, then topic
    std::vector<RankedKey> country_impact;           // impact desc, key asc
    std::vector<RankedKey> institution_impact;
    std::vector<RankedKey> author_impact;
    std::vector<RankedKey> top_papers; // at most top_papers_limit

    bool operator==(const AnalyticsBundle&) const = default;
};

AnalyticsBundle compute_analytics(const KnowledgeGraph& graph, std::size_t top_papers_limit = 20);

/// Node-link JSON; `indent` < 0 gives a single line.
std::string export_graph(const KnowledgeGraph& graph, int indent = 1);
/// Inverse of export_graph. Throws Error(parse) on malformed documents.
KnowledgeGraph import_graph(std::string_view document);

std::string analytics_to_json(const AnalyticsBundle& bundle, int indent = 1);
AnalyticsBundle analytics_from_json(std::string_view document);

} // namespace isle::graph
