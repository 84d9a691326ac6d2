#include "isle/graph.hpp"

#include "isle/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace isle::graph {

using nlohmann::json;

namespace {

constexpr std::pair<NodeKind, std::string_view> kKindNames[] = {
    {NodeKind::paper, "Paper"},   {NodeKind::author, "Author"}, {NodeKind::institution, "Institution"},
    {NodeKind::country, "Country"}, {NodeKind::topic, "Topic"},  {NodeKind::year, "Year"},
};

constexpr std::pair<EdgeLabel, std::string_view> kLabelNames[] = {
    {EdgeLabel::authorship, "Authorship"},     {EdgeLabel::affiliated_with, "AffiliatedWith"},
    {EdgeLabel::located_in, "LocatedIn"},      {EdgeLabel::published_in, "PublishedIn"},
    {EdgeLabel::has_topic, "HasTopic"},        {EdgeLabel::cites, "Cites"},
};

const std::vector<std::size_t> kNoEdges;

bool edge_less(const Edge& a, const Edge& b) {
    return std::tie(a.label, a.from, a.to) < std::tie(b.label, b.from, b.to);
}

} // namespace

std::string_view to_string(NodeKind kind) noexcept {
    for (auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

std::string_view to_string(EdgeLabel label) noexcept {
    for (auto& [l, name] : kLabelNames) {
        if (l == label) return name;
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (auto& [k, name] : kKindNames) {
        if (name == s) return k;
    }
    return std::nullopt;
}

std::optional<EdgeLabel> parse_edge_label(std::string_view s) {
    for (auto& [l, name] : kLabelNames) {
        if (name == s) return l;
    }
    return std::nullopt;
}

std::pair<NodeKind, NodeKind> signature(EdgeLabel label) noexcept {
    switch (label) {
    case EdgeLabel::authorship: return {NodeKind::author, NodeKind::paper};
    case EdgeLabel::affiliated_with: return {NodeKind::paper, NodeKind::institution};
    case EdgeLabel::located_in: return {NodeKind::paper, NodeKind::country};
    case EdgeLabel::published_in: return {NodeKind::paper, NodeKind::year};
    case EdgeLabel::has_topic: return {NodeKind::paper, NodeKind::topic};
    case EdgeLabel::cites: return {NodeKind::paper, NodeKind::paper};
    }
    return {NodeKind::paper, NodeKind::paper};
}

KnowledgeGraph::KnowledgeGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                               Provenance provenance)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), provenance_(std::move(provenance)) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const Node& a, const Node& b) { return a.ref < b.ref; });
    std::sort(edges_.begin(), edges_.end(), edge_less);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i].ref, i).second) {
            throw Error(Errc::consistency, "duplicate node " + std::string(to_string(nodes_[i].ref.kind)) +
                                               ":" + nodes_[i].ref.key);
        }
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        auto from = index_.find(edge.from);
        auto to = index_.find(edge.to);
        if (from == index_.end() || to == index_.end()) {
            throw Error(Errc::consistency, "edge endpoint missing: " + edge.from.key + " -> " +
                                               edge.to.key);
        }
        auto [fk, tk] = signature(edge.label);
        if (edge.from.kind != fk || edge.to.kind != tk) {
            throw Error(Errc::consistency,
                        "edge " + std::string(to_string(edge.label)) + " has wrong endpoint kinds");
        }
        out_[from->second].push_back(e);
        in_[to->second].push_back(e);
    }
}

const Node* KnowledgeGraph::find(const NodeRef& ref) const {
    auto it = index_.find(ref);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::size_t KnowledgeGraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.ref.kind == kind; }));
}

const std::vector<std::size_t>& KnowledgeGraph::out_edges(const NodeRef& ref) const {
    auto it = index_.find(ref);
    return it == index_.end() ? kNoEdges : out_[it->second];
}

const std::vector<std::size_t>& KnowledgeGraph::in_edges(const NodeRef& ref) const {
    auto it = index_.find(ref);
    return it == index_.end() ? kNoEdges : in_[it->second];
}

KnowledgeGraph build_graph(const RankedList& retrieved,
                           std::span<const topics::TopicAssignment> assignments,
                           std::span<const topics::TopicSummary> summaries,
                           const corpus::CorpusSnapshot& snapshot, Provenance provenance) {
    std::map<NodeRef, Node> nodes;
    std::vector<Edge> edges;
    auto add_node = [&](NodeKind kind, std::string key) -> Node& {
        NodeRef ref{kind, std::move(key)};
        auto [it, fresh] = nodes.try_emplace(ref);
        if (fresh) it->second.ref = ref;
        return it->second;
    };

    std::map<std::string, std::size_t> ordinals;
    for (const auto& entry : retrieved.entries) {
        auto ord = snapshot.ordinal_of(entry.paper_id);
        if (!ord) throw Error(Errc::consistency, "retrieved paper not in snapshot: " + entry.paper_id);
        ordinals.emplace(entry.paper_id, *ord);
    }

    std::map<std::string, const topics::TopicAssignment*> topic_of;
    for (const auto& a : assignments) {
        if (!ordinals.contains(a.paper_id)) {
            throw Error(Errc::consistency, "topic assignment for unretrieved paper " + a.paper_id);
        }
        topic_of[a.paper_id] = &a;
    }
    for (const auto& s : summaries) {
        auto& node = add_node(NodeKind::topic, std::to_string(s.topic_id));
        node.topic = TopicAttrs{s.topic_id, s.keywords, 0};
    }

    for (const auto& [id, ord] : ordinals) {
        const auto& rec = snapshot.papers()[ord];
        NodeRef paper{NodeKind::paper, id};
        auto& pnode = add_node(NodeKind::paper, id);
        pnode.paper = PaperAttrs{rec.title, rec.publication_year, 0, topics::kOutlierTopic, 0.0};

        for (const auto& author_id : snapshot.paper_authors(ord)) {
            auto& anode = add_node(NodeKind::author, author_id);
            if (const auto* a = snapshot.find_author(author_id)) anode.name = a->name;
            edges.push_back(Edge{anode.ref, paper, EdgeLabel::authorship, std::nullopt});
        }
        for (const auto& inst : snapshot.paper_institutions(ord)) {
            add_node(NodeKind::institution, inst);
            edges.push_back(Edge{paper, {NodeKind::institution, inst}, EdgeLabel::affiliated_with,
                                 std::nullopt});
        }
        for (const auto& cc : snapshot.paper_countries(ord)) {
            add_node(NodeKind::country, cc);
            edges.push_back(
                Edge{paper, {NodeKind::country, cc}, EdgeLabel::located_in, std::nullopt});
        }
        const bool known = rec.publication_year != corpus::kUnknownYear;
        auto& ynode = add_node(NodeKind::year, known ? std::to_string(rec.publication_year)
                                                     : std::string(kUnknownYearKey));
        if (known) ynode.year = rec.publication_year;
        edges.push_back(Edge{paper, ynode.ref, EdgeLabel::published_in, std::nullopt});

        if (auto it = topic_of.find(id); it != topic_of.end()) {
            const auto& a = *it->second;
            auto& tnode = add_node(NodeKind::topic, std::to_string(a.topic_id));
            if (!tnode.topic) tnode.topic = TopicAttrs{a.topic_id, {}, 0};
            ++tnode.topic->document_count;
            edges.push_back(Edge{paper, tnode.ref, EdgeLabel::has_topic, a.probability});
            auto& attrs = *nodes.at(paper).paper;
            attrs.topic_id = a.topic_id;
            attrs.topic_probability = a.probability;
        }

        for (auto cited : snapshot.cited_by_paper(ord)) {
            const auto& cited_id = snapshot.papers()[cited].paper_id;
            if (ordinals.contains(cited_id)) {
                edges.push_back(
                    Edge{paper, {NodeKind::paper, cited_id}, EdgeLabel::cites, std::nullopt});
            }
        }
    }
    for (const auto& e : edges) {
        if (e.label == EdgeLabel::cites) ++nodes.at(e.to).paper->citation_count;
    }

    std::vector<Node> flat;
    flat.reserve(nodes.size());
    for (auto& [_, n] : nodes) flat.push_back(std::move(n));
    return KnowledgeGraph(std::move(flat), std::move(edges), std::move(provenance));
}

std::size_t paper_impact(const KnowledgeGraph& graph, const NodeRef& paper) {
    if (paper.kind != NodeKind::paper) {
        throw Error(Errc::type_error, "paper impact of a " + std::string(to_string(paper.kind)) +
                                          " node");
    }
    if (!graph.find(paper)) throw Error(Errc::not_found, "no paper node " + paper.key);
    std::size_t n = 0;
    for (auto e : graph.in_edges(paper)) n += graph.edges()[e].label == EdgeLabel::cites;
    return n;
}

std::vector<std::string> linked_papers(const KnowledgeGraph& graph, const NodeRef& entity) {
    std::set<std::string> papers;
    switch (entity.kind) {
    case NodeKind::author:
        for (auto e : graph.out_edges(entity)) {
            const auto& edge = graph.edges()[e];
            if (edge.label == EdgeLabel::authorship) papers.insert(edge.to.key);
        }
        break;
    case NodeKind::institution:
    case NodeKind::country: {
        const auto label = entity.kind == NodeKind::institution ? EdgeLabel::affiliated_with
                                                                : EdgeLabel::located_in;
        for (auto e : graph.in_edges(entity)) {
            const auto& edge = graph.edges()[e];
            if (edge.label == label) papers.insert(edge.from.key);
        }
        break;
    }
    default:
        throw Error(Errc::type_error, "entity impact is undefined for " +
                                          std::string(to_string(entity.kind)) + " nodes");
    }
    return {papers.begin(), papers.end()};
}

std::size_t entity_impact(const KnowledgeGraph& graph, const NodeRef& entity) {
    std::size_t total = 0;
    for (const auto& key : linked_papers(graph, entity)) {
        total += paper_impact(graph, {NodeKind::paper, key});
    }
    return total;
}

AnalyticsBundle compute_analytics(const KnowledgeGraph& graph, std::size_t top_papers_limit) {
    AnalyticsBundle out;
    std::map<std::pair<int, int>, std::size_t> yearly;
    std::vector<RankedKey> papers;
    for (const auto& node : graph.nodes()) {
        if (node.ref.kind != NodeKind::paper) continue;
        int topic = topics::kOutlierTopic;
        int year = corpus::kUnknownYear;
        for (auto e : graph.out_edges(node.ref)) {
            const auto& edge = graph.edges()[e];
            if (edge.label == EdgeLabel::has_topic) {
                topic = graph.find(edge.to)->topic->topic_id;
            } else if (edge.label == EdgeLabel::published_in) {
                year = graph.find(edge.to)->year.value_or(corpus::kUnknownYear);
            }
        }
        ++out.topic_distribution[topic];
        ++yearly[{year, topic}];
        papers.push_back(RankedKey{node.ref.key, paper_impact(graph, node.ref)});
    }
    for (const auto& [yt, count] : yearly) {
        out.yearly_topic_counts.push_back(YearTopicCount{yt.first, yt.second, count});
    }

    auto by_value = [](const RankedKey& a, const RankedKey& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.key < b.key;
    };
    auto ranked = [&](NodeKind kind) {
        std::vector<RankedKey> rows;
        for (const auto& node : graph.nodes()) {
            if (node.ref.kind == kind) rows.push_back({node.ref.key, entity_impact(graph, node.ref)});
        }
        std::sort(rows.begin(), rows.end(), by_value);
        return rows;
    };
    out.country_impact = ranked(NodeKind::country);
    out.institution_impact = ranked(NodeKind::institution);
    out.author_impact = ranked(NodeKind::author);
    std::sort(papers.begin(), papers.end(), by_value);
    if (papers.size() > top_papers_limit) papers.resize(top_papers_limit);
    out.top_papers = std::move(papers);
    return out;
}

namespace {

json node_to_json(const Node& n) {
    json attrs = json::object();
    switch (n.ref.kind) {
    case NodeKind::paper:
        if (n.paper) {
            const auto& p = *n.paper;
            attrs["title"] = p.title;
            attrs["year"] = p.year == corpus::kUnknownYear ? json(nullptr) : json(p.year);
            attrs["citation_count"] = p.citation_count;
            attrs["topic_id"] = p.topic_id;
            attrs["topic_probability"] = p.topic_probability;
        }
        break;
    case NodeKind::author: attrs["name"] = n.name; break;
    case NodeKind::topic:
        if (n.topic) {
            attrs["topic_id"] = n.topic->topic_id;
            json kws = json::array();
            for (const auto& [term, w] : n.topic->keywords) kws.push_back({{"term", term}, {"weight", w}});
            attrs["keywords"] = std::move(kws);
            attrs["document_count"] = n.topic->document_count;
        }
        break;
    case NodeKind::year: attrs["year"] = n.year ? json(*n.year) : json(nullptr); break;
    default: break;
    }
    return {{"kind", to_string(n.ref.kind)}, {"key", n.ref.key}, {"attrs", std::move(attrs)}};
}

NodeKind kind_field(const json& j) {
    auto k = parse_node_kind(j.get<std::string>());
    if (!k) throw Error(Errc::parse, "unknown node kind " + j.get<std::string>());
    return *k;
}

Node node_from_json(const json& j) {
    Node n;
    n.ref = {kind_field(j.at("kind")), j.at("key").get<std::string>()};
    const auto& a = j.at("attrs");
    switch (n.ref.kind) {
    case NodeKind::paper:
        if (!a.empty()) {
            PaperAttrs p;
            p.title = a.at("title").get<std::string>();
            p.year = a.at("year").is_null() ? corpus::kUnknownYear : a.at("year").get<int>();
            p.citation_count = a.at("citation_count").get<std::size_t>();
            p.topic_id = a.at("topic_id").get<int>();
            p.topic_probability = a.at("topic_probability").get<double>();
            n.paper = std::move(p);
        }
        break;
    case NodeKind::author: n.name = a.at("name").get<std::string>(); break;
    case NodeKind::topic:
        if (!a.empty()) {
            TopicAttrs t;
            t.topic_id = a.at("topic_id").get<int>();
            for (const auto& kw : a.at("keywords")) {
                t.keywords.emplace_back(kw.at("term").get<std::string>(), kw.at("weight").get<double>());
            }
            t.document_count = a.at("document_count").get<std::size_t>();
            n.topic = std::move(t);
        }
        break;
    case NodeKind::year:
        if (!a.at("year").is_null()) n.year = a.at("year").get<int>();
        break;
    default: break;
    }
    return n;
}

json ref_to_json(const NodeRef& r) { return {{"kind", to_string(r.kind)}, {"key", r.key}}; }

NodeRef ref_from_json(const json& j) {
    return {kind_field(j.at("kind")), j.at("key").get<std::string>()};
}

json ranked_to_json(const std::vector<RankedKey>& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"key", r.key}, {"value", r.value}});
    return out;
}

std::vector<RankedKey> ranked_from_json(const json& j) {
    std::vector<RankedKey> out;
    for (const auto& r : j) out.push_back({r.at("key").get<std::string>(), r.at("value").get<std::size_t>()});
    return out;
}

} // namespace

std::string export_graph(const KnowledgeGraph& graph, int indent) {
    json nodes = json::array();
    for (const auto& n : graph.nodes()) nodes.push_back(node_to_json(n));
    json edges = json::array();
    for (const auto& e : graph.edges()) {
        json je = {{"from", ref_to_json(e.from)}, {"to", ref_to_json(e.to)},
                   {"label", to_string(e.label)}};
        if (e.weight) je["weight"] = *e.weight;
        edges.push_back(std::move(je));
    }
    const auto& p = graph.provenance();
    json doc = {{"nodes", std::move(nodes)},
                {"edges", std::move(edges)},
                {"counts", {{"nodes", graph.nodes().size()}, {"edges", graph.edges().size()}}},
                {"provenance",
                 {{"query_hash", p.query_hash},
                  {"snapshot_hash", p.snapshot_hash},
                  {"generation", p.generation}}}};
    return doc.dump(indent) + "\n";
}

KnowledgeGraph import_graph(std::string_view document) {
    try {
        const json doc = json::parse(document);
        std::vector<Node> nodes;
        for (const auto& n : doc.at("nodes")) nodes.push_back(node_from_json(n));
        std::vector<Edge> edges;
        for (const auto& e : doc.at("edges")) {
            auto label = parse_edge_label(e.at("label").get<std::string>());
            if (!label) throw Error(Errc::parse, "unknown edge label");
            Edge edge{ref_from_json(e.at("from")), ref_from_json(e.at("to")), *label, std::nullopt};
            if (e.contains("weight")) edge.weight = e.at("weight").get<double>();
            edges.push_back(std::move(edge));
        }
        const auto& p = doc.at("provenance");
        Provenance prov{p.at("query_hash").get<std::string>(), p.at("snapshot_hash").get<std::string>(),
                        p.at("generation").get<std::size_t>()};
        if (doc.contains("counts") && (doc["counts"].at("nodes").get<std::size_t>() != nodes.size() ||
                                       doc["counts"].at("edges").get<std::size_t>() != edges.size())) {
            throw Error(Errc::consistency, "graph counts disagree with its contents");
        }
        return KnowledgeGraph(std::move(nodes), std::move(edges), std::move(prov));
    } catch (const json::exception& ex) {
        throw Error(Errc::parse, std::string("graph document: ") + ex.what());
    }
}

std::string analytics_to_json(const AnalyticsBundle& b, int indent) {
    json dist = json::array();
    for (const auto& [topic, count] : b.topic_distribution) {
        dist.push_back({{"topic_id", topic}, {"count", count}});
    }
    json yearly = json::array();
    for (const auto& y : b.yearly_topic_counts) {
        yearly.push_back({{"year", y.year == corpus::kUnknownYear ? json(nullptr) : json(y.year)},
                          {"topic_id", y.topic_id},
                          {"count", y.count}});
    }
    json doc = {{"topic_distribution", std::move(dist)},
                {"yearly_topic_counts", std::move(yearly)},
                {"country_impact", ranked_to_json(b.country_impact)},
                {"institution_impact", ranked_to_json(b.institution_impact)},
                {"author_impact", ranked_to_json(b.author_impact)},
                {"top_papers", ranked_to_json(b.top_papers)}};
    return doc.dump(indent) + "\n";
}

AnalyticsBundle analytics_from_json(std::string_view document) {
    try {
        const json doc = json::parse(document);
        AnalyticsBundle b;
        for (const auto& d : doc.at("topic_distribution")) {
            b.topic_distribution[d.at("topic_id").get<int>()] = d.at("count").get<std::size_t>();
        }
        for (const auto& y : doc.at("yearly_topic_counts")) {
            b.yearly_topic_counts.push_back(
                {y.at("year").is_null() ? corpus::kUnknownYear : y.at("year").get<int>(),
                 y.at("topic_id").get<int>(), y.at("count").get<std::size_t>()});
        }
        b.country_impact = ranked_from_json(doc.at("country_impact"));
        b.institution_impact = ranked_from_json(doc.at("institution_impact"));
        b.author_impact = ranked_from_json(doc.at("author_impact"));
        b.top_papers = ranked_from_json(doc.at("top_papers"));
        return b;
    } catch (const json::exception& ex) {
        throw Error(Errc::parse, std::string("analytics document: ") + ex.what());
    }
}

} // namespace isle::graph
