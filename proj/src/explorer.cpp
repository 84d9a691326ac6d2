#include "isle/error.hpp"
#include "isle/hash.hpp"
#include "isle/service.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace isle::service {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kArtifacts[] = {"result", "topics", "graph", "analytics"};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) throw Error(Errc::io, "cannot write " + p.string());
}

bool valid_query_id(std::string_view id) {
    return id.size() == 64 && std::all_of(id.begin(), id.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

ojson filters_json(const retrieval::FilterSpec& f) {
    ojson j = ojson::object();
    if (f.year_range) {
        j["year_from"] = f.year_range->first;
        j["year_to"] = f.year_range->second;
    }
    std::vector<std::string> authors;
    for (const auto& a : f.authors) {
        std::string joined;
        for (const auto& t : text::analyze_name(a)) joined += (joined.empty() ? "" : " ") + t;
        authors.push_back(joined);
    }
    std::vector<std::string> countries;
    for (auto c : f.countries) {
        std::transform(c.begin(), c.end(), c.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
        countries.push_back(c);
    }
    j["authors"] = sorted_unique(authors);
    j["institutions"] = sorted_unique(f.institutions);
    j["countries"] = sorted_unique(countries);
    return j;
}

ojson year_json(int year) { return year == corpus::kUnknownYear ? ojson(nullptr) : ojson(year); }

ojson topics_json(const std::optional<topics::TopicStageResult>& stage) {
    ojson out = ojson::object();
    out["path"] = stage ? ojson(std::string(to_string(stage->path))) : ojson(nullptr);
    ojson summaries = ojson::array();
    ojson assignments = ojson::array();
    ojson sweep = ojson::array();
    auto report_json = [](const topics::CoherenceReport& r) {
        return ojson{{"k", r.k}, {"per_topic", r.per_topic}, {"mean_npmi", r.mean_npmi}};
    };
    ojson coherence = nullptr;
    if (stage) {
        for (const auto& s : stage->summaries) {
            ojson kws = ojson::array();
            for (const auto& [term, w] : s.keywords) kws.push_back({{"term", term}, {"weight", w}});
            summaries.push_back({{"topic_id", s.topic_id},
                                 {"keywords", std::move(kws)},
                                 {"document_count", s.document_count}});
        }
        for (const auto& a : stage->assignments) {
            ojson row{{"paper_id", a.paper_id}, {"topic_id", a.topic_id}, {"probability", a.probability}};
            if (!a.distribution.empty()) row["distribution"] = a.distribution;
            assignments.push_back(std::move(row));
        }
        coherence = report_json(stage->coherence);
        for (const auto& r : stage->k_sweep) sweep.push_back(report_json(r));
    }
    out["summaries"] = std::move(summaries);
    out["assignments"] = std::move(assignments);
    out["coherence"] = std::move(coherence);
    out["k_sweep"] = std::move(sweep);
    return out;
}

} // namespace

std::string query_id(const ExploreRequest& request, std::size_t generation) {
    const auto& q = request.query;
    ojson canonical{{"query", retrieval::preprocess_query(q.text)},
                    {"filters", filters_json(q.filters)},
                    {"limit", q.limit},
                    {"rrf_k", q.rrf_k},
                    {"depth", q.depth()},
                    {"topic_mode", std::string(to_string(request.topic_mode))},
                    {"generation", generation}};
    return sha256_hex(canonical.dump());
}

ExploreRequest parse_explore_request(std::string_view body, const ServiceConfig& defaults) {
    ojson j;
    try {
        j = ojson::parse(body);
    } catch (const ojson::exception& e) {
        throw Error(Errc::parse, std::string("request body is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(Errc::parse, "request body must be a JSON object");
    ExploreRequest r;
    r.query.limit = defaults.default_limit;
    r.query.rrf_k = defaults.rrf_k;
    r.topic_mode = defaults.topic_mode;
    try {
        if (!j.contains("query") || !j["query"].is_string()) {
            throw Error(Errc::invalid_argument, "field 'query' (string) is required");
        }
        r.query.text = j["query"].get<std::string>();
        if (j.contains("limit")) r.query.limit = j["limit"].get<std::size_t>();
        if (j.contains("rrf_k")) r.query.rrf_k = j["rrf_k"].get<std::size_t>();
        if (j.contains("topic_mode")) {
            auto mode = topics::parse_topic_mode(j["topic_mode"].get<std::string>());
            if (!mode) throw Error(Errc::invalid_argument, "topic_mode must be auto, nmf or cluster");
            r.topic_mode = *mode;
        }
        if (j.contains("filters") && !j["filters"].is_null()) {
            const auto& f = j["filters"];
            if (!f.is_object()) throw Error(Errc::invalid_argument, "'filters' must be an object");
            if (f.contains("year_from") || f.contains("year_to")) {
                r.query.filters.year_range = {f.value("year_from", corpus::kMinYear),
                                              f.value("year_to", corpus::kMaxYear)};
            }
            for (auto key : {"authors", "institutions", "countries"}) {
                if (!f.contains(key)) continue;
                auto values = f[key].get<std::vector<std::string>>();
                auto& dest = std::string_view(key) == "authors"        ? r.query.filters.authors
                             : std::string_view(key) == "institutions" ? r.query.filters.institutions
                                                                       : r.query.filters.countries;
                dest = std::move(values);
            }
        }
    } catch (const ojson::exception& e) {
        throw Error(Errc::invalid_argument, std::string("malformed request field: ") + e.what());
    }
    r.query.validate();
    return r;
}

Explorer::Explorer(ServiceConfig config) : Explorer(config, nullptr) {
    embedder_ = vec::make_embedder(config_.embedder, retrieval_config_.analyzer);
}

Explorer::Explorer(ServiceConfig config, std::unique_ptr<vec::Embedder> embedder)
    : config_(std::move(config)), work_{config_.work_dir}, embedder_(std::move(embedder)) {
    config_.validate();
    if (!fs::exists(work_.corpus() / "manifest")) {
        throw Error(Errc::not_found, "no corpus in " + work_.root.string() +
                                         "; run `isle ingest` and `isle index` first");
    }
    auto gen = current_generation(work_);
    if (!gen) {
        throw Error(Errc::not_found,
                    "no index in " + work_.root.string() + "; run `isle index` first");
    }
    generation_ = *gen;
    snapshot_ = corpus::load_snapshot(work_.corpus());
    lexical_ = lexical::InvertedIndex::load(work_.generation(generation_) / "lexical");
    vector_ = vec::VectorIndex::load(work_.generation(generation_) / "vector");
}

ExploreRequest Explorer::default_request(std::string query) const {
    ExploreRequest r;
    r.query.text = std::move(query);
    r.query.limit = config_.default_limit;
    r.query.rrf_k = config_.rrf_k;
    r.topic_mode = config_.topic_mode;
    return r;
}

std::shared_ptr<const Exploration> Explorer::explore(const ExploreRequest& request,
                                                     bool* from_cache) {
    request.query.validate();
    const auto id = query_id(request, generation_);
    if (from_cache) *from_cache = true;

    std::promise<std::shared_ptr<const Exploration>> promise;
    {
        std::unique_lock lock(mutex_);
        if (auto it = cache_.find(id); it != cache_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return *it->second;
        }
        if (auto it = inflight_.find(id); it != inflight_.end()) {
            auto future = it->second;
            lock.unlock();
            return future.get();
        }
        inflight_.emplace(id, promise.get_future().share());
    }

    std::shared_ptr<const Exploration> result;
    try {
        result = load_persisted(id);
        if (!result) {
            if (from_cache) *from_cache = false;
            result = run(request, id);
            persist(*result);
        }
    } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex_);
        inflight_.erase(id);
        throw;
    }
    promise.set_value(result);
    std::lock_guard lock(mutex_);
    inflight_.erase(id);
    if (!result->semantic_degraded) remember(result);
    return result;
}

void Explorer::remember(const std::shared_ptr<const Exploration>& e) {
    if (cache_.contains(e->query_id)) return;
    lru_.push_front(e);
    cache_[e->query_id] = lru_.begin();
    while (lru_.size() > config_.cache_size) {
        cache_.erase(lru_.back()->query_id);
        lru_.pop_back();
    }
}

std::shared_ptr<const Exploration> Explorer::load_persisted(const std::string& id) const {
    const auto dir = work_.explorations() / id;
    for (auto name : kArtifacts) {
        if (!fs::exists(dir / (std::string(name) + ".json"))) return nullptr;
    }
    auto e = std::make_shared<Exploration>();
    e->query_id = id;
    e->result_json = slurp(dir / "result.json");
    e->topics_json = slurp(dir / "topics.json");
    e->graph_json = slurp(dir / "graph.json");
    e->analytics_json = slurp(dir / "analytics.json");
    try {
        e->semantic_degraded = ojson::parse(e->result_json).at("semantic_degraded").get<bool>();
    } catch (const ojson::exception&) {
        return nullptr;
    }
    if (e->semantic_degraded) return nullptr;
    return e;
}

void Explorer::persist(const Exploration& e) const {
    fs::create_directories(work_.explorations());
    const auto dir = work_.explorations() / e.query_id;
    const auto staging = work_.explorations() / (e.query_id + ".tmp");
    fs::remove_all(staging);
    fs::create_directories(staging);
    write_file(staging / "result.json", e.result_json);
    write_file(staging / "topics.json", e.topics_json);
    write_file(staging / "graph.json", e.graph_json);
    write_file(staging / "analytics.json", e.analytics_json);
    fs::remove_all(dir);
    fs::rename(staging, dir);
}

std::shared_ptr<const Exploration> Explorer::run(const ExploreRequest& request,
                                                 const std::string& id) {
    auto retrieved = retrieval::retrieve(snapshot_, lexical_, vector_, embedder_.get(),
                                         request.query, retrieval_config_);

    std::optional<topics::TopicStageResult> stage;
    if (!retrieved.fused.empty()) {
        std::vector<topics::TopicDocument> docs;
        docs.reserve(retrieved.fused.size());
        for (const auto& entry : retrieved.fused.entries) {
            const auto* paper = corpus::get_paper(snapshot_, entry.paper_id);
            topics::TopicDocument d{entry.paper_id, paper->title + " " + paper->abstract, std::nullopt};
            if (auto it = snapshot_.embeddings().find(entry.paper_id);
                it != snapshot_.embeddings().end()) {
                d.embedding = it->second;
            }
            docs.push_back(std::move(d));
        }
        topics::TopicStageOptions options;
        options.mode = request.topic_mode;
        options.analyzer = retrieval_config_.analyzer;
        stage = topics::run_topic_stage(docs, options);
    }

    std::span<const topics::TopicAssignment> assignments;
    std::span<const topics::TopicSummary> summaries;
    if (stage) {
        assignments = stage->assignments;
        summaries = stage->summaries;
    }
    auto kg = graph::build_graph(retrieved.fused, assignments, summaries, snapshot_,
                                 {id, snapshot_.content_hash(), generation_});
    auto analytics = graph::compute_analytics(kg);

    auto e = std::make_shared<Exploration>();
    e->query_id = id;
    e->semantic_degraded = retrieved.semantic_degraded;
    e->graph_json = graph::export_graph(kg);
    e->analytics_json = graph::analytics_to_json(analytics);
    auto topics = topics_json(stage);
    e->topics_json = topics.dump(1) + "\n";

    std::map<std::string, const topics::TopicAssignment*> topic_of;
    for (const auto& a : assignments) topic_of[a.paper_id] = &a;
    ojson results = ojson::array();
    for (const auto& entry : retrieved.fused.entries) {
        const auto* paper = corpus::get_paper(snapshot_, entry.paper_id);
        ojson row{{"rank", entry.rank},
                  {"paper_id", entry.paper_id},
                  {"score", entry.score},
                  {"title", paper->title},
                  {"year", year_json(paper->publication_year)}};
        auto it = topic_of.find(entry.paper_id);
        row["topic_id"] = it == topic_of.end() ? ojson(nullptr) : ojson(it->second->topic_id);
        results.push_back(std::move(row));
    }

    ojson payload;
    payload["query_id"] = id;
    payload["query"] = request.query.text;
    payload["normalized_query"] = retrieved.normalized_query;
    payload["filters"] = filters_json(request.query.filters);
    payload["limit"] = request.query.limit;
    payload["rrf_k"] = request.query.rrf_k;
    payload["per_path_depth"] = request.query.depth();
    payload["topic_mode"] = std::string(to_string(request.topic_mode));
    payload["generation"] = generation_;
    payload["snapshot_hash"] = snapshot_.content_hash();
    payload["semantic_degraded"] = retrieved.semantic_degraded;
    payload["degradation_reason"] = retrieved.degradation_reason;
    payload["results"] = std::move(results);
    payload["topics"] = std::move(topics);
    payload["graph"] = {{"href", "/api/graph/" + id},
                        {"nodes", kg.nodes().size()},
                        {"edges", kg.edges().size()}};
    payload["analytics"] = ojson::parse(e->analytics_json);
    e->result_json = payload.dump(1) + "\n";
    return e;
}

SearchOutcome Explorer::search(const ExploreRequest& request) {
    request.query.validate();
    auto retrieved = retrieval::retrieve(snapshot_, lexical_, vector_, embedder_.get(),
                                         request.query, retrieval_config_);
    ojson results = ojson::array();
    for (const auto& entry : retrieved.fused.entries) {
        const auto* paper = corpus::get_paper(snapshot_, entry.paper_id);
        results.push_back({{"rank", entry.rank},
                           {"paper_id", entry.paper_id},
                           {"score", entry.score},
                           {"title", paper->title},
                           {"year", year_json(paper->publication_year)}});
    }
    ojson payload{{"query", request.query.text},
                  {"normalized_query", retrieved.normalized_query},
                  {"filters", filters_json(request.query.filters)},
                  {"limit", request.query.limit},
                  {"generation", generation_},
                  {"semantic_degraded", retrieved.semantic_degraded},
                  {"degradation_reason", retrieved.degradation_reason},
                  {"results", std::move(results)}};
    return {payload.dump(1) + "\n", retrieved.semantic_degraded};
}

std::optional<std::string> Explorer::artifact(std::string_view id, std::string_view name) const {
    if (!valid_query_id(id)) return std::nullopt;
    if (std::find(std::begin(kArtifacts), std::end(kArtifacts), name) == std::end(kArtifacts)) {
        return std::nullopt;
    }
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(std::string(id)); it != cache_.end()) {
            const auto& e = **it->second;
            if (name == "result") return e.result_json;
            if (name == "topics") return e.topics_json;
            if (name == "graph") return e.graph_json;
            return e.analytics_json;
        }
    }
    const auto file = work_.explorations() / std::string(id) / (std::string(name) + ".json");
    if (!fs::exists(file)) return std::nullopt;
    return slurp(file);
}

std::optional<std::string> Explorer::paper_json(std::string_view paper_id,
                                                std::optional<std::string_view> qid) const {
    const auto* paper = corpus::get_paper(snapshot_, paper_id);
    if (!paper) return std::nullopt;
    const auto ord = *snapshot_.ordinal_of(paper_id);
    ojson authors = ojson::array();
    for (const auto& id : snapshot_.paper_authors(ord)) {
        const auto* a = snapshot_.find_author(id);
        authors.push_back({{"author_id", id}, {"name", a ? a->name : ""}});
    }
    ojson j{{"paper_id", paper->paper_id},
            {"title", paper->title},
            {"abstract", paper->abstract},
            {"year", year_json(paper->publication_year)},
            {"arxiv_id", paper->arxiv_id ? ojson(*paper->arxiv_id) : ojson(nullptr)},
            {"doi", paper->doi ? ojson(*paper->doi) : ojson(nullptr)},
            {"subject", paper->subject},
            {"authors", std::move(authors)},
            {"institutions", snapshot_.paper_institutions(ord)},
            {"countries", snapshot_.paper_countries(ord)},
            {"references", snapshot_.cited_by_paper(ord).size()}};
    ojson impact = nullptr;
    if (qid) {
        auto doc = artifact(*qid, "graph");
        if (!doc) throw Error(Errc::not_found, "unknown exploration " + std::string(*qid));
        auto kg = graph::import_graph(*doc);
        graph::NodeRef ref{graph::NodeKind::paper, std::string(paper_id)};
        if (kg.find(ref)) impact = graph::paper_impact(kg, ref);
        j["query_id"] = std::string(*qid);
    }
    j["impact"] = std::move(impact);
    return j.dump(1) + "\n";
}

std::string Explorer::health_json() const {
    ojson j{{"status", "ok"}, {"papers", snapshot_.papers().size()}};
    return j.dump();
}

} // namespace isle::service
