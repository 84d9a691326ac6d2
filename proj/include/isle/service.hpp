#pragma once

#include "isle/corpus.hpp"
#include "isle/embedder.hpp"
#include "isle/graph.hpp"
#include "isle/lexical_index.hpp"
#include "isle/retrieval.hpp"
#include "isle/topics.hpp"
#include "isle/vector_index.hpp"

#include <cstddef>
#include <filesystem>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace isle::service {

struct ServiceConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path work_dir = "isle-work";
    vec::EmbedderBinding embedder;
    std::size_t default_limit = 5000;
    std::size_t rrf_k = 60;
    topics::TopicMode topic_mode = topics::TopicMode::auto_select;
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::size_t cache_size = 64;
    std::size_t threads = 8;

    /// Throws Error(invalid_argument) for non-positive numeric settings.
    void validate() const;
    /// Applies one `key = value` setting. Unknown keys are rejected.
    void set(std::string_view key, std::string_view value);
};

/// Known keys, in the order they are documented.
const std::vector<std::string>& config_keys();

/// Reads `key = value` lines (`#` comments, optional quotes), then applies
/// ISLE_<KEY> environment overrides.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file);

// Work directory layout:
//   corpus/                      persisted snapshot
//   index/CURRENT                active generation number
//   index/gen-<n>/{lexical,vector,manifest.json}
//   explorations/<query_id>/{result,topics,graph,analytics}.json
struct WorkPaths {
    std::filesystem::path root;

    std::filesystem::path corpus() const { return root / "corpus"; }
    std::filesystem::path index() const { return root / "index"; }
    std::filesystem::path generation(std::size_t n) const {
        return index() / ("gen-" + std::to_string(n));
    }
    std::filesystem::path explorations() const { return root / "explorations"; }
};

/// Loads raw corpus files, validates them and persists the snapshot.
corpus::IngestReport ingest(const corpus::CorpusPaths& input, const WorkPaths& work,
                            const corpus::ValidationPolicy& policy,
                            const std::string& embedding_model);

struct IndexOutcome {
    std::size_t generation = 0;
    bool rebuilt = false;
};

/// Builds both indexes into a fresh generation directory and then swaps
/// CURRENT. Skips the build when the active generation already matches the
/// snapshot and analyzer settings.
IndexOutcome build_indexes(const WorkPaths& work, const text::AnalyzerConfig& analyzer = {},
                           const lexical::Bm25Params& params = {});

std::optional<std::size_t> current_generation(const WorkPaths& work);

struct ExploreRequest {
    retrieval::QueryRequest query;
    topics::TopicMode topic_mode = topics::TopicMode::auto_select;
};

/// Hash of the normalized query, filters, limits, topic mode and generation.
std::string query_id(const ExploreRequest& request, std::size_t generation);

/// Serialized artifacts of one exploration; result_json embeds the others'
/// summaries so it alone answers an explore call.
struct Exploration {
    std::string query_id;
    std::string result_json;
    std::string topics_json;
    std::string graph_json;
    std::string analytics_json;
    bool semantic_degraded = false;
};

struct SearchOutcome {
    std::string json;
    bool semantic_degraded = false;
};

class Explorer {
public:
    /// Opens the active generation. Throws Error(not_found) with a remediation
    /// hint when the work directory has no corpus or index.
    explicit Explorer(ServiceConfig config);
    /// For tests: a caller-supplied embedder (may be null).
    Explorer(ServiceConfig config, std::unique_ptr<vec::Embedder> embedder);

    std::shared_ptr<const Exploration> explore(const ExploreRequest& request,
                                               bool* from_cache = nullptr);
    SearchOutcome search(const ExploreRequest& request);

    /// Artifacts of a previous exploration (memory, then disk).
    std::optional<std::string> artifact(std::string_view query_id, std::string_view name) const;
    /// Paper metadata; `query_id` adds its graph-local impact.
    std::optional<std::string> paper_json(std::string_view paper_id,
                                          std::optional<std::string_view> query_id) const;
    std::string health_json() const;

    const corpus::CorpusSnapshot& snapshot() const noexcept { return snapshot_; }
    std::size_t generation() const noexcept { return generation_; }
    const ServiceConfig& config() const noexcept { return config_; }
    ExploreRequest default_request(std::string query) const;

private:
    std::shared_ptr<const Exploration> run(const ExploreRequest& request, const std::string& id);
    std::shared_ptr<const Exploration> load_persisted(const std::string& id) const;
    void persist(const Exploration& e) const;
    void remember(const std::shared_ptr<const Exploration>& e);

    ServiceConfig config_;
    WorkPaths work_;
    corpus::CorpusSnapshot snapshot_;
    lexical::InvertedIndex lexical_;
    vec::VectorIndex vector_;
    std::unique_ptr<vec::Embedder> embedder_;
    std::size_t generation_ = 0;
    retrieval::RetrievalConfig retrieval_config_;

    mutable std::mutex mutex_;
    std::list<std::shared_ptr<const Exploration>> lru_;
    std::unordered_map<std::string, std::list<std::shared_ptr<const Exploration>>::iterator> cache_;
    std::map<std::string, std::shared_future<std::shared_ptr<const Exploration>>> inflight_;
};

/// Request body fields: query, filters {year_from, year_to, authors,
/// institutions, countries}, limit, rrf_k, topic_mode. Throws Error(parse)
/// or Error(invalid_argument) on malformed input.
ExploreRequest parse_explore_request(std::string_view body, const ServiceConfig& defaults);

} // namespace isle::service
