#include "isle/embedder.hpp"

#include "isle/error.hpp"
#include "isle/hash.hpp"

#include <httplib.h>
#include <json.hpp>

namespace isle::vec {

using nlohmann::json;

void EmbedderBinding::validate() const {
    if (dimension == 0) throw Error(Errc::invalid_argument, "embedder dimension must be positive");
    if (mode == EmbedderMode::external_service && (!endpoint || endpoint->empty())) {
        throw Error(Errc::invalid_argument, "external embedder requires an endpoint");
    }
    if (mode == EmbedderMode::deterministic_projection && !seed) {
        throw Error(Errc::invalid_argument, "projection embedder requires a seed");
    }
}

std::string EmbedderBinding::model_id() const {
    if (mode == EmbedderMode::deterministic_projection) {
        return "projection-v1:d=" + std::to_string(dimension) + ":seed=" +
               std::to_string(seed.value_or(0));
    }
    return expected_model;
}

EmbedderBinding EmbedderBinding::projection(std::uint64_t seed, std::size_t dimension) {
    EmbedderBinding b;
    b.mode = EmbedderMode::deterministic_projection;
    b.seed = seed;
    b.dimension = dimension;
    return b;
}

EmbedderBinding EmbedderBinding::external(std::string endpoint, std::size_t dimension) {
    EmbedderBinding b;
    b.mode = EmbedderMode::external_service;
    b.endpoint = std::move(endpoint);
    b.seed.reset();
    b.dimension = dimension;
    return b;
}

Embedding Embedder::embed(std::string_view text) {
    auto out = embed_batch({std::string(text)});
    return std::move(out.at(0));
}

DenseVector project_tokens(const text::TokenList& tokens, std::uint64_t seed,
                           std::size_t dimension) {
    DenseVector v(dimension, 0.0);
    std::uint64_t seed_state = seed;
    const std::uint64_t seed_mix = splitmix64(seed_state);
    for (const auto& t : tokens) {
        std::uint64_t state = fnv1a64(t) ^ seed_mix;
        for (auto& x : v) x += 2.0 * unit_double(splitmix64(state)) - 1.0;
    }
    return normalized(v);
}

namespace {

class ProjectionEmbedder final : public Embedder {
public:
    ProjectionEmbedder(const EmbedderBinding& b, text::AnalyzerConfig analyzer)
        : seed_(*b.seed), dim_(b.dimension), model_(b.model_id()), analyzer_(std::move(analyzer)) {}

    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            auto tokens = text::analyze(t, analyzer_);
            if (tokens.empty()) {
                throw Error(Errc::invalid_argument, "no analyzable tokens to embed");
            }
            out.push_back(Embedding{project_tokens(tokens, seed_, dim_), model_});
        }
        return out;
    }

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::string model_;
    text::AnalyzerConfig analyzer_;
};

struct ParsedUrl {
    std::string origin; // scheme://host:port
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(Errc::invalid_argument, "embedder endpoint must be an http URL: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class ExternalEmbedder final : public Embedder {
public:
    explicit ExternalEmbedder(const EmbedderBinding& b)
        : url_(parse_url(*b.endpoint)), dim_(b.dimension), timeout_(b.timeout) {}

    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override {
        httplib::Client client(url_.origin);
        const auto secs = timeout_.count() / 1000;
        const auto usecs = (timeout_.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        json body{{"texts", texts}};
        auto res = client.Post(url_.path, body.dump(), "application/json");
        if (!res) {
            throw Error(Errc::embedder_unavailable,
                        "embedding service unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw Error(Errc::embedder_unavailable,
                        "embedding service returned HTTP " + std::to_string(res->status));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
            throw Error(Errc::embedder_unavailable, "malformed embedding service response");
        }
        std::string model = reply.value("model", std::string{});
        const auto& vectors = reply["vectors"];
        if (vectors.size() != texts.size()) {
            throw Error(Errc::shape, "embedding service returned " +
                                         std::to_string(vectors.size()) + " vectors for " +
                                         std::to_string(texts.size()) + " texts");
        }
        std::vector<Embedding> out;
        for (const auto& v : vectors) {
            auto vec = v.get<DenseVector>();
            if (vec.size() != dim_) {
                throw Error(Errc::shape, "embedding service returned dimension " +
                                             std::to_string(vec.size()) + ", expected " +
                                             std::to_string(dim_));
            }
            out.push_back(Embedding{std::move(vec), model});
        }
        return out;
    }

private:
    ParsedUrl url_;
    std::size_t dim_;
    std::chrono::milliseconds timeout_;
};

} // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderBinding& binding,
                                        const text::AnalyzerConfig& analyzer) {
    binding.validate();
    if (binding.mode == EmbedderMode::deterministic_projection) {
        return std::make_unique<ProjectionEmbedder>(binding, analyzer);
    }
    return std::make_unique<ExternalEmbedder>(binding);
}

Embedding embed_query(const EmbedderBinding& binding, std::string_view text) {
    return make_embedder(binding)->embed(text);
}

} // namespace isle::vec
