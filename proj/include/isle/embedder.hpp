#pragma once

#include "isle/text.hpp"
#include "isle/vector_index.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isle::vec {

enum class EmbedderMode { external_service, deterministic_projection };

struct EmbedderBinding {
    EmbedderMode mode = EmbedderMode::deterministic_projection;
    std::optional<std::string> endpoint;     // external-service only, http://host:port/path
    std::optional<std::uint64_t> seed = 42;  // projection only
    std::size_t dimension = 384;
    std::chrono::milliseconds timeout{2000};
    /// Model the external service is expected to report; empty accepts any.
    std::string expected_model;

    void validate() const;

    /// Identity recorded in corpus manifests. For projection mode this encodes
    /// seed and dimension; for external mode it is `expected_model`.
    std::string model_id() const;

    static EmbedderBinding projection(std::uint64_t seed, std::size_t dimension = 384);
    static EmbedderBinding external(std::string endpoint, std::size_t dimension = 384);
};

struct Embedding {
    DenseVector vector;
    std::string model;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) = 0;
    Embedding embed(std::string_view text);
};

std::unique_ptr<Embedder> make_embedder(const EmbedderBinding& binding,
                                        const text::AnalyzerConfig& analyzer = {});

/// Single-text convenience over make_embedder. Errors: embedder_unavailable
/// (service down or timed out), shape (dimension mismatch), invalid_argument
/// (projection of text with no analyzable tokens).
Embedding embed_query(const EmbedderBinding& binding, std::string_view text);

/// Seeded-hash projection of analyzed tokens, unit-normalized.
DenseVector project_tokens(const text::TokenList& tokens, std::uint64_t seed,
                           std::size_t dimension);

} // namespace isle::vec
