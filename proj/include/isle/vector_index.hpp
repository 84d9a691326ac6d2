#pragma once

#include "isle/corpus.hpp"
#include "isle/ranking.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace isle::vec {

using DenseVector = std::vector<double>;

/// Throws Error(degenerate_vector) on zero norm, Error(shape) on dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

/// Unit-normalized copy; Error(degenerate_vector) on zero norm or non-finite input.
DenseVector normalized(std::span<const double> v);

/// Exact store of unit-normalized document vectors keyed by corpus ordinal.
class VectorIndex {
public:
    std::size_t dimension() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ordinals_.size(); }
    /// Corpus ordinal of stored row i.
    std::size_t ordinal(std::size_t row) const { return ordinals_.at(row); }
    const std::string& paper_id(std::size_t row) const { return ids_.at(row); }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    /// Papers whose embedding had zero norm.
    const std::vector<std::string>& excluded() const noexcept { return excluded_; }
    const std::string& model_id() const noexcept { return model_id_; }
    const std::string& snapshot_hash() const noexcept { return snapshot_hash_; }

    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir);

    bool operator==(const VectorIndex&) const = default;

private:
    friend VectorIndex build_vector_index(const corpus::CorpusSnapshot&);

    std::size_t dim_ = 0;
    std::vector<std::size_t> ordinals_;
    std::vector<std::string> ids_;
    std::vector<double> data_;
    std::vector<std::string> excluded_;
    std::string model_id_;
    std::string snapshot_hash_;
};

VectorIndex build_vector_index(const corpus::CorpusSnapshot& snapshot);

/// Exhaustive cosine scan. Filter applies before ranking; ties by paper_id.
RankedList knn_search(const VectorIndex& index, std::span<const double> query, std::size_t k,
                      const DocSet* filter = nullptr);

} // namespace isle::vec
