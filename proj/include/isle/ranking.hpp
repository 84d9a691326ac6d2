#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace isle {

enum class RankSource { lexical, semantic, fused };

std::string_view to_string(RankSource source) noexcept;

struct RankedEntry {
    std::string paper_id;
    double score = 0.0;
    std::size_t rank = 0; // 1-based

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::vector<RankedEntry> entries;
    RankSource source = RankSource::fused;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    /// Ranks 1..n in position order and scores non-increasing.
    bool is_valid() const;
};

/// Assigns ranks 1..n to already-ordered (paper_id, score) pairs.
RankedList make_ranked_list(std::vector<std::pair<std::string, double>> ordered,
                            RankSource source);

/// Set of document ordinals; used to restrict search to a filtered subset.
class DocSet {
public:
    DocSet() = default;
    explicit DocSet(std::size_t universe) : bits_(universe, false) {}

    void insert(std::size_t ordinal) {
        if (!bits_[ordinal]) {
            bits_[ordinal] = true;
            ++count_;
        }
    }
    bool contains(std::size_t ordinal) const noexcept {
        return ordinal < bits_.size() && bits_[ordinal];
    }
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    std::size_t universe() const noexcept { return bits_.size(); }

    std::vector<std::size_t> to_vector() const;

    bool operator==(const DocSet&) const = default;

private:
    std::vector<bool> bits_;
    std::size_t count_ = 0;
};

} // namespace isle
