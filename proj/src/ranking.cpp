#include "isle/ranking.hpp"

namespace isle {

std::string_view to_string(RankSource source) noexcept {
    switch (source) {
    case RankSource::lexical: return "lexical";
    case RankSource::semantic: return "semantic";
    case RankSource::fused: return "fused";
    }
    return "fused";
}

bool RankedList::is_valid() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].rank != i + 1) return false;
        if (i > 0 && entries[i].score > entries[i - 1].score) return false;
    }
    return true;
}

RankedList make_ranked_list(std::vector<std::pair<std::string, double>> ordered,
                            RankSource source) {
    RankedList list;
    list.source = source;
    list.entries.reserve(ordered.size());
    std::size_t rank = 0;
    for (auto& [id, score] : ordered) {
        list.entries.push_back(RankedEntry{std::move(id), score, ++rank});
    }
    return list;
}

std::vector<std::size_t> DocSet::to_vector() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out.push_back(i);
    }
    return out;
}

} // namespace isle
