#include "isle/vector_index.hpp"

#include "isle/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace isle::vec {

using nlohmann::json;
namespace fs = std::filesystem;

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

DenseVector normalized(std::span<const double> v) {
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        throw Error(Errc::degenerate_vector, "vector has non-finite components");
    }
    const double n = l2_norm(v);
    if (!(n > 0.0)) throw Error(Errc::degenerate_vector, "zero-norm vector");
    DenseVector out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::shape, "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                     std::to_string(b.size()));
    }
    const double na = l2_norm(a), nb = l2_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw Error(Errc::degenerate_vector, "zero-norm vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

VectorIndex build_vector_index(const corpus::CorpusSnapshot& snapshot) {
    VectorIndex index;
    index.dim_ = snapshot.embedding_dimension();
    index.model_id_ = snapshot.embedding_model();
    index.snapshot_hash_ = snapshot.content_hash();
    // embeddings() is ordered by paper_id, which is ordinal order.
    for (const auto& [id, vec] : snapshot.embeddings()) {
        const double n = l2_norm(vec);
        if (!(n > 0.0)) {
            index.excluded_.push_back(id);
            continue;
        }
        index.ordinals_.push_back(*snapshot.ordinal_of(id));
        index.ids_.push_back(id);
        for (double x : vec) index.data_.push_back(x / n);
    }
    return index;
}

RankedList knn_search(const VectorIndex& index, std::span<const double> query, std::size_t k,
                      const DocSet* filter) {
    if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
    if (query.size() != index.dimension()) {
        throw Error(Errc::shape, "query dimension " + std::to_string(query.size()) +
                                     " does not match index dimension " +
                                     std::to_string(index.dimension()));
    }
    const DenseVector q = normalized(query);

    std::vector<std::pair<std::size_t, double>> scored;
    scored.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (filter != nullptr && !filter->contains(index.ordinal(r))) continue;
        auto row = index.row(r);
        double dot = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) dot += q[i] * row[i];
        scored.emplace_back(r, std::clamp(dot, -1.0, 1.0));
    }
    auto by_rank = [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return index.paper_id(a.first) < index.paper_id(b.first);
    };
    const auto keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), by_rank);
    scored.resize(keep);

    std::vector<std::pair<std::string, double>> ordered;
    ordered.reserve(keep);
    for (const auto& [r, s] : scored) ordered.emplace_back(index.paper_id(r), s);
    return make_ranked_list(std::move(ordered), RankSource::semantic);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "vector index files are written little-endian");

} // namespace

void VectorIndex::save(const fs::path& dir) const {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "vectors.f64", std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io, "cannot write vector index");
        out.write(reinterpret_cast<const char*>(data_.data()),
                  static_cast<std::streamsize>(data_.size() * sizeof(double)));
    }
    {
        std::ofstream out(dir / "rows.tsv", std::ios::binary | std::ios::trunc);
        for (std::size_t r = 0; r < ids_.size(); ++r) {
            out << ordinals_[r] << '\t' << ids_[r] << '\n';
        }
    }
    json manifest{{"format", "isle-vector-v1"},
                  {"dimension", dim_},
                  {"rows", ids_.size()},
                  {"excluded", excluded_},
                  {"model", model_id_},
                  {"snapshot_hash", snapshot_hash_}};
    std::ofstream(dir / "manifest.json", std::ios::binary | std::ios::trunc)
        << manifest.dump(2) << '\n';
}

VectorIndex VectorIndex::load(const fs::path& dir) {
    std::ifstream min(dir / "manifest.json");
    if (!min) throw Error(Errc::io, "missing vector index manifest in " + dir.string());
    json manifest = json::parse(min, nullptr, false);
    if (!manifest.is_object() || manifest.value("format", "") != "isle-vector-v1") {
        throw Error(Errc::parse, "bad vector index manifest in " + dir.string());
    }
    VectorIndex index;
    index.dim_ = manifest.at("dimension").get<std::size_t>();
    index.excluded_ = manifest.at("excluded").get<std::vector<std::string>>();
    index.model_id_ = manifest.at("model").get<std::string>();
    index.snapshot_hash_ = manifest.at("snapshot_hash").get<std::string>();

    std::ifstream rows(dir / "rows.tsv");
    std::string line;
    while (std::getline(rows, line)) {
        auto tab = line.find('\t');
        index.ordinals_.push_back(std::stoul(line.substr(0, tab)));
        index.ids_.push_back(line.substr(tab + 1));
    }
    if (index.ids_.size() != manifest.at("rows").get<std::size_t>()) {
        throw Error(Errc::consistency, "vector row count does not match manifest");
    }
    index.data_.resize(index.ids_.size() * index.dim_);
    std::ifstream in(dir / "vectors.f64", std::ios::binary);
    in.read(reinterpret_cast<char*>(index.data_.data()),
            static_cast<std::streamsize>(index.data_.size() * sizeof(double)));
    if (!in && !index.data_.empty()) throw Error(Errc::io, "truncated vector file");
    return index;
}

} // namespace isle::vec
