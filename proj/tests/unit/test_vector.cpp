#include "oracles.hpp"
#include "support.hpp"

#include "isle/error.hpp"
#include "isle/vector_index.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace isle;
using namespace isle::vec;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<double> v(d);
    for (auto& x : v) x = g(rng);
    return v;
}

testing::MiniCorpus vector_corpus(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    testing::MiniCorpus c;
    for (std::size_t i = 0; i < n; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "v%04zu", i);
        c.papers.push_back({id, "title", "", 2020});
        c.embeddings[id] = random_vector(rng, d);
    }
    return c;
}

} // namespace

TEST_SUITE("vector-index") {

TEST_CASE("cosine examples") {
    std::vector<double> a{1, 0}, b{0, 1}, c{1, 2, 3}, e{4, 5, 6};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(c, e) == doctest::Approx(0.97463).epsilon(1e-5));
    std::vector<double> zero{0, 0};
    CHECK_THROWS_AS(cosine_similarity(zero, a), Error);
    CHECK_THROWS_AS(cosine_similarity(a, c), Error);
}

TEST_CASE("normalization") {
    std::vector<double> v{3, 4};
    auto n = normalized(v);
    CHECK(n[0] == doctest::Approx(0.6));
    CHECK(n[1] == doctest::Approx(0.8));
    CHECK(l2_norm(v) == doctest::Approx(5.0));
    std::vector<double> zero{0, 0, 0};
    try {
        normalized(zero);
        FAIL("expected degenerate_vector");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_vector);
    }
}

TEST_CASE("zero vectors are excluded from the index") {
    testing::MiniCorpus c;
    c.papers = {{"a", "t", "", 2020}, {"b", "t", "", 2020}, {"z", "t", "", 2020}};
    c.embeddings = {{"a", {1, 0}}, {"b", {0, 1}}, {"z", {0, 0}}};
    auto idx = build_vector_index(testing::load_mini(c));
    CHECK(idx.size() == 2);
    CHECK(idx.excluded() == std::vector<std::string>{"z"});
    auto r = knn_search(idx, std::vector<double>{1, 1}, 10);
    CHECK(r.size() == 2);
    for (const auto& e : r.entries) CHECK(e.paper_id != "z");
}

TEST_CASE("fixture index holds every usable embedding") {
    const auto& snap = testing::fixture();
    auto idx = build_vector_index(snap);
    std::size_t nonzero = 0;
    for (const auto& [id, v] : snap.embeddings()) {
        bool any = false;
        for (double x : v) any = any || x != 0.0;
        nonzero += any;
    }
    CHECK(snap.embeddings().size() == 196);
    CHECK(idx.size() == nonzero);
    CHECK(idx.size() == 195);
    CHECK(idx.dimension() == 384);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        CHECK(l2_norm(idx.row(i)) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(snap.papers()[idx.ordinal(i)].paper_id == idx.paper_id(i));
    }
}

TEST_CASE("knn matches a full sort") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 3; ++round) {
        auto c = vector_corpus(rng, 300, 384);
        auto idx = build_vector_index(testing::load_mini(c));
        for (int q = 0; q < 5; ++q) {
            auto query = random_vector(rng, 384);
            auto want = oracle::full_sort_knn(c.embeddings, query);
            for (std::size_t k : {1, 10, 50}) {
                auto got = knn_search(idx, query, k);
                REQUIRE(got.size() == k);
                for (std::size_t i = 0; i < k; ++i) {
                    CHECK(got.entries[i].paper_id == want[i].first);
                    CHECK(got.entries[i].score == doctest::Approx(want[i].second).epsilon(1e-9));
                }
                CHECK(got.is_valid());
            }
        }
    }
}

TEST_CASE("fixture subset ordering equals a full sort") {
    const auto& snap = testing::fixture();
    testing::MiniCorpus c;
    for (const auto& p : snap.papers()) {
        auto it = snap.embeddings().find(p.paper_id);
        if (it == snap.embeddings().end()) continue;
        if (std::all_of(it->second.begin(), it->second.end(), [](double x) { return x == 0.0; })) continue;
        c.papers.push_back({p.paper_id, p.title, "", 2020});
        c.embeddings[p.paper_id] = it->second;
        if (c.papers.size() == 50) break;
    }
    REQUIRE(c.papers.size() == 50);
    auto idx = build_vector_index(testing::load_mini(c));
    std::mt19937_64 rng(17);
    for (int q = 0; q < 10; ++q) {
        auto query = random_vector(rng, 384);
        auto want = oracle::full_sort_knn(c.embeddings, query);
        auto got = knn_search(idx, query, 50);
        REQUIRE(got.size() == 50);
        for (std::size_t i = 0; i < 50; ++i) CHECK(got.entries[i].paper_id == want[i].first);
    }
}

TEST_CASE("k larger than the index returns everything") {
    std::mt19937_64 rng(3);
    auto c = vector_corpus(rng, 7, 16);
    auto idx = build_vector_index(testing::load_mini(c));
    auto r = knn_search(idx, random_vector(rng, 16), 100);
    CHECK(r.size() == 7);
}

TEST_CASE("query equal to a stored vector finds it first") {
    std::mt19937_64 rng(5);
    auto c = vector_corpus(rng, 50, 32);
    auto idx = build_vector_index(testing::load_mini(c));
    auto r = knn_search(idx, c.embeddings.at("v0017"), 1);
    REQUIRE(r.size() == 1);
    CHECK(r.entries[0].paper_id == "v0017");
    CHECK(r.entries[0].score == doctest::Approx(1.0));
}

TEST_CASE("ranking is invariant to positive query scaling") {
    std::mt19937_64 rng(9);
    auto c = vector_corpus(rng, 100, 64);
    auto idx = build_vector_index(testing::load_mini(c));
    auto q = random_vector(rng, 64);
    auto base = knn_search(idx, q, 20);
    for (double s : {0.001, 3.0, 1e6}) {
        auto scaled = q;
        for (auto& x : scaled) x *= s;
        auto r = knn_search(idx, scaled, 20);
        REQUIRE(r.size() == base.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            CHECK(r.entries[i].paper_id == base.entries[i].paper_id);
        }
    }
}

TEST_CASE("filter applies before ranking") {
    std::mt19937_64 rng(13);
    auto c = vector_corpus(rng, 40, 8);
    auto snap = testing::load_mini(c);
    auto idx = build_vector_index(snap);
    DocSet filter(snap.papers().size());
    for (std::size_t i = 0; i < snap.papers().size(); i += 3) filter.insert(i);
    auto r = knn_search(idx, random_vector(rng, 8), 5, &filter);
    CHECK(r.size() == 5);
    for (const auto& e : r.entries) CHECK(filter.contains(*snap.ordinal_of(e.paper_id)));
    DocSet none(snap.papers().size());
    CHECK(knn_search(idx, random_vector(rng, 8), 5, &none).empty());
}

TEST_CASE("query errors") {
    std::mt19937_64 rng(1);
    auto c = vector_corpus(rng, 5, 8);
    auto idx = build_vector_index(testing::load_mini(c));
    CHECK_THROWS_AS(knn_search(idx, std::vector<double>(8, 0.0), 3), Error);
    CHECK_THROWS_AS(knn_search(idx, std::vector<double>(4, 1.0), 3), Error);
}

TEST_CASE("save and load round-trip") {
    const auto& snap = testing::fixture();
    auto idx = build_vector_index(snap);
    testing::TempDir dir;
    idx.save(dir.path());
    auto loaded = VectorIndex::load(dir.path());
    CHECK(loaded == idx);
    CHECK(loaded.model_id() == snap.embedding_model());
    auto q = std::vector<double>(idx.row(3).begin(), idx.row(3).end());
    CHECK(knn_search(loaded, q, 10).entries == knn_search(idx, q, 10).entries);
}

}
