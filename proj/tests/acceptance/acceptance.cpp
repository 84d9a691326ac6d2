// Runs the primary acceptance criteria and prints one PASS/FAIL line each.

#include "graph_check.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include "isle/error.hpp"
#include "isle/graph.hpp"
#include "isle/lexical_index.hpp"
#include "isle/retrieval.hpp"
#include "isle/service.hpp"
#include "isle/topics.hpp"
#include "isle/vector_index.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace isle;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string id_of(const char* prefix, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
    return buf;
}

RankedList as_list(const std::vector<std::string>& ids) {
    std::vector<std::pair<std::string, double>> v;
    double s = static_cast<double>(ids.size());
    for (const auto& id : ids) v.emplace_back(id, s--);
    return make_ranked_list(std::move(v), RankSource::lexical);
}

topics::SparseMatrix sparse(const Eigen::MatrixXd& m) {
    topics::SparseMatrix s = m.sparseView();
    s.makeCompressed();
    return s;
}

// 1 -------------------------------------------------------------------------
Outcome bm25_equivalence() {
    Outcome out;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    for (int c = 0; c < 5 && out.pass; ++c) {
        const std::size_t n_docs = 40 + rng() % 61;
        auto vocab = testing::synthetic_terms(200 + rng() % 301, rng);
        testing::MiniCorpus corpus;
        std::vector<oracle::Bm25Doc> docs;
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::string title, abstract;
            for (std::size_t i = 0, n = 2 + rng() % 8; i < n; ++i) title += vocab[rng() % 60] + " ";
            for (std::size_t i = 0, n = rng() % 60; i < n; ++i) abstract += vocab[rng() % vocab.size()] + " ";
            corpus.papers.push_back({id_of("d", d), title, abstract, 2020});
            docs.push_back({id_of("d", d), text::analyze(title, {}), text::analyze(abstract, {})});
        }
        auto idx = lexical::build_lexical_index(testing::load_mini(corpus), {});
        for (int q = 0; q < 20 && out.pass; ++q) {
            std::vector<std::string> query;
            const auto len = 1 + rng() % 4;
            if (q % 4 == 0 && !docs[q % docs.size()].title.empty()) {
                // phrase queries lifted from a title
                const auto& t = docs[q % docs.size()].title;
                const auto start = rng() % t.size();
                for (std::size_t i = start; i < t.size() && query.size() < 2; ++i) query.push_back(t[i]);
            } else {
                for (std::size_t i = 0; i < len; ++i) query.push_back(vocab[rng() % 120]);
            }
            lexical::LexicalQuery lq;
            lq.tokens = query;
            lq.top_k = n_docs;
            auto got = lexical::lexical_search(idx, lq);
            auto want = oracle::bm25(docs, query);
            out.require(got.size() == want.size(), "result count differs");
            for (std::size_t i = 0; out.pass && i < want.size(); ++i) {
                out.require(got.entries[i].paper_id == want[i].first, "rank mismatch");
                out.require(std::abs(got.entries[i].score - want[i].second) <= 1e-9 * std::max(1.0, want[i].second),
                            "score mismatch");
            }
        }
    }
    const double secs = seconds_since(t0);
    out.require(secs < 10.0, "took " + std::to_string(secs) + " s");
    if (out.pass) out.detail = "5 corpora x 20 queries in " + std::to_string(secs) + " s";
    return out;
}

// 2 -------------------------------------------------------------------------
Outcome rrf_exactness() {
    Outcome out;
    auto a = retrieval::rrf_fuse(std::vector<RankedList>{as_list({"a", "b"}), as_list({"a", "c"})}, 60);
    out.require(!a.empty() && a.entries[0].paper_id == "a" && std::abs(a.entries[0].score - 2.0 / 61) < 1e-12,
                "hand case 2/61");
    auto b = retrieval::rrf_fuse(std::vector<RankedList>{as_list({"x", "y", "z"}), as_list({"q", "w", "x"})}, 60);
    out.require(!b.empty() && b.entries[0].paper_id == "x" &&
                    std::abs(b.entries[0].score - (1.0 / 61 + 1.0 / 63)) < 1e-12,
                "hand case 1/61 + 1/63");
    std::mt19937_64 rng(202);
    for (int i = 0; i < 100 && out.pass; ++i) {
        std::vector<std::string> pool;
        for (int p = 0; p < 80; ++p) pool.push_back(id_of("p", static_cast<std::size_t>(p)));
        std::vector<std::vector<std::string>> raw(2);
        for (auto& l : raw) {
            std::shuffle(pool.begin(), pool.end(), rng);
            l.assign(pool.begin(), pool.begin() + static_cast<long>(rng() % 51));
        }
        const std::size_t k = i % 2 ? 60 : 1 + rng() % 200;
        auto got = retrieval::rrf_fuse(std::vector<RankedList>{as_list(raw[0]), as_list(raw[1])}, k);
        auto want = oracle::rrf(raw, static_cast<double>(k));
        out.require(got.size() == want.size(), "fused size differs");
        for (std::size_t r = 0; out.pass && r < want.size(); ++r) {
            out.require(got.entries[r].paper_id == want[r].first, "fused order differs");
            out.require(std::abs(got.entries[r].score - want[r].second) <= 1e-9, "fused score differs");
        }
    }
    if (out.pass) out.detail = "hand cases + 100 random pairs";
    return out;
}

// 3 -------------------------------------------------------------------------
Outcome knn_exactness() {
    Outcome out;
    std::mt19937_64 rng(303);
    std::normal_distribution<double> g;
    for (int s = 0; s < 5 && out.pass; ++s) {
        testing::MiniCorpus c;
        const std::size_t n = 100 + rng() % 101;
        for (std::size_t i = 0; i < n; ++i) {
            c.papers.push_back({id_of("v", i), "t", "", 2020});
            std::vector<double> v(384);
            for (auto& x : v) x = g(rng);
            c.embeddings[id_of("v", i)] = v;
        }
        auto idx = vec::build_vector_index(testing::load_mini(c));
        std::vector<double> q(384);
        for (auto& x : q) x = g(rng);
        auto got = vec::knn_search(idx, q, n);
        auto want = oracle::full_sort_knn(c.embeddings, q);
        out.require(got.size() == want.size(), "knn size differs");
        for (std::size_t r = 0; out.pass && r < want.size(); ++r) {
            out.require(got.entries[r].paper_id == want[r].first, "knn order differs");
        }
        for (double scale : {1e-3, 7.5, 1e4}) {
            auto scaled = q;
            for (auto& x : scaled) x *= scale;
            auto r2 = vec::knn_search(idx, scaled, n);
            for (std::size_t r = 0; out.pass && r < got.size(); ++r) {
                out.require(r2.entries[r].paper_id == got.entries[r].paper_id &&
                                std::abs(r2.entries[r].score - got.entries[r].score) <= 1e-9,
                            "scale invariance broken");
            }
        }
    }
    if (out.pass) out.detail = "5 sets, d=384";
    return out;
}

// 4 -------------------------------------------------------------------------
Outcome nmf_recovery() {
    Outcome out;
    std::mt19937_64 rng(404);
    for (int i = 0; i < 10 && out.pass; ++i) {
        auto pool = testing::synthetic_terms(60, rng);
        std::vector<text::TokenList> docs(30 + rng() % 20);
        for (auto& d : docs)
            for (std::size_t t = 0, n = 5 + rng() % 20; t < n; ++t) d.push_back(pool[rng() % pool.size()]);
        auto x = topics::build_tfidf(docs, text::build_vocabulary(docs, 1, 1.0));
        topics::NmfOptions opt;
        opt.k = 2 + rng() % 5;
        opt.seed = rng();
        opt.tol = 0;
        opt.max_iter = 200;
        auto m = topics::nmf_factorize(x.weights, opt);
        for (std::size_t h = 1; h < m.objective_history.size(); ++h) {
            out.require(m.objective_history[h] <= m.objective_history[h - 1] * (1 + 1e-12),
                        "objective increased at iteration " + std::to_string(h));
        }
    }
    Eigen::VectorXd u(8), v(6);
    u << 1, 2, 0.5, 3, 1, 4, 2, 0.25;
    v << 3, 1, 2, 0.5, 1, 2;
    topics::NmfOptions opt;
    opt.k = 1;
    opt.max_iter = 400;
    opt.tol = 0;
    auto rank1 = topics::nmf_factorize(sparse(u * v.transpose()), opt);
    out.require(rank1.final_objective < 1e-8, "rank-1 objective " + sci(rank1.final_objective));

    // Pure and pairwise-mixed documents over three disjoint vocabularies.
    const auto docs = testing::three_topic_corpus(3).docs;
    auto x = topics::build_tfidf(docs, text::build_vocabulary(docs, 1, 1.0));
    std::vector<std::size_t> ks{2, 3, 4};
    auto sel = topics::select_k(x, docs, ks, 42);
    out.require(sel.best_k == 3, "select_k chose " + std::to_string(sel.best_k));
    if (out.pass) out.detail = "10 monotone runs, rank-1 objective " + sci(rank1.final_objective) + ", best_k 3";
    return out;
}

// 5 -------------------------------------------------------------------------
Outcome npmi_anchors() {
    Outcome out;
    std::vector<std::string> w{"alpha", "beta"};
    auto npmi = [&](std::vector<text::TokenList> docs) { return topics::compute_npmi(w, docs).mean; };
    out.require(std::abs(npmi({{"alpha", "beta"}, {"alpha", "beta"}, {"gamma"}, {"gamma"}}) - 1.0) <= 1e-9, "perfect pair");
    out.require(std::abs(npmi({{"alpha", "beta"}, {"alpha"}, {"beta"}, {"gamma"}})) <= 1e-9, "independent pair");
    out.require(npmi({{"alpha"}, {"beta"}}) == -1.0, "zero co-occurrence");
    std::mt19937_64 rng(505);
    auto pool = testing::synthetic_terms(15, rng);
    for (int i = 0; i < 50 && out.pass; ++i) {
        std::vector<text::TokenList> docs(10 + rng() % 30);
        for (auto& d : docs)
            for (std::size_t t = 0, n = 1 + rng() % 6; t < n; ++t) d.push_back(pool[rng() % pool.size()]);
        std::vector<std::string> words(pool.begin(), pool.begin() + 8);
        auto r = topics::compute_npmi(words, docs);
        for (const auto& p : r.pairs) out.require(p.value >= -1.0 && p.value <= 1.0, "value outside [-1, 1]");
        out.require(std::abs(r.mean - oracle::mean_npmi(words, docs)) <= 1e-9, "mean differs from reference");
    }
    if (out.pass) out.detail = "anchors + 50 random bound checks";
    return out;
}

// 6 -------------------------------------------------------------------------
Outcome ctfidf_anchor() {
    Outcome out;
    std::vector<text::TokenList> docs{{"alpha", "alpha", "beta"}, {"beta", "gamma"}};
    auto scores = topics::ctfidf_scores(std::vector<int>{0, 1}, docs, 2);
    double alpha = -1;
    for (const auto& [t, s] : scores.at(0).second) {
        if (t == "alpha") alpha = s;
    }
    out.require(std::abs(alpha - 0.4621) <= 1e-4, "anchor " + std::to_string(alpha));
    std::mt19937_64 rng(606);
    auto pool = testing::synthetic_terms(20, rng);
    for (int i = 0; i < 100 && out.pass; ++i) {
        std::vector<text::TokenList> d(5 + rng() % 20);
        std::vector<int> labels;
        for (auto& doc : d) {
            doc.push_back("ubiquitous");
            for (std::size_t t = 0, n = rng() % 6; t < n; ++t) doc.push_back(pool[rng() % pool.size()]);
            labels.push_back(static_cast<int>(rng() % 4) - 1);
        }
        for (const auto& [label, s] : topics::ctfidf_scores(labels, d, d.size())) {
            for (const auto& [t, v] : s) {
                if (t == "ubiquitous") out.require(v == 0.0, "ubiquitous term scored non-zero");
            }
        }
    }
    if (out.pass) out.detail = "(2/3) ln 2 = " + std::to_string(alpha);
    return out;
}

// 7 -------------------------------------------------------------------------
Outcome graph_suite() {
    Outcome out;
    for (const char* name : {"all", "prefix50"}) {
        const auto& s = testing::graph_scenario(name);
        auto g = testing::build_scenario_graph(s);
        auto diffs = testing::graph_mismatches(g, s);
        out.require(diffs.empty(), std::string(name) + ": " + (diffs.empty() ? "" : diffs.front()));

        std::set<std::string> retrieved;
        for (const auto& p : s.at("papers")) retrieved.insert(p.get<std::string>());
        std::map<std::string, std::size_t> indegree;
        for (const auto& e : g.edges()) {
            auto [from, to] = graph::signature(e.label);
            out.require(e.from.kind == from && e.to.kind == to, "edge signature violated");
            if (e.label == graph::EdgeLabel::cites) {
                out.require(retrieved.contains(e.from.key) && retrieved.contains(e.to.key), "citation leaves the set");
                ++indegree[e.to.key];
            }
        }
        // brute-force traversal for every paper and entity
        for (const auto& n : g.nodes()) {
            if (n.ref.kind == graph::NodeKind::paper) {
                out.require(graph::paper_impact(g, n.ref) == indegree[n.ref.key], "paper impact != indegree");
            } else if (n.ref.kind == graph::NodeKind::author || n.ref.kind == graph::NodeKind::institution ||
                       n.ref.kind == graph::NodeKind::country) {
                std::set<std::string> papers;
                for (const auto& e : g.edges()) {
                    if (e.from == n.ref && e.to.kind == graph::NodeKind::paper) papers.insert(e.to.key);
                    if (e.to == n.ref && e.from.kind == graph::NodeKind::paper) papers.insert(e.from.key);
                }
                std::size_t sum = 0;
                for (const auto& p : papers) sum += indegree[p];
                out.require(graph::entity_impact(g, n.ref) == sum, "entity impact != sum of paper impacts");
            }
        }
        // every intra-set citation of the raw data is present
        std::size_t expected_cites = 0;
        for (const auto& [from, to] : testing::raw_fixture().citations) {
            expected_cites += from != to && retrieved.contains(from) && retrieved.contains(to);
        }
        std::size_t cites = 0;
        for (const auto& [_, c] : indegree) cites += c;
        out.require(cites == expected_cites, "citation closure incomplete");
        const auto doc = graph::export_graph(g);
        out.require(graph::import_graph(doc) == g && graph::export_graph(graph::import_graph(doc)) == doc,
                    "export/import round-trip");
    }
    if (out.pass) {
        const auto& s = testing::graph_scenario("all");
        std::size_t nodes = 0, edges = 0;
        for (const auto& [_, c] : s.at("node_counts").items()) nodes += c.get<std::size_t>();
        for (const auto& [_, c] : s.at("edge_counts").items()) edges += c.get<std::size_t>();
        out.detail = "full fixture " + std::to_string(nodes) + " nodes / " + std::to_string(edges) + " edges";
    }
    return out;
}

// 8 -------------------------------------------------------------------------
int run(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::read_file(e.path());
    }
    return out;
}

Outcome golden_run(const std::string& cli) {
    Outcome out;
    const auto t0 = Clock::now();
    testing::TempDir a, b;
    std::map<std::string, std::string> artifacts[2];
    int i = 0;
    for (const auto* dir : {&a, &b}) {
        const std::string base = cli + " --work " + dir->path().string();
        out.require(run(base + " ingest --corpus " + testing::fixture_dir().string()) == 0, "ingest failed");
        out.require(run(base + " index") == 0, "index failed");
        out.require(run(base + " explore --query \"machine translation\" --limit 100") == 0, "explore failed");
        if (out.pass) artifacts[i++] = tree_contents(dir->path() / "explorations");
    }
    const double secs = seconds_since(t0);
    if (out.pass) {
        out.require(artifacts[0].size() == 4, "expected 4 artifacts, got " + std::to_string(artifacts[0].size()));
        out.require(artifacts[0] == artifacts[1], "artifacts differ between runs");
        auto result = nlohmann::json::parse(artifacts[0].begin()->second);
        for (const auto& [name, body] : artifacts[0]) {
            if (name.ends_with("result.json")) result = nlohmann::json::parse(body);
        }
        out.require(result["results"].size() == 100, "expected 100 results");
        out.require(result["semantic_degraded"] == false, "golden run is degraded");
    }
    out.require(secs < 60.0, "took " + std::to_string(secs) + " s");
    if (out.pass) out.detail = "two fresh runs byte-identical in " + std::to_string(secs) + " s";
    return out;
}

// 9 -------------------------------------------------------------------------
struct Prepared {
    testing::TempDir dir;
    Prepared() {
        service::WorkPaths w{dir.path()};
        service::ingest(corpus::CorpusPaths::in_directory(testing::fixture_dir()), w, {},
                        testing::fixture().embedding_model());
        service::build_indexes(w);
    }
};

Outcome degradation(const Prepared& work) {
    Outcome out;
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    service::ServiceConfig cfg;
    cfg.work_dir = work.dir.path();
    cfg.embedder = vec::EmbedderBinding::external("http://127.0.0.1:" + std::to_string(port) + "/embed");
    cfg.embedder.timeout = std::chrono::milliseconds(500);
    try {
        service::Explorer ex(cfg);
        auto req = ex.default_request("machine translation");
        req.query.limit = 50;
        auto e = ex.explore(req);
        auto j = nlohmann::json::parse(e->result_json);
        out.require(e->semantic_degraded && j["semantic_degraded"] == true, "not flagged degraded");
        out.require(!j["results"].empty(), "no lexical results");
        auto s = ex.search(req);
        out.require(s.semantic_degraded, "search not flagged degraded");
        if (out.pass) out.detail = std::to_string(j["results"].size()) + " lexical-only results, flagged";
    } catch (const std::exception& e) {
        out.require(false, std::string("raised: ") + e.what());
    }
    return out;
}

// 10 ------------------------------------------------------------------------
Outcome filter_soundness() {
    Outcome out;
    const auto& snap = testing::fixture();
    const auto& raw = testing::raw_fixture();
    auto lex = lexical::build_lexical_index(snap, {});
    auto vecs = vec::build_vector_index(snap);
    auto emb = vec::make_embedder(vec::EmbedderBinding::projection(42));

    std::map<std::string, const testing::RawFixture::Paper*> papers;
    for (const auto& p : raw.papers) papers[p.id] = &p;
    std::map<std::string, std::vector<std::string>> authors_of;
    for (const auto& [a, p] : raw.authorship) authors_of[p].push_back(a);
    std::vector<std::string> names, insts;
    std::set<std::string> countries;
    for (const auto& [id, a] : raw.authors) {
        names.push_back(a.name);
        insts.insert(insts.end(), a.institutions.begin(), a.institutions.end());
        countries.insert(a.countries.begin(), a.countries.end());
    }
    std::vector<std::string> country_list(countries.begin(), countries.end());
    const char* queries[] = {"machine translation", "graph neural network", "protein folding",
                             "speech recognition", "reinforcement learning", "image segmentation", "learning"};

    auto lower_words = [](const std::string& s) {
        std::vector<std::string> w;
        std::string cur;
        for (char ch : s) {
            if (std::isalnum(static_cast<unsigned char>(ch))) {
                cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            } else if (!cur.empty()) {
                w.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) w.push_back(cur);
        return w;
    };

    std::mt19937_64 rng(1010);
    std::size_t checked = 0;
    for (int draw = 0; draw < 1000 && out.pass; ++draw) {
        retrieval::FilterSpec f;
        if (rng() % 2) {
            const int lo = 2014 + static_cast<int>(rng() % 12);
            f.year_range = {{lo, lo + static_cast<int>(rng() % 5)}};
        }
        if (rng() % 4 == 0) f.authors.push_back(names[rng() % names.size()]);
        if (rng() % 3 == 0) f.institutions.push_back(insts[rng() % insts.size()]);
        if (rng() % 3 == 0) f.countries.push_back(country_list[rng() % country_list.size()]);
        if (rng() % 5 == 0) f.countries.push_back("ZZ");
        retrieval::QueryRequest q;
        q.text = queries[rng() % std::size(queries)];
        q.limit = 1 + rng() % 200;
        q.filters = f;
        auto r = retrieval::retrieve(snap, lex, vecs, emb.get(), q);
        for (const auto& e : r.fused.entries) {
            const auto& p = *papers.at(e.paper_id);
            ++checked;
            if (f.year_range) {
                out.require(p.year && *p.year >= f.year_range->first && *p.year <= f.year_range->second,
                            e.paper_id + " violates the year filter");
            }
            std::set<std::vector<std::string>> paper_names;
            std::set<std::string> paper_insts, paper_countries;
            for (const auto& a : authors_of[e.paper_id]) {
                const auto& au = raw.authors.at(a);
                paper_names.insert(lower_words(au.name));
                paper_insts.insert(au.institutions.begin(), au.institutions.end());
                paper_countries.insert(au.countries.begin(), au.countries.end());
            }
            if (!f.authors.empty()) {
                out.require(std::any_of(f.authors.begin(), f.authors.end(),
                                        [&](const auto& n) { return paper_names.contains(lower_words(n)); }),
                            e.paper_id + " violates the author filter");
            }
            if (!f.institutions.empty()) {
                out.require(std::any_of(f.institutions.begin(), f.institutions.end(),
                                        [&](const auto& i) { return paper_insts.contains(i); }),
                            e.paper_id + " violates the institution filter");
            }
            if (!f.countries.empty()) {
                out.require(std::any_of(f.countries.begin(), f.countries.end(),
                                        [&](const auto& c) { return paper_countries.contains(c); }),
                            e.paper_id + " violates the country filter");
            }
        }
    }
    if (out.pass) out.detail = "1000 draws, " + std::to_string(checked) + " retrieved papers checked";
    return out;
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : ISLE_CLI_PATH;
    std::unique_ptr<Prepared> prepared;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"bm25 oracle equivalence", bm25_equivalence},
        {"rrf exactness", rrf_exactness},
        {"knn exactness", knn_exactness},
        {"nmf monotonicity and recovery", nmf_recovery},
        {"npmi bounds and anchors", npmi_anchors},
        {"c-tf-idf anchor", ctfidf_anchor},
        {"graph soundness", graph_suite},
        {"end-to-end golden run", [&] { return golden_run(cli); }},
        {"degradation contract",
         [&] {
             if (!prepared) prepared = std::make_unique<Prepared>();
             return degradation(*prepared);
         }},
        {"filter soundness", filter_soundness},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first;
        if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
        std::cout << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
