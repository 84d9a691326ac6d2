#include "support.hpp"

#include "isle/embedder.hpp"
#include "isle/error.hpp"
#include "isle/graph.hpp"
#include "isle/http_server.hpp"
#include "isle/retrieval.hpp"
#include "isle/service.hpp"
#include "isle/topics.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

using namespace isle;
using namespace isle::service;
using nlohmann::json;

namespace {

const std::string kModel = "projection-v1:d=384:seed=42";

/// One ingested and indexed copy of the fixture shared by the suite.
const testing::TempDir& prepared_work() {
    static const testing::TempDir dir;
    static const bool ready = [] {
        WorkPaths w{dir.path()};
        ingest(corpus::CorpusPaths::in_directory(testing::fixture_dir()), w, {}, kModel);
        build_indexes(w);
        return true;
    }();
    (void)ready;
    return dir;
}

ServiceConfig config_for(const std::filesystem::path& work) {
    ServiceConfig cfg;
    cfg.work_dir = work;
    return cfg;
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected isle::Error");
    return Errc::io;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ISLE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture_cli(const std::string& args) {
    const std::string cmd = std::string(ISLE_CLI_PATH) + " " + args + " 2>/dev/null";
    std::string out;
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
        pclose(pipe);
    }
    return out;
}

struct ScopedEnv {
    std::string name;
    ScopedEnv(std::string n, const char* v) : name(std::move(n)) { setenv(name.c_str(), v, 1); }
    ~ScopedEnv() { unsetenv(name.c_str()); }
};

} // namespace

TEST_SUITE("api-service") {

TEST_CASE("config file and environment overrides") {
    testing::TempDir dir;
    {
        std::ofstream f(dir / "isle.conf");
        f << "# settings\n[server]\nlisten_port = 9001\nwork_dir = \"/tmp/somewhere\"\n"
          << "rrf_k = 30  # fusion constant\ntopic_mode = nmf\n";
    }
    auto cfg = load_config(dir / "isle.conf");
    CHECK(cfg.listen_port == 9001);
    CHECK(cfg.work_dir == "/tmp/somewhere");
    CHECK(cfg.rrf_k == 30);
    CHECK(cfg.topic_mode == topics::TopicMode::nmf);
    {
        ScopedEnv env("ISLE_RRF_K", "12");
        CHECK(load_config(dir / "isle.conf").rrf_k == 12);
    }
    CHECK(load_config(std::nullopt).rrf_k == 60);
    {
        std::ofstream f(dir / "bad.conf");
        f << "no equals sign\n";
    }
    CHECK(code_of([&] { load_config(dir / "bad.conf"); }) == Errc::parse);
    ServiceConfig c;
    CHECK(code_of([&] { c.set("colour", "blue"); }) == Errc::invalid_argument);
    CHECK(code_of([&] { c.set("rrf_k", "many"); }) == Errc::invalid_argument);
    c.set("rrf_k", "0");
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("query id depends on every request field") {
    ExploreRequest a;
    a.query.text = "Machine  translation!";
    ExploreRequest b = a;
    b.query.text = "machine translation";
    CHECK(query_id(a, 1) == query_id(b, 1));
    CHECK(query_id(a, 1).size() == 64);
    CHECK(query_id(a, 1) != query_id(a, 2));
    b.query.limit = 10;
    CHECK(query_id(a, 1) != query_id(b, 1));
    b = a;
    b.topic_mode = topics::TopicMode::nmf;
    CHECK(query_id(a, 1) != query_id(b, 1));
    b = a;
    b.query.filters.countries = {"de"};
    ExploreRequest c = a;
    c.query.filters.countries = {"DE"};
    CHECK(query_id(b, 1) == query_id(c, 1));
    CHECK(query_id(a, 1) != query_id(b, 1));
}

TEST_CASE("index build is skipped when nothing changed") {
    testing::TempDir dir;
    WorkPaths w{dir.path()};
    CHECK(code_of([&] { build_indexes(w); }) == Errc::not_found);
    ingest(corpus::CorpusPaths::in_directory(testing::fixture_dir()), w, {}, kModel);
    auto first = build_indexes(w);
    CHECK(first.rebuilt);
    CHECK(first.generation == 1);
    auto second = build_indexes(w);
    CHECK_FALSE(second.rebuilt);
    CHECK(second.generation == 1);
    CHECK(current_generation(w) == 1);
    CHECK(std::filesystem::exists(w.generation(1) / "manifest.json"));
    CHECK(std::filesystem::exists(w.corpus() / "manifest"));
}

TEST_CASE("explorer needs an indexed work directory") {
    testing::TempDir dir;
    CHECK(code_of([&] { Explorer e(config_for(dir.path())); }) == Errc::not_found);
}

TEST_CASE("repeated explorations come from the cache") {
    Explorer ex(config_for(prepared_work().path()));
    auto req = ex.default_request("machine translation");
    req.query.limit = 60;
    bool cached = true;
    auto first = ex.explore(req, &cached);
    CHECK_FALSE(cached);
    auto second = ex.explore(req, &cached);
    CHECK(cached);
    CHECK(first->result_json == second->result_json);
    CHECK(first->graph_json == second->graph_json);

    auto j = json::parse(first->result_json);
    CHECK(j["query_id"] == first->query_id);
    CHECK(j["results"].size() == 60);
    CHECK(j["semantic_degraded"] == false);
    CHECK(j["results"][0]["rank"] == 1);
    CHECK(ex.artifact(first->query_id, "graph") == first->graph_json);
    CHECK(ex.artifact(first->query_id, "analytics") == first->analytics_json);
    CHECK_FALSE(ex.artifact(first->query_id, "secrets").has_value());
    CHECK_FALSE(ex.artifact(std::string(64, 'f'), "graph").has_value());

    // A second explorer reuses the persisted artifacts.
    Explorer other(config_for(prepared_work().path()));
    auto third = other.explore(req, &cached);
    CHECK(cached);
    CHECK(third->result_json == first->result_json);
}

TEST_CASE("exploration equals the composed stages") {
    const auto& dir = prepared_work();
    Explorer ex(config_for(dir.path()));
    auto req = ex.default_request("machine translation");
    req.query.limit = 100;
    auto e = ex.explore(req);

    WorkPaths w{dir.path()};
    auto snap = corpus::load_snapshot(w.corpus());
    auto lex = lexical::InvertedIndex::load(w.generation(ex.generation()) / "lexical");
    auto vec = vec::VectorIndex::load(w.generation(ex.generation()) / "vector");
    auto embedder = vec::make_embedder(ServiceConfig{}.embedder, {});
    auto retrieved = retrieval::retrieve(snap, lex, vec, embedder.get(), req.query);
    std::vector<topics::TopicDocument> docs;
    for (const auto& entry : retrieved.fused.entries) {
        const auto* p = corpus::get_paper(snap, entry.paper_id);
        docs.push_back({entry.paper_id, p->title + " " + p->abstract, snap.embeddings().contains(entry.paper_id)
                                                                         ? std::optional(snap.embeddings().at(entry.paper_id))
                                                                         : std::nullopt});
    }
    auto stage = topics::run_topic_stage(docs, {});
    auto kg = graph::build_graph(retrieved.fused, stage.assignments, stage.summaries, snap,
                                 {e->query_id, snap.content_hash(), ex.generation()});

    auto j = json::parse(e->result_json);
    REQUIRE(j["results"].size() == retrieved.fused.size());
    CHECK(retrieved.fused.size() == 100);
    for (std::size_t i = 0; i < retrieved.fused.size(); ++i) {
        CHECK(j["results"][i]["paper_id"] == retrieved.fused.entries[i].paper_id);
        CHECK(j["results"][i]["topic_id"] == stage.assignments[i].topic_id);
    }
    CHECK(j["topics"]["summaries"].size() == stage.summaries.size());
    CHECK(j["graph"]["nodes"] == kg.nodes().size());
    CHECK(j["graph"]["edges"] == kg.edges().size());
    CHECK(e->graph_json == graph::export_graph(kg));
    CHECK(e->analytics_json == graph::analytics_to_json(graph::compute_analytics(kg)));
}

TEST_CASE("concurrent identical requests share one run") {
    Explorer ex(config_for(prepared_work().path()));
    auto req = ex.default_request("protein structure prediction");
    req.query.limit = 40;
    std::vector<std::shared_ptr<const Exploration>> got(4);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < got.size(); ++i) {
        threads.emplace_back([&, i] { got[i] = ex.explore(req); });
    }
    for (auto& t : threads) t.join();
    for (const auto& g : got) CHECK(g->result_json == got[0]->result_json);
}

TEST_CASE("empty query gives empty results and topics") {
    Explorer ex(config_for(prepared_work().path()));
    auto e = ex.explore(ex.default_request("?!"));
    auto j = json::parse(e->result_json);
    CHECK(j["results"].empty());
    CHECK(j["topics"]["path"].is_null());
    CHECK(j["topics"]["summaries"].empty());
    CHECK(j["graph"]["nodes"] == 0);
}

TEST_CASE("paper lookup") {
    Explorer ex(config_for(prepared_work().path()));
    auto p = ex.paper_json("P0001", std::nullopt);
    REQUIRE(p.has_value());
    auto j = json::parse(*p);
    CHECK(j["paper_id"] == "P0001");
    CHECK(j["impact"].is_null());
    CHECK_FALSE(ex.paper_json("P9999", std::nullopt).has_value());
    CHECK(code_of([&] { ex.paper_json("P0001", std::string(64, 'a')); }) == Errc::not_found);
}

TEST_CASE("request body parsing") {
    ServiceConfig d;
    auto r = parse_explore_request(
        R"({"query":"graphs","limit":25,"topic_mode":"nmf","filters":{"year_from":2019,"year_to":2021,"countries":["us"]}})", d);
    CHECK(r.query.text == "graphs");
    CHECK(r.query.limit == 25);
    CHECK(r.topic_mode == topics::TopicMode::nmf);
    CHECK(r.query.filters.year_range == std::pair{2019, 2021});
    CHECK(parse_explore_request(R"({"query":"x"})", d).query.limit == d.default_limit);
    CHECK(code_of([&] { parse_explore_request("{", d); }) == Errc::parse);
    CHECK(code_of([&] { parse_explore_request(R"({"limit":3})", d); }) == Errc::invalid_argument);
    CHECK(code_of([&] { parse_explore_request(R"({"query":"x","limit":0})", d); }) == Errc::invalid_argument);
    CHECK(code_of([&] { parse_explore_request(R"({"query":"x","topic_mode":"lda"})", d); }) == Errc::invalid_argument);
}

TEST_CASE("http endpoints") {
    Explorer ex(config_for(prepared_work().path()));
    HttpServer server(ex);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.run(); });
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body) == json{{"status", "ok"}, {"papers", 200}});

    auto bad = client.Post("/api/explore", "{oops", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).contains("error"));

    auto explore = client.Post("/api/explore", R"({"query":"speech recognition","limit":30})", "application/json");
    REQUIRE(explore);
    CHECK(explore->status == 200);
    CHECK(explore->get_header_value("X-Isle-Cache") == "miss");
    auto body = json::parse(explore->body);
    const std::string id = body["query_id"];
    auto again = client.Post("/api/explore", R"({"query":"speech recognition","limit":30})", "application/json");
    CHECK(again->get_header_value("X-Isle-Cache") == "hit");
    CHECK(again->body == explore->body);

    auto g = client.Get("/api/graph/" + id);
    REQUIRE(g);
    CHECK(g->status == 200);
    CHECK(json::parse(g->body)["counts"]["nodes"] == body["graph"]["nodes"]);
    auto a = client.Get("/api/analytics/" + id);
    CHECK(a->status == 200);
    CHECK(client.Get("/api/graph/" + std::string(64, '0'))->status == 404);
    CHECK(client.Get("/api/graph/not-an-id")->status == 404);

    const std::string top = body["results"][0]["paper_id"];
    auto paper = client.Get("/api/paper/" + top + "?query_id=" + id);
    REQUIRE(paper);
    CHECK(paper->status == 200);
    CHECK(json::parse(paper->body)["impact"].is_number());
    CHECK(client.Get("/api/paper/P9999")->status == 404);

    auto search = client.Post("/api/search", R"({"query":"speech recognition","limit":5})", "application/json");
    REQUIRE(search);
    CHECK(search->status == 200);
    CHECK(json::parse(search->body)["results"].size() == 5);

    server.stop();
    t.join();
    CHECK_FALSE(server.running());
}

TEST_CASE("cli exit codes") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("search") == 1);
    testing::TempDir dir;
    CHECK(run_cli("--work " + dir.path().string() + " search -q graphs") == 2);
    CHECK(run_cli("--work " + dir.path().string() + " ingest --corpus " + (dir / "missing").string()) == 2);
    CHECK(run_cli("--work " + dir.path().string() + " ingest --corpus " + testing::fixture_dir().string()) == 0);
    CHECK(run_cli("--work " + dir.path().string() + " index") == 0);
    CHECK(run_cli("--work " + dir.path().string() + " search -q graphs -n 5 --json") == 0);
    CHECK(run_cli("--work " + dir.path().string() + " search -q graphs -n 0") == 1);
    CHECK(capture_cli("--work " + dir.path().string() + " index").starts_with("up to date"));

    const auto raw = testing::raw_fixture();
    auto stats = json::parse(capture_cli("--work " + dir.path().string() + " stats --json"));
    CHECK(stats["paper_count"] == raw.papers.size());
    CHECK(stats["author_count"] == raw.authors.size());
    CHECK(stats["citation_count"] == raw.citations.size());

    auto ex = json::parse(capture_cli("--work " + dir.path().string() + " explore -q \"machine translation\" -n 100 --json"));
    for (const char* key : {"results", "topics", "graph", "analytics"}) CHECK(ex.contains(key));
    CHECK(ex["results"].size() == 100);
}

}
