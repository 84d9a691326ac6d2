#include "isle/error.hpp"
#include "isle/http_server.hpp"
#include "isle/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace isle;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct FilterFlags {
    std::optional<int> year_from, year_to;
    std::vector<std::string> countries, authors, institutions;

    void attach(CLI::App* cmd) {
        cmd->add_option("--year-from", year_from, "Earliest publication year");
        cmd->add_option("--year-to", year_to, "Latest publication year");
        cmd->add_option("--country", countries, "ISO country code (repeatable)");
        cmd->add_option("--author", authors, "Author name (repeatable)");
        cmd->add_option("--institution", institutions, "Institution id (repeatable)");
    }

    retrieval::FilterSpec spec() const {
        retrieval::FilterSpec f;
        if (year_from || year_to) {
            f.year_range = {year_from.value_or(corpus::kMinYear), year_to.value_or(corpus::kMaxYear)};
        }
        f.countries = countries;
        f.authors = authors;
        f.institutions = institutions;
        return f;
    }
};

std::string clip(std::string s, std::size_t n) {
    if (s.size() > n) s = s.substr(0, n - 3) + "...";
    return s;
}

void print_results(const ordered_json& results, std::size_t max_rows) {
    std::printf("%5s  %-10s  %-6s  %-9s  %s\n", "rank", "score", "year", "paper", "title");
    std::size_t shown = 0;
    for (const auto& r : results) {
        if (shown++ == max_rows) {
            std::printf("  ... %zu more\n", results.size() - max_rows);
            break;
        }
        std::string year = r["year"].is_null() ? "-" : std::to_string(r["year"].get<int>());
        std::printf("%5zu  %-10.6f  %-6s  %-9s  %s\n", r["rank"].get<std::size_t>(),
                    r["score"].get<double>(), year.c_str(), r["paper_id"].get<std::string>().c_str(),
                    clip(r["title"].get<std::string>(), 70).c_str());
    }
}

std::atomic<service::HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"isle: query-conditioned exploration of a scholarly corpus"};
    app.require_subcommand(1);
    std::optional<fs::path> config_file;
    std::optional<fs::path> work_dir;
    app.add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    app.add_option("--work", work_dir, "Work directory (overrides work_dir)");

    auto* ingest = app.add_subcommand("ingest", "Validate corpus files and persist a snapshot");
    std::optional<fs::path> corpus_dir;
    bool strict = false, dangling_strict = false;
    std::optional<std::string> embedding_model;
    ingest->add_option("--corpus", corpus_dir, "Directory with papers/authors/... .jsonl files");
    ingest->add_flag("--strict", strict, "Reject duplicates, bad years and bad country codes");
    ingest->add_flag("--dangling-strict", dangling_strict, "Reject references to unknown ids");
    ingest->add_option("--embedding-model", embedding_model, "Model id of supplied embeddings");

    auto* index = app.add_subcommand("index", "Build lexical and vector indexes");

    std::string query;
    std::optional<std::size_t> limit;
    bool as_json = false;
    FilterFlags filters;
    auto* search = app.add_subcommand("search", "Hybrid retrieval only");
    search->add_option("--query,-q", query, "Query text")->required();
    search->add_option("--limit,-n", limit, "Maximum results");
    search->add_flag("--json", as_json, "Machine-readable output");
    filters.attach(search);

    auto* explore = app.add_subcommand("explore", "Retrieval, topics, graph and analytics");
    std::optional<std::string> topic_mode;
    explore->add_option("--query,-q", query, "Query text")->required();
    explore->add_option("--limit,-n", limit, "Maximum results");
    explore->add_option("--topic-mode", topic_mode, "auto, nmf or cluster")
        ->check(CLI::IsMember({"auto", "nmf", "cluster"}));
    explore->add_flag("--json", as_json, "Machine-readable output");
    filters.attach(explore);

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    std::optional<std::string> host;
    std::optional<int> port;
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--port", port, "Listen port");

    auto* stats = app.add_subcommand("stats", "Corpus statistics");
    stats->add_option("--corpus", corpus_dir, "Raw corpus directory instead of the work directory");
    stats->add_flag("--json", as_json, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        auto cfg = service::load_config(config_file);
        if (work_dir) cfg.work_dir = *work_dir;
        if (host) cfg.listen_host = *host;
        if (port) cfg.listen_port = *port;
        cfg.validate();
        const service::WorkPaths work{cfg.work_dir};

        if (*ingest) {
            auto dir = corpus_dir ? *corpus_dir : cfg.corpus_dir;
            if (dir.empty()) {
                std::cerr << "ingest: --corpus or corpus_dir is required\n";
                return kUsageError;
            }
            corpus::ValidationPolicy policy;
            if (strict) policy.mode = corpus::Strictness::strict;
            if (dangling_strict) policy.dangling = corpus::DanglingPolicy::strict;
            auto report = service::ingest(corpus::CorpusPaths::in_directory(dir), work, policy,
                                          embedding_model.value_or(cfg.embedder.model_id()));
            auto snap_stats = corpus::stats_to_json(corpus::load_snapshot(work.corpus()).stats());
            std::cout << "ingested " << dir.string() << " into " << work.corpus().string() << "\n"
                      << snap_stats << "\n"
                      << "malformed=" << report.malformed_total()
                      << " duplicates=" << report.duplicate_ids << " dangling=" << report.dangling
                      << " self_citations=" << report.self_citations
                      << " unknown_years=" << report.unknown_years
                      << " missing_embeddings=" << report.missing_embeddings << "\n";
            return 0;
        }
        if (*index) {
            auto outcome = service::build_indexes(work);
            std::cout << (outcome.rebuilt ? "built generation " : "up to date: generation ")
                      << outcome.generation << "\n";
            return 0;
        }
        if (*stats) {
            corpus::CorpusStats s;
            if (corpus_dir) {
                s = corpus::load_corpus(corpus::CorpusPaths::in_directory(*corpus_dir)).stats();
            } else {
                s = corpus::load_snapshot(work.corpus()).stats();
            }
            if (as_json) {
                std::cout << corpus::stats_to_json(s) << "\n";
            } else {
                std::printf("papers        %zu\nauthors       %zu\ninstitutions  %zu\n"
                            "countries     %zu\ncitations     %zu\navg citations %.2f\n",
                            s.paper_count, s.author_count, s.institution_count, s.country_count,
                            s.citation_count, s.avg_citations_per_paper);
            }
            return 0;
        }

        service::Explorer explorer(cfg);
        if (*serve) {
            service::HttpServer server(explorer);
            const int bound = server.bind(cfg.listen_host, cfg.listen_port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on http://" << cfg.listen_host << ":" << bound << "\n";
            server.run();
            g_server = nullptr;
            return 0;
        }

        auto request = explorer.default_request(query);
        if (limit) request.query.limit = *limit;
        request.query.filters = filters.spec();
        if (topic_mode) request.topic_mode = *topics::parse_topic_mode(*topic_mode);

        if (*search) {
            auto out = explorer.search(request);
            if (as_json) {
                std::cout << out.json;
            } else {
                auto j = ordered_json::parse(out.json);
                if (out.semantic_degraded) std::cout << "warning: lexical-only results\n";
                print_results(j["results"], 50);
            }
            return 0;
        }

        auto e = explorer.explore(request);
        if (as_json) {
            std::cout << e->result_json;
            return 0;
        }
        auto j = ordered_json::parse(e->result_json);
        if (e->semantic_degraded) {
            std::cout << "warning: lexical-only results ("
                      << j["degradation_reason"].get<std::string>() << ")\n";
        }
        print_results(j["results"], 20);
        const auto& t = j["topics"];
        std::cout << "\ntopics (" << (t["path"].is_null() ? "none" : t["path"].get<std::string>())
                  << ")\n";
        for (const auto& s : t["summaries"]) {
            std::string words;
            for (const auto& kw : s["keywords"]) {
                words += (words.empty() ? "" : ", ") + kw["term"].get<std::string>();
            }
            std::printf("%4d  %4zu docs  %s\n", s["topic_id"].get<int>(),
                        s["document_count"].get<std::size_t>(), words.c_str());
        }
        std::cout << "\ngraph: " << j["graph"]["nodes"] << " nodes, " << j["graph"]["edges"]
                  << " edges\nartifacts: " << (work.explorations() / e->query_id).string() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return e.code() == Errc::invalid_argument ? kUsageError : kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
}
