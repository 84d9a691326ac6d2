#include "isle/http_server.hpp"

#include "isle/error.hpp"

#include <httplib.h>
#include <json.hpp>

namespace isle::service {

namespace {

int status_for(Errc code) {
    switch (code) {
    case Errc::invalid_argument:
    case Errc::parse:
    case Errc::type_error:
    case Errc::invalid_dimension: return 400;
    case Errc::not_found: return 404;
    case Errc::consistency:
    case Errc::model_mismatch: return 409;
    case Errc::embedder_unavailable: return 503;
    default: return 500;
    }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view detail) {
    nlohmann::ordered_json body{{"error", code}, {"detail", detail}};
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, status_for(e.code()), errc_name(e.code()), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

} // namespace

struct HttpServer::Impl {
    Explorer& explorer;
    httplib::Server server;

    explicit Impl(Explorer& e) : explorer(e) {
        const auto threads = explorer.config().threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

        server.Post("/api/explore", guarded([this](const auto& req, auto& res) {
            auto request = parse_explore_request(req.body, explorer.config());
            bool cached = false;
            auto e = explorer.explore(request, &cached);
            res.set_header("X-Isle-Cache", cached ? "hit" : "miss");
            res.set_content(e->result_json, "application/json");
        }));
        server.Post("/api/search", guarded([this](const auto& req, auto& res) {
            auto request = parse_explore_request(req.body, explorer.config());
            res.set_content(explorer.search(request).json, "application/json");
        }));
        for (std::string name : {"graph", "analytics"}) {
            server.Get("/api/" + name + "/([^/]+)", guarded([this, name](const auto& req, auto& res) {
                auto doc = explorer.artifact(req.matches[1].str(), name);
                if (!doc) {
                    send_error(res, 404, "not_found", "unknown query id " + req.matches[1].str());
                    return;
                }
                res.set_content(*doc, "application/json");
            }));
        }
        server.Get("/api/paper/([^/]+)", guarded([this](const auto& req, auto& res) {
            std::optional<std::string> qid;
            if (req.has_param("query_id")) qid = req.get_param_value("query_id");
            auto doc = explorer.paper_json(req.matches[1].str(),
                                           qid ? std::optional<std::string_view>(*qid) : std::nullopt);
            if (!doc) {
                send_error(res, 404, "not_found", "unknown paper " + req.matches[1].str());
                return;
            }
            res.set_content(*doc, "application/json");
        }));
        server.Get("/api/health", guarded([this](const auto&, auto& res) {
            res.set_content(explorer.health_json(), "application/json");
        }));
    }
};

HttpServer::HttpServer(Explorer& explorer) : impl_(std::make_unique<Impl>(explorer)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) {
        throw Error(Errc::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

} // namespace isle::service
