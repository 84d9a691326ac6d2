#pragma once

#include "isle/service.hpp"

#include <memory>
#include <string>

namespace isle::service {

/// JSON API over an Explorer:
///   POST /api/explore, POST /api/search,
///   GET  /api/graph/<query_id>, /api/analytics/<query_id>,
///        /api/paper/<paper_id>[?query_id=...], /api/health
class HttpServer {
public:
    explicit HttpServer(Explorer& explorer);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    /// Throws Error(io) when the address cannot be bound.
    int bind(const std::string& host, int port);
    /// Serves until stop(); in-flight requests complete first.
    void run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace isle::service
