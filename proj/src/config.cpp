#include "isle/error.hpp"
#include "isle/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

namespace isle::service {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T number(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(Errc::invalid_argument, "setting " + std::string(key) + ": not a number: " +
                                                std::string(value));
    }
    return out;
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "corpus_dir",        "work_dir",         "embedder",      "embedder_endpoint",
        "embedder_seed",     "embedder_dimension", "embedder_timeout_ms", "embedder_model",
        "default_limit",     "rrf_k",            "topic_mode",    "listen_host",
        "listen_port",       "cache_size",       "threads",
    };
    return keys;
}

void ServiceConfig::validate() const {
    if (default_limit < 1 || rrf_k < 1 || cache_size < 1 || threads < 1) {
        throw Error(Errc::invalid_argument, "numeric settings must be positive");
    }
    if (listen_port < 1 || listen_port > 65535) {
        throw Error(Errc::invalid_argument, "listen_port must be in 1..65535");
    }
    embedder.validate();
}

void ServiceConfig::set(std::string_view key, std::string_view value) {
    if (key == "corpus_dir") {
        corpus_dir = std::string(value);
    } else if (key == "work_dir") {
        work_dir = std::string(value);
    } else if (key == "embedder") {
        if (value == "projection") {
            embedder.mode = vec::EmbedderMode::deterministic_projection;
            if (!embedder.seed) embedder.seed = 42;
        } else if (value == "external") {
            embedder.mode = vec::EmbedderMode::external_service;
        } else {
            throw Error(Errc::invalid_argument, "embedder must be projection or external");
        }
    } else if (key == "embedder_endpoint") {
        embedder.endpoint = std::string(value);
    } else if (key == "embedder_seed") {
        embedder.seed = number<std::uint64_t>(key, value);
    } else if (key == "embedder_dimension") {
        embedder.dimension = number<std::size_t>(key, value);
    } else if (key == "embedder_timeout_ms") {
        embedder.timeout = std::chrono::milliseconds(number<long>(key, value));
    } else if (key == "embedder_model") {
        embedder.expected_model = std::string(value);
    } else if (key == "default_limit") {
        default_limit = number<std::size_t>(key, value);
    } else if (key == "rrf_k") {
        rrf_k = number<std::size_t>(key, value);
    } else if (key == "topic_mode") {
        auto mode = topics::parse_topic_mode(value);
        if (!mode) throw Error(Errc::invalid_argument, "topic_mode must be auto, nmf or cluster");
        topic_mode = *mode;
    } else if (key == "listen_host") {
        listen_host = std::string(value);
    } else if (key == "listen_port") {
        listen_port = number<int>(key, value);
    } else if (key == "cache_size") {
        cache_size = number<std::size_t>(key, value);
    } else if (key == "threads") {
        threads = number<std::size_t>(key, value);
    } else {
        throw Error(Errc::invalid_argument, "unknown setting: " + std::string(key));
    }
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file) {
    ServiceConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(Errc::io, "cannot read config " + file->string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto text = trim(std::string_view(line).substr(0, line.find('#')));
            if (text.empty() || text.front() == '[') continue;
            auto eq = text.find('=');
            if (eq == std::string_view::npos) {
                throw Error(Errc::parse, file->string() + ":" + std::to_string(lineno) +
                                             ": expected key = value");
            }
            auto key = trim(text.substr(0, eq));
            auto value = trim(text.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
                value = value.substr(1, value.size() - 2);
            }
            cfg.set(key, value);
        }
    }
    for (const auto& key : config_keys()) {
        std::string env = "ISLE_" + key;
        std::transform(env.begin(), env.end(), env.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (const char* v = std::getenv(env.c_str())) cfg.set(key, v);
    }
    cfg.validate();
    return cfg;
}

} // namespace isle::service
