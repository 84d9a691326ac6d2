#include "isle/error.hpp"
#include "isle/service.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

namespace isle::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exclusive advisory lock held while an index build runs.
class BuildLock {
public:
    explicit BuildLock(const fs::path& file) {
        fd_ = ::open(file.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            throw Error(Errc::io, "cannot lock " + file.string());
        }
    }
    ~BuildLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    BuildLock(const BuildLock&) = delete;
    BuildLock& operator=(const BuildLock&) = delete;

private:
    int fd_ = -1;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) throw Error(Errc::io, "cannot write " + p.string());
}

json index_manifest(std::size_t generation, const std::string& snapshot_hash,
                    const text::AnalyzerConfig& analyzer, const lexical::Bm25Params& params,
                    const std::string& model) {
    return {{"format", "isle-generation-v1"},
            {"generation", generation},
            {"snapshot_hash", snapshot_hash},
            {"analyzer", analyzer.fingerprint()},
            {"bm25", {{"k1", params.k1}, {"b", params.b}}},
            {"embedding_model", model}};
}

} // namespace

corpus::IngestReport ingest(const corpus::CorpusPaths& input, const WorkPaths& work,
                            const corpus::ValidationPolicy& policy,
                            const std::string& embedding_model) {
    auto snapshot = corpus::load_corpus(input, policy, embedding_model);
    fs::create_directories(work.root);
    const auto staging = work.root / "corpus.tmp";
    fs::remove_all(staging);
    corpus::persist_snapshot(snapshot, staging);
    fs::remove_all(work.corpus());
    fs::rename(staging, work.corpus());
    return snapshot.report();
}

std::optional<std::size_t> current_generation(const WorkPaths& work) {
    const auto file = work.index() / "CURRENT";
    if (!fs::exists(file)) return std::nullopt;
    std::istringstream in(slurp(file));
    std::size_t n = 0;
    if (!(in >> n)) throw Error(Errc::parse, "corrupt " + file.string());
    return n;
}

IndexOutcome build_indexes(const WorkPaths& work, const text::AnalyzerConfig& analyzer,
                           const lexical::Bm25Params& params) {
    if (!fs::exists(work.corpus() / "manifest")) {
        throw Error(Errc::not_found, "no ingested corpus in " + work.root.string() +
                                         "; run `isle ingest` first");
    }
    fs::create_directories(work.index());
    BuildLock lock(work.index() / ".lock");

    const auto hash = corpus::read_snapshot_hash(work.corpus());
    const auto current = current_generation(work);
    if (current) {
        const auto manifest_path = work.generation(*current) / "manifest.json";
        if (fs::exists(manifest_path)) {
            auto manifest = json::parse(slurp(manifest_path));
            auto model = manifest.value("embedding_model", std::string{});
            if (manifest == index_manifest(*current, hash, analyzer, params, model)) {
                return {*current, false};
            }
        }
    }

    auto snapshot = corpus::load_snapshot(work.corpus());
    const std::size_t next = current.value_or(0) + 1;
    const auto staging = work.index() / ("gen-" + std::to_string(next) + ".tmp");
    fs::remove_all(staging);
    fs::create_directories(staging);
    lexical::build_lexical_index(snapshot, analyzer, params).save(staging / "lexical");
    vec::build_vector_index(snapshot).save(staging / "vector");
    write_file(staging / "manifest.json",
               index_manifest(next, hash, analyzer, params, snapshot.embedding_model()).dump(1) +
                   "\n");
    fs::remove_all(work.generation(next));
    fs::rename(staging, work.generation(next));

    const auto tmp = work.index() / "CURRENT.tmp";
    write_file(tmp, std::to_string(next) + "\n");
    fs::rename(tmp, work.index() / "CURRENT");
    return {next, true};
}

} // namespace isle::service
