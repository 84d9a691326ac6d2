#include "isle/corpus.hpp"

#include "isle/error.hpp"
#include "isle/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace isle::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

std::size_t IngestReport::malformed_total() const {
    std::size_t total = 0;
    for (const auto& [_, n] : malformed) total += n;
    return total;
}

CorpusPaths CorpusPaths::in_directory(const fs::path& dir) {
    CorpusPaths p{dir / "papers.jsonl", dir / "authors.jsonl", dir / "authorship.jsonl",
                  dir / "citations.jsonl", std::nullopt};
    if (fs::exists(dir / "embeddings.jsonl")) {
        p.embeddings = dir / "embeddings.jsonl";
    }
    return p;
}

namespace {

// Calls `fn` with each non-blank line's parsed object; counts lines that are
// not JSON objects or that `fn` rejects by returning false.
void for_each_record(const fs::path& path, std::string_view kind, IngestReport& report,
                     const std::function<bool(const json&)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io, "cannot read " + std::string(kind) + " file: " + path.string());
    }
    report.malformed[std::string(kind)] += 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
        bool ok = false;
        if (obj.is_object()) {
            try {
                ok = fn(obj);
            } catch (const json::exception&) {
                ok = false;
            }
        }
        if (!ok) ++report.malformed[std::string(kind)];
    }
}

std::optional<std::string> opt_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

bool year_in_range(long long y) { return y >= kMinYear && y <= kMaxYear; }

// "YYYY", "YYYY-MM", "YYYY-MM-DD..." -> year.
std::optional<int> year_of_date(const std::optional<std::string>& date) {
    if (!date || date->size() < 4) return std::nullopt;
    int y = 0;
    for (int i = 0; i < 4; ++i) {
        char c = (*date)[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') return std::nullopt;
        y = y * 10 + (c - '0');
    }
    if (date->size() > 4 && (*date)[4] != '-') return std::nullopt;
    return y;
}

// publication_date, then publication_year, then submitted_date.
std::optional<int> resolve_year(const json& obj, const std::optional<std::string>& submitted) {
    if (auto y = year_of_date(opt_string(obj, "publication_date")); y && year_in_range(*y)) {
        return *y;
    }
    if (auto it = obj.find("publication_year"); it != obj.end() && it->is_number_integer()) {
        auto y = it->get<long long>();
        if (year_in_range(y)) return static_cast<int>(y);
    }
    if (auto y = year_of_date(submitted); y && year_in_range(*y)) {
        return *y;
    }
    return std::nullopt;
}

bool valid_country_code(std::string_view code) {
    return code.size() == 2 && std::isupper(static_cast<unsigned char>(code[0])) &&
           std::isupper(static_cast<unsigned char>(code[1]));
}

json paper_json(const PaperRecord& p) {
    json j{{"paper_id", p.paper_id},
           {"title", p.title},
           {"abstract", p.abstract},
           {"publication_year", p.publication_year},
           {"subject", p.subject}};
    if (p.arxiv_id) j["arxiv_id"] = *p.arxiv_id;
    if (p.submitted_date) j["submitted_date"] = *p.submitted_date;
    if (p.doi) j["doi"] = *p.doi;
    return j;
}

json author_json(const AuthorRecord& a) {
    return json{{"author_id", a.author_id},
                {"name", a.name},
                {"institution_ids", a.institution_ids},
                {"country_codes", a.country_codes}};
}

struct CanonicalFiles {
    std::string papers, authors, authorship, citations, embeddings;
};

CanonicalFiles canonical_files(const CorpusSnapshot& s) {
    CanonicalFiles f;
    for (const auto& p : s.papers()) f.papers += paper_json(p).dump() + "\n";
    for (const auto& a : s.authors()) f.authors += author_json(a).dump() + "\n";
    for (const auto& a : s.authorship()) {
        f.authorship += json{{"author_id", a.author_id}, {"paper_id", a.paper_id}}.dump() + "\n";
    }
    for (const auto& c : s.citations()) {
        f.citations +=
            json{{"citing_paper_id", c.citing_paper_id}, {"cited_paper_id", c.cited_paper_id}}
                .dump() +
            "\n";
    }
    for (const auto& [id, vec] : s.embeddings()) {
        f.embeddings += json{{"paper_id", id}, {"vector", vec}}.dump() + "\n";
    }
    return f;
}

std::string hash_of(const CanonicalFiles& f, const std::string& model) {
    Sha256 h;
    for (const auto* part : {&f.papers, &f.authors, &f.authorship, &f.citations, &f.embeddings}) {
        h.update(std::to_string(part->size()));
        h.update(":");
        h.update(*part);
    }
    h.update("model:");
    h.update(model);
    return h.hex_digest();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

} // namespace

class SnapshotBuilder {
public:
    SnapshotBuilder(const ValidationPolicy& policy, std::string model) : policy_(policy) {
        s_.embedding_model_ = std::move(model);
    }

    CorpusSnapshot build(const CorpusPaths& paths) {
        read_papers(paths.papers);
        read_authors(paths.authors);
        read_authorship(paths.authorship);
        read_citations(paths.citations);
        if (paths.embeddings) read_embeddings(*paths.embeddings);
        s_.report_.missing_embeddings = s_.papers_.size() - s_.embeddings_.size();
        derive();
        s_.stats_ = compute_stats(s_);
        s_.content_hash_ = hash_of(canonical_files(s_), s_.embedding_model_);
        return std::move(s_);
    }

private:
    ValidationPolicy policy_;
    CorpusSnapshot s_;

    bool strict() const { return policy_.mode == Strictness::strict; }

    void on_duplicate(std::string_view what, std::string_view id) {
        if (strict()) {
            throw Error(Errc::duplicate_id,
                        "duplicate " + std::string(what) + " id: " + std::string(id));
        }
        ++s_.report_.duplicate_ids;
    }

    void on_dangling(std::string_view what) {
        if (policy_.dangling == DanglingPolicy::strict) {
            throw Error(Errc::dangling_reference, std::string(what));
        }
        ++s_.report_.dangling;
    }

    void read_papers(const fs::path& path) {
        std::set<std::string> seen;
        for_each_record(path, "papers", s_.report_, [&](const json& obj) {
            PaperRecord p;
            p.paper_id = obj.at("paper_id").get<std::string>();
            p.title = trim(obj.at("title").get<std::string>());
            if (p.paper_id.empty() || p.title.empty()) return false;
            p.abstract = obj.value("abstract", std::string{});
            p.arxiv_id = opt_string(obj, "arxiv_id");
            p.submitted_date = opt_string(obj, "submitted_date");
            p.doi = opt_string(obj, "doi");
            p.subject = obj.value("subject", std::string{});
            if (auto y = resolve_year(obj, p.submitted_date)) {
                p.publication_year = *y;
            } else if (strict()) {
                throw Error(Errc::invalid_record, "no usable publication year for " + p.paper_id);
            } else {
                p.publication_year = kUnknownYear;
                ++s_.report_.unknown_years;
            }
            if (!seen.insert(p.paper_id).second) {
                on_duplicate("paper", p.paper_id);
                return true;
            }
            s_.papers_.push_back(std::move(p));
            return true;
        });
        std::sort(s_.papers_.begin(), s_.papers_.end(),
                  [](const auto& a, const auto& b) { return a.paper_id < b.paper_id; });
        for (std::size_t i = 0; i < s_.papers_.size(); ++i) {
            s_.paper_index_.emplace(s_.papers_[i].paper_id, i);
        }
    }

    void read_authors(const fs::path& path) {
        std::set<std::string> seen;
        for_each_record(path, "authors", s_.report_, [&](const json& obj) {
            AuthorRecord a;
            a.author_id = obj.at("author_id").get<std::string>();
            if (a.author_id.empty()) return false;
            a.name = obj.value("name", std::string{});
            if (auto it = obj.find("institution_ids"); it != obj.end() && !it->is_null()) {
                a.institution_ids = it->get<std::vector<std::string>>();
            }
            if (auto it = obj.find("country_codes"); it != obj.end() && !it->is_null()) {
                for (auto code : it->get<std::vector<std::string>>()) {
                    if (valid_country_code(code)) {
                        a.country_codes.push_back(std::move(code));
                    } else if (strict()) {
                        throw Error(Errc::invalid_record,
                                    "invalid country code '" + code + "' on " + a.author_id);
                    } else {
                        ++s_.report_.invalid_country_codes;
                    }
                }
            }
            if (!seen.insert(a.author_id).second) {
                on_duplicate("author", a.author_id);
                return true;
            }
            s_.authors_.push_back(std::move(a));
            return true;
        });
        std::sort(s_.authors_.begin(), s_.authors_.end(),
                  [](const auto& a, const auto& b) { return a.author_id < b.author_id; });
        for (std::size_t i = 0; i < s_.authors_.size(); ++i) {
            s_.author_index_.emplace(s_.authors_[i].author_id, i);
        }
    }

    void read_authorship(const fs::path& path) {
        std::set<AuthorshipRecord> pairs;
        for_each_record(path, "authorship", s_.report_, [&](const json& obj) {
            AuthorshipRecord r{obj.at("author_id").get<std::string>(),
                               obj.at("paper_id").get<std::string>()};
            if (!s_.author_index_.contains(r.author_id) || !s_.paper_index_.contains(r.paper_id)) {
                on_dangling("authorship references unknown id: " + r.author_id + " -> " +
                            r.paper_id);
                return true;
            }
            if (!pairs.insert(std::move(r)).second) ++s_.report_.duplicate_authorship;
            return true;
        });
        s_.authorship_.assign(pairs.begin(), pairs.end());
    }

    void read_citations(const fs::path& path) {
        std::set<CitationRecord> pairs;
        for_each_record(path, "citations", s_.report_, [&](const json& obj) {
            CitationRecord c{obj.at("citing_paper_id").get<std::string>(),
                             obj.at("cited_paper_id").get<std::string>()};
            if (c.citing_paper_id == c.cited_paper_id) {
                ++s_.report_.self_citations;
                return true;
            }
            if (!s_.paper_index_.contains(c.citing_paper_id) ||
                !s_.paper_index_.contains(c.cited_paper_id)) {
                on_dangling("citation references unknown paper: " + c.citing_paper_id + " -> " +
                            c.cited_paper_id);
                return true;
            }
            if (!pairs.insert(std::move(c)).second) ++s_.report_.duplicate_citations;
            return true;
        });
        s_.citations_.assign(pairs.begin(), pairs.end());
    }

    void read_embeddings(const fs::path& path) {
        for_each_record(path, "embeddings", s_.report_, [&](const json& obj) {
            auto id = obj.at("paper_id").get<std::string>();
            auto vec = obj.at("vector").get<std::vector<double>>();
            if (vec.empty()) return false;
            if (!std::all_of(vec.begin(), vec.end(), [](double v) { return std::isfinite(v); })) {
                return false;
            }
            if (s_.embedding_dim_ == 0) {
                s_.embedding_dim_ = vec.size();
            } else if (vec.size() != s_.embedding_dim_) {
                throw Error(Errc::shape, "embedding dimension mismatch for " + id + ": " +
                                             std::to_string(vec.size()) + " vs " +
                                             std::to_string(s_.embedding_dim_));
            }
            if (!s_.paper_index_.contains(id)) {
                on_dangling("embedding for unknown paper: " + id);
                return true;
            }
            if (s_.embeddings_.contains(id)) {
                on_duplicate("embedding", id);
                return true;
            }
            s_.embeddings_.emplace(std::move(id), std::move(vec));
            return true;
        });
    }

    void derive() {
        const auto n = s_.papers_.size();
        s_.paper_authors_.assign(n, {});
        s_.paper_institutions_.assign(n, {});
        s_.paper_countries_.assign(n, {});
        s_.outgoing_.assign(n, {});
        std::vector<std::set<std::string>> inst(n), country(n);
        for (const auto& a : s_.authorship_) {
            auto p = s_.paper_index_.at(a.paper_id);
            s_.paper_authors_[p].push_back(a.author_id);
            const auto& author = s_.authors_[s_.author_index_.at(a.author_id)];
            inst[p].insert(author.institution_ids.begin(), author.institution_ids.end());
            country[p].insert(author.country_codes.begin(), author.country_codes.end());
        }
        for (std::size_t p = 0; p < n; ++p) {
            s_.paper_institutions_[p].assign(inst[p].begin(), inst[p].end());
            s_.paper_countries_[p].assign(country[p].begin(), country[p].end());
        }
        for (const auto& c : s_.citations_) {
            s_.outgoing_[s_.paper_index_.at(c.citing_paper_id)].push_back(
                s_.paper_index_.at(c.cited_paper_id));
        }
        for (auto& out : s_.outgoing_) std::sort(out.begin(), out.end());
    }
};

std::optional<std::size_t> CorpusSnapshot::ordinal_of(std::string_view paper_id) const {
    auto it = paper_index_.find(std::string(paper_id));
    if (it == paper_index_.end()) return std::nullopt;
    return it->second;
}

const AuthorRecord* CorpusSnapshot::find_author(std::string_view author_id) const {
    auto it = author_index_.find(std::string(author_id));
    return it == author_index_.end() ? nullptr : &authors_[it->second];
}

bool CorpusSnapshot::operator==(const CorpusSnapshot& o) const {
    return papers_ == o.papers_ && authors_ == o.authors_ && authorship_ == o.authorship_ &&
           citations_ == o.citations_ && embeddings_ == o.embeddings_ &&
           embedding_dim_ == o.embedding_dim_ && embedding_model_ == o.embedding_model_ &&
           stats_ == o.stats_;
}

CorpusSnapshot load_corpus(const CorpusPaths& paths, const ValidationPolicy& policy,
                           std::string embedding_model) {
    return SnapshotBuilder(policy, std::move(embedding_model)).build(paths);
}

CorpusStats compute_stats(const CorpusSnapshot& snapshot) {
    CorpusStats st;
    st.paper_count = snapshot.papers().size();
    st.author_count = snapshot.authors().size();
    st.citation_count = snapshot.citations().size();
    std::set<std::string_view> inst, countries;
    for (const auto& a : snapshot.authors()) {
        inst.insert(a.institution_ids.begin(), a.institution_ids.end());
        countries.insert(a.country_codes.begin(), a.country_codes.end());
    }
    st.institution_count = inst.size();
    st.country_count = countries.size();
    if (st.paper_count > 0) {
        st.avg_citations_per_paper =
            static_cast<double>(st.citation_count) / static_cast<double>(st.paper_count);
    }
    return st;
}

const PaperRecord* get_paper(const CorpusSnapshot& snapshot, std::string_view paper_id) {
    auto ord = snapshot.ordinal_of(paper_id);
    return ord ? &snapshot.papers()[*ord] : nullptr;
}

std::string stats_to_json(const CorpusStats& st) {
    json j{{"paper_count", st.paper_count},
           {"author_count", st.author_count},
           {"institution_count", st.institution_count},
           {"country_count", st.country_count},
           {"citation_count", st.citation_count},
           {"avg_citations_per_paper", std::round(st.avg_citations_per_paper * 100.0) / 100.0}};
    return j.dump();
}

void persist_snapshot(const CorpusSnapshot& snapshot, const fs::path& dir) {
    fs::create_directories(dir);
    auto files = canonical_files(snapshot);
    write_file(dir / "papers.jsonl", files.papers);
    write_file(dir / "authors.jsonl", files.authors);
    write_file(dir / "authorship.jsonl", files.authorship);
    write_file(dir / "citations.jsonl", files.citations);
    write_file(dir / "embeddings.jsonl", files.embeddings);
    json manifest{{"format", "isle-corpus-v1"},
                  {"content_hash", hash_of(files, snapshot.embedding_model())},
                  {"embedding_dimension", snapshot.embedding_dimension()},
                  {"embedding_model", snapshot.embedding_model()},
                  {"stats", json::parse(stats_to_json(snapshot.stats()))}};
    write_file(dir / "manifest", manifest.dump(2) + "\n");
}

namespace {

json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest");
    if (!in) throw Error(Errc::io, "missing corpus manifest in " + dir.string());
    json m = json::parse(in, nullptr, false);
    if (!m.is_object() || !m.contains("content_hash")) {
        throw Error(Errc::parse, "corrupt corpus manifest in " + dir.string());
    }
    return m;
}

} // namespace

std::string read_snapshot_hash(const fs::path& dir) {
    return read_manifest(dir).at("content_hash").get<std::string>();
}

CorpusSnapshot load_snapshot(const fs::path& dir) {
    json manifest = read_manifest(dir);
    auto paths = CorpusPaths::in_directory(dir);
    auto snap = load_corpus(paths, ValidationPolicy{Strictness::lenient, DanglingPolicy::strict},
                            manifest.value("embedding_model", std::string{}));
    if (snap.content_hash() != manifest.at("content_hash").get<std::string>()) {
        throw Error(Errc::consistency, "corpus content hash does not match manifest in " +
                                           dir.string());
    }
    return snap;
}

} // namespace isle::corpus
