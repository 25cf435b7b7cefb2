#include "kforge/problem_store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace kforge {

using json = nlohmann::json;

namespace {

struct ManifestEntry {
    Problem problem;
    std::vector<std::string> unsupported_backends;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::map<std::string, std::vector<std::string>> unsupported_operations;
};

Manifest read_manifest(const fs::path& root) {
    const auto path = root / "manifest.json";
    if (!fs::exists(path)) throw LoadError("missing manifest: " + path.string());

    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("manifest.json", e.what());
    }

    Manifest m;
    if (doc.contains("unsupported_operations")) {
        for (const auto& [backend, ops] : doc.at("unsupported_operations").items()) {
            m.unsupported_operations[backend] = ops.get<std::vector<std::string>>();
        }
    }

    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& item : doc.value("problems", json::array())) {
        const std::string label =
            item.is_object() && item.contains("id") && item["id"].is_string()
                ? item["id"].get<std::string>()
                : "problems[" + std::to_string(index) + "]";
        ++index;
        try {
            ManifestEntry e;
            auto& p = e.problem;
            p.id = item.at("id").get<std::string>();
            p.level = item.at("level").get<int>();
            p.name = item.value("name", p.id);
            p.source_path = root / item.at("source").get<std::string>();
            p.tags = item.value("tags", std::vector<std::string>{});
            e.unsupported_backends = item.value("unsupported_backends", std::vector<std::string>{});

            if (p.id.empty()) throw ParseError(label, "empty id");
            if (p.level < 1 || p.level > 3)
                throw ParseError(label, "level must be 1, 2 or 3 (got " + std::to_string(p.level) + ")");
            if (!seen.insert(p.id).second) throw ParseError(label, "duplicate problem id");
            if (!fs::exists(p.source_path))
                throw ParseError(label, "source file not found: " + p.source_path.string());
            p.reference_source = read_file(p.source_path);
            if (trim(p.reference_source).empty()) throw ParseError(label, "reference source is empty");
            for (const auto& b : e.unsupported_backends) {
                if (!parse_backend(b)) throw ParseError(label, "unknown backend '" + b + "'");
            }
            m.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ParseError(label, ex.what());
        }
    }
    return m;
}

bool is_excluded(const ManifestEntry& e, Backend backend, const Manifest& m) {
    const auto name = std::string(to_string(backend));
    for (const auto& b : e.unsupported_backends) {
        if (parse_backend(b) == backend) return true;
    }
    if (auto it = m.unsupported_operations.find(name); it != m.unsupported_operations.end()) {
        for (const auto& op : it->second) {
            if (e.problem.reference_source.find(op) != std::string::npos) return true;
        }
    }
    return false;
}

}  // namespace

const Problem* ProblemSet::find(std::string_view id) const {
    auto it = std::find_if(problems.begin(), problems.end(), [&](const Problem& p) { return p.id == id; });
    return it == problems.end() ? nullptr : &*it;
}

std::string ProblemSet::digest() const {
    std::string acc;
    for (const auto& p : problems) {
        acc += p.id;
        acc += '\0';
        acc += sha256_hex(p.reference_source);
        acc += '\n';
    }
    return sha256_hex(acc);
}

ProblemSet load_problem_set(const fs::path& root, Backend backend) {
    const auto manifest = read_manifest(root);
    ProblemSet set;
    set.backend = backend;
    set.manifest_size = manifest.entries.size();
    set.counts_by_level = {{1, 0}, {2, 0}, {3, 0}};

    const auto all_backends = {Backend::cuda, Backend::metal};
    for (const auto& e : manifest.entries) {
        if (is_excluded(e, backend, manifest)) {
            set.excluded.push_back(e.problem.id);
            continue;
        }
        Problem p = e.problem;
        for (auto b : all_backends) {
            if (!is_excluded(e, b, manifest)) p.backend_support.insert(b);
        }
        ++set.counts_by_level[p.level];
        set.problems.push_back(std::move(p));
    }
    return set;
}

std::vector<std::string> exclusions(const fs::path& root, Backend backend) {
    const auto manifest = read_manifest(root);
    std::vector<std::string> out;
    for (const auto& e : manifest.entries) {
        if (is_excluded(e, backend, manifest)) out.push_back(e.problem.id);
    }
    return out;
}

ReferenceImpl select_reference(const std::string& problem_id,
                               const std::vector<ReferenceSample>& samples,
                               Backend origin_backend) {
    for (const auto& s : samples) {
        if (s.correct && !trim(s.source).empty()) {
            return ReferenceImpl{problem_id, s.source, origin_backend, s.sample_id};
        }
    }
    throw NoReferenceError(problem_id);
}

ReferenceCorpus load_reference_corpus(const fs::path& dir) {
    const auto index_path = dir / "index.json";
    if (!fs::exists(index_path)) throw LoadError("missing reference index: " + index_path.string());
    json doc;
    try {
        doc = json::parse(read_file(index_path));
    } catch (const json::parse_error& e) {
        throw ParseError("index.json", e.what());
    }

    ReferenceCorpus corpus;
    corpus.origin_backend = backend_from_string(doc.value("origin_backend", "cuda"));
    for (const auto& [problem_id, entries] : doc.at("problems").items()) {
        auto& list = corpus.samples[problem_id];
        std::size_t i = 0;
        for (const auto& entry : entries) {
            try {
                ReferenceSample s;
                const auto rel = entry.at("path").get<std::string>();
                s.source = read_file(dir / rel);
                s.correct = entry.at("correct").get<bool>();
                s.sample_id = entry.value("sample_id", rel);
                list.push_back(std::move(s));
            } catch (const json::exception& e) {
                throw ParseError(problem_id + "[" + std::to_string(i) + "]", e.what());
            }
            ++i;
        }
    }
    return corpus;
}

std::map<std::string, ReferenceImpl> select_references(const ReferenceCorpus& corpus) {
    std::map<std::string, ReferenceImpl> out;
    for (const auto& [id, samples] : corpus.samples) {
        try {
            out.emplace(id, select_reference(id, samples, corpus.origin_backend));
        } catch (const NoReferenceError&) {
            // tolerated: the caller falls back to the baseline prompt for this problem
        }
    }
    return out;
}

}  // namespace kforge
