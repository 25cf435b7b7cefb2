#pragma once

#include "kforge/core.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace kforge {

/// One benchmark task: a reference framework module plus its metadata.
struct Problem {
    std::string id;    // e.g. "level2/problem23"
    int level = 1;     // 1, 2 or 3
    std::string name;
    std::string reference_source;
    fs::path source_path;
    std::set<Backend> backend_support;
    std::vector<std::string> tags;
};

struct ProblemSet {
    Backend backend = Backend::cuda;
    std::vector<Problem> problems;          // manifest order
    std::map<int, std::size_t> counts_by_level;  // keys 1..3 always present
    std::vector<std::string> excluded;      // ids dropped for this backend
    std::size_t manifest_size = 0;

    const Problem* find(std::string_view id) const;
    /// Digest over ids and sources in order; feeds the run identity.
    std::string digest() const;
};

struct ReferenceImpl {
    std::string problem_id;
    std::string source;
    Backend origin_backend = Backend::cuda;
    std::string provenance;  // sample id within the corpus
};

/// One candidate sample from a prior run, in sample-index order.
struct ReferenceSample {
    std::string source;
    bool correct = false;
    std::string sample_id;
};

struct ReferenceCorpus {
    Backend origin_backend = Backend::cuda;
    std::map<std::string, std::vector<ReferenceSample>> samples;  // problem id -> ordered samples
};

/**
 * Loads `<root>/manifest.json` and returns the problems runnable on `backend`.
 *
 * A problem is excluded when the backend appears in its `unsupported_backends`
 * list or when its reference source uses an operation listed for the backend in
 * the manifest's `unsupported_operations` section.
 */
ProblemSet load_problem_set(const fs::path& root, Backend backend);

/// Ids excluded for `backend`, in manifest order. Empty when the manifest declares none.
std::vector<std::string> exclusions(const fs::path& root, Backend backend);

/// First sample flagged correct. Throws NoReferenceError if there is none.
ReferenceImpl select_reference(const std::string& problem_id,
                               const std::vector<ReferenceSample>& samples,
                               Backend origin_backend);

/// Loads `<dir>/index.json` and the sample files it names.
ReferenceCorpus load_reference_corpus(const fs::path& dir);

/// One reference per problem that has a correct sample. Problems without one are absent.
std::map<std::string, ReferenceImpl> select_references(const ReferenceCorpus& corpus);

}  // namespace kforge
