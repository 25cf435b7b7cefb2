#pragma once

#include "kforge/problem_store.hpp"
#include "kforge/types.hpp"
#include "kforge/verification.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace kforge {

struct TimingConfig {
    int timed_runs = 100;
    int warmup_runs = 10;
    bool reset_compile_context = true;
};

enum class ProfilingMode { off, capture };

inline constexpr int kShimSchemaVersion = 1;

struct ExecRequest {
    Problem problem;
    std::string candidate_source;
    Backend backend = Backend::cuda;
    BaselineKind baseline_kind = BaselineKind::eager;
    TimingConfig timing;
    CorrectnessConfig correctness;
    ProfilingMode profiling = ProfilingMode::off;
    std::string device;
    bool measure_baseline = true;
    std::chrono::milliseconds timeout{600'000};
    fs::path work_dir;  // per-evaluation scratch and artifact directory

    /// Hash over everything that can influence the outcome (not device or work_dir).
    std::string fingerprint() const;
};

/// Itemized contract violations; empty when the request is acceptable.
std::vector<std::string> validate_request(const ExecRequest& req);

class Executor {
public:
    virtual ~Executor() = default;
    /// Caller must hold the lease on `req.device`.
    /// Throws InfrastructureError for faults that are not the candidate's doing.
    virtual RawExecResult execute(const ExecRequest& req) = 0;
};

/**
 * Scripted executor; a pure function of (script, request).
 *
 *   { "records": [ {"match": {"candidate_contains": "K1"}, "outcome": {...}},
 *                  {"match": {"candidate_digest": "<hex>", "problem_id": "..."}, "outcome": {...}} ],
 *     "default": {...} }
 *
 * All conditions in a match must hold; the first matching record wins.
 * Outcome keys: phase, compile_error, runtime_error, stdout, signal, timed_out,
 * shape_ok, outputs_match, max_abs_dev, max_rel_dev, cand_mean_ms, base_mean_ms,
 * cand_samples_ns, base_samples_ns, profile_artifacts (relative to `base_dir`),
 * sleep_ms, infrastructure_error.
 */
class MockExecutor : public Executor {
public:
    explicit MockExecutor(nlohmann::json script, fs::path base_dir = {});
    static std::shared_ptr<MockExecutor> from_file(const fs::path& path);

    RawExecResult execute(const ExecRequest& req) override;

private:
    nlohmann::json script_;
    fs::path base_dir_;
};

/**
 * Runs the evaluation shim as `<shim...> --request <file> --out <file>` in a fresh
 * process per evaluation. The shim exits 0 whenever it produced a result document;
 * a nonzero exit or a missing/invalid document is an infrastructure fault and is
 * retried once. Death by signal is reported as a runtime failure, and a wall-clock
 * timeout kills the process group and yields a timed-out runtime failure.
 */
class SubprocessExecutor : public Executor {
public:
    explicit SubprocessExecutor(std::vector<std::string> shim_command) : shim_(std::move(shim_command)) {}
    RawExecResult execute(const ExecRequest& req) override;

private:
    RawExecResult attempt(const ExecRequest& req, int attempt_no);
    std::vector<std::string> shim_;
};

/// Reuses baseline timings per (problem, backend, baseline kind, timing config).
class CachingExecutor : public Executor {
public:
    explicit CachingExecutor(std::shared_ptr<Executor> inner, bool bypass = false)
        : inner_(std::move(inner)), bypass_(bypass) {}
    RawExecResult execute(const ExecRequest& req) override;
    std::size_t hits() const;

private:
    std::shared_ptr<Executor> inner_;
    bool bypass_;
    mutable std::mutex mu_;
    std::map<std::string, std::vector<double>> cache_;
    std::size_t hits_ = 0;
};

nlohmann::json shim_request_document(const ExecRequest& req, const fs::path& problem_path,
                                     const fs::path& candidate_path);
/// Validates and converts a shim result document. Throws InfrastructureError on
/// schema violations.
RawExecResult parse_shim_result(const nlohmann::json& doc, const ExecRequest& req);

struct ProcessOutcome {
    bool timed_out = false;
    std::optional<int> exit_code;
    std::optional<int> signal;
    std::string stdout_text;
    std::string stderr_text;
};

/// Spawns `argv` in its own process group with `extra_env` added, capturing output
/// to files under `capture_dir`. Kills the group on timeout.
ProcessOutcome run_process(const std::vector<std::string>& argv, const std::vector<std::string>& extra_env,
                           std::chrono::milliseconds timeout, const fs::path& capture_dir);

std::string tail(std::string_view text, std::size_t max_chars);

}  // namespace kforge
