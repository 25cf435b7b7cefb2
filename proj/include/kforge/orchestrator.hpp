#pragma once

#include "kforge/agents.hpp"
#include "kforge/device_pool.hpp"
#include "kforge/executor.hpp"
#include "kforge/problem_store.hpp"
#include "kforge/profiling.hpp"
#include "kforge/prompt_engine.hpp"
#include "kforge/providers.hpp"
#include "kforge/run_record.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kforge {

enum class LoopMode { single_shot, iterative };

std::string_view to_string(LoopMode m) noexcept;
LoopMode loop_mode_from_string(std::string_view s);

struct StrategyFlags {
    bool use_reference = false;
    bool use_profiling = false;
};

struct LoopConfig {
    int num_iterations = 5;
    LoopMode mode = LoopMode::iterative;
    StrategyFlags strategy;
    int num_samples = 1;
    ProviderProfile generation_profile;
    ProviderProfile analysis_profile;
    std::int64_t seed = 0;
    bool reuse_profile = false;  // profile the first correct candidate only
    BundleBudget bundle_budget;
    std::size_t feedback_budget_tokens = 4000;
    std::string task_instructions;

    /// Generation budget per sample chain: 1 in single-shot mode.
    int budget() const noexcept { return mode == LoopMode::single_shot ? 1 : num_iterations; }
};

std::vector<std::string> validate_loop_config(const LoopConfig& cfg);

/// Evaluation settings shared by every iteration of a run.
struct EvalSettings {
    Backend backend = Backend::cuda;
    BaselineKind baseline_kind = BaselineKind::eager;
    TimingConfig timing;
    CorrectnessConfig correctness;
    std::chrono::milliseconds timeout{600'000};
    fs::path screenshots_dir;  // optional: <dir>/<problem id>/*.png
};

struct LoopDeps {
    ModelClient& client;
    Executor& executor;
    DevicePool& pool;
    const TemplateSet& templates;
    OneShotExample one_shot;
    const std::map<std::string, ReferenceImpl>* references = nullptr;
};

struct BestCandidate {
    std::string problem_id;
    std::string candidate_digest;
    double speedup = 0.0;
    int iteration = 0;
    int sample = 0;
};

struct ProblemOutcome {
    std::string problem_id;
    std::vector<RunRecord> records;
    std::optional<BestCandidate> best;
    std::optional<std::string> abort_reason;
};

/// Maximal speedup over correct records; ties go to the earliest (sample, iteration).
std::optional<BestCandidate> select_best(const std::vector<RunRecord>& records);

/**
 * Runs the functional/optimization loop for one problem.
 *
 * Iteration 1 uses the single-shot prompt (with the reference when requested).
 * Until a candidate is correct, each refinement prompt carries the previous
 * candidate and its error transcript. Once correct, the loop switches to the
 * optimization phase for good: each correct candidate is optionally profiled and
 * analyzed, and the next prompt carries its timings and the recommendation.
 * Exactly one record is produced per generation.
 *
 * When `problem_dir` is non-empty, records.jsonl, candidates/, prompts/ and
 * artifacts/ are written there as the loop progresses. An infrastructure fault
 * ends the problem with `abort_reason` set.
 */
ProblemOutcome run_problem(const Problem& problem, const LoopConfig& cfg, const EvalSettings& eval, LoopDeps& deps,
                           const std::string& run_id, const fs::path& problem_dir);

struct SuiteOptions {
    fs::path runs_dir = "runs";
    std::size_t parallelism = 1;
    std::optional<std::string> resume_id;
    /// Identity of the effective configuration; hashed with the problem set into the run id.
    nlohmann::json identity;
    /// Full configuration echoed into config.json.
    nlohmann::json config;
};

struct SuiteResult {
    std::string run_id;
    fs::path run_dir;
    std::size_t executed = 0;
    std::size_t skipped = 0;
    std::vector<std::string> aborted;
};

std::string compute_run_id(const nlohmann::json& identity, const ProblemSet& problems, std::int64_t seed);

/// Directory name a problem id maps to inside the run directory ('/' becomes '_').
std::string problem_dir_name(std::string_view problem_id);

/**
 * Runs every problem, at most `parallelism` at a time, and writes the suite summary.
 *
 * An existing run directory with a matching config is resumed: complete problems
 * are skipped and partial ones restarted from scratch. A mismatched config is refused
 * with ConfigError.
 */
SuiteResult run_suite(const ProblemSet& problems, const LoopConfig& cfg, const EvalSettings& eval, LoopDeps& deps,
                      const SuiteOptions& opts);

}  // namespace kforge
