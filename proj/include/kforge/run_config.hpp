#pragma once

#include "kforge/core.hpp"
#include "kforge/executor.hpp"
#include "kforge/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace kforge {

/**
 * Everything `kforge run` needs, as one serializable document.
 *
 * Enumerations are kept as their spelled names so a file round-trips exactly.
 * Every CLI flag has a field here; flags override values read from a file.
 */
struct RunConfig {
    std::string backend = "cuda";
    std::string problems;                 // problem-set root (holds manifest.json)
    std::vector<std::string> problem_ids; // empty: all
    std::vector<int> levels;              // empty: all
    std::string mode = "iterative";
    int iterations = 5;
    bool use_reference = false;
    bool use_profiling = false;
    int samples = 1;
    std::string model = "mock";
    std::string analysis_model;  // empty: same as model
    std::int64_t seed = 0;
    bool reuse_profile = false;
    std::size_t max_rows = 20;
    std::size_t max_images = 3;
    std::size_t feedback_budget_tokens = 4000;
    std::string task_instructions;
    std::string baseline = "eager";
    int timed_runs = 100;
    int warmup_runs = 10;
    int trials = 5;
    double atol = 1e-2;
    double rtol = 1e-2;
    std::int64_t timeout_s = 600;
    bool baseline_cache = true;
    std::string references;
    std::string templates;
    std::string screenshots;
    std::string executor = "mock";  // mock | shim
    std::vector<std::string> shim;  // shim command line
    std::string exec_script;        // mock executor script
    std::string mock_script;        // mock provider script
    std::vector<std::string> devices{"0"};
    std::size_t parallelism = 1;
    std::string runs_dir = "runs";

    bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Throws ConfigError on unknown keys or wrongly typed values.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const fs::path& path);

/// Itemized validation problems; empty when the config can run.
std::vector<std::string> validate_run_config(const RunConfig& c);

/// Fields that determine results (paths of scripts are replaced by content digests;
/// runs_dir, devices and parallelism are excluded).
nlohmann::json identity_json(const RunConfig& c);

struct ResolvedRun {
    Backend backend = Backend::cuda;
    LoopConfig loop;
    EvalSettings eval;
};

/// Turns a validated config into loop and evaluation settings, resolving model profiles.
ResolvedRun resolve_run_config(const RunConfig& c);

}  // namespace kforge
