#pragma once

#include "kforge/problem_store.hpp"
#include "kforge/verification.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kforge {

/// One scripted iteration: the state the mock executor will report, and the
/// speedup for correct steps.
struct ScriptStep {
    ExecState state = ExecState::correct;
    double speedup = 1.0;
};

/// Marker line embedded in scripted candidates so the mock executor can match them.
std::string mock_marker(std::string_view problem_id, int iteration);

/// Model response carrying a scripted candidate (no fenced code for generation_failure).
std::string mock_generation_response(std::string_view problem_id, int iteration, ExecState state);

/// Mock executor outcome realizing `step` (baseline fixed at 1 ms).
nlohmann::json mock_outcome(const ScriptStep& step);

struct MockScripts {
    nlohmann::json provider;  // MockModelClient script
    nlohmann::json executor;  // MockExecutor script
};

/// Scripts realizing `steps` for one problem: step k drives iteration k + 1 of
/// every sample chain. Iterations beyond the script fall back to the defaults.
void add_problem_script(MockScripts& scripts, std::string_view problem_id, const std::vector<ScriptStep>& steps);

/// Empty scripts with defaults: generation without code, analysis recommendation
/// text, and a slow correct outcome for unmatched candidates.
MockScripts empty_mock_scripts();

/// Deterministic random walk of `iterations` steps per problem.
MockScripts random_mock_scripts(const ProblemSet& problems, int iterations, std::uint64_t seed);

}  // namespace kforge
