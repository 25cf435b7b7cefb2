#pragma once

#include "kforge/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kforge {

/// Outcome of one generation/evaluation iteration. Declared in precedence order:
/// the earliest failing phase wins.
enum class ExecState {
    generation_failure,
    compilation_failure,
    runtime_error,
    output_mismatch,
    correct,
};

std::string_view to_string(ExecState s) noexcept;
ExecState exec_state_from_string(std::string_view s);

/// Last phase the evaluation entered. A result stopped at `compile`, `run` or
/// `compare` failed in that phase; `timed` means every check passed.
enum class ExecPhase { compile, run, compare, timed };

std::string_view to_string(ExecPhase p) noexcept;
ExecPhase exec_phase_from_string(std::string_view s);

struct CorrectnessConfig {
    int trials = 5;
    double atol = 1e-2;
    double rtol = 1e-2;
    std::int64_t seed = 0;
};

struct RawExecResult {
    ExecPhase phase_reached = ExecPhase::compile;
    bool timed_out = false;
    std::optional<int> signal;
    std::string compile_transcript;
    std::string run_transcript;
    std::vector<std::vector<std::int64_t>> candidate_shapes;
    std::vector<std::vector<std::int64_t>> reference_shapes;
    std::optional<bool> shape_ok;
    std::optional<bool> outputs_match;  // elementwise verdict when the evaluator reports one
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    std::vector<double> candidate_samples_ns;
    std::vector<double> baseline_samples_ns;
    std::vector<std::string> profile_artifact_paths;
    bool profiling_unavailable = false;
    double wall_time_ms = 0.0;
    std::string device_class;

    /// Transcript of the phase that failed, or the run transcript on success.
    const std::string& failure_transcript() const noexcept;
};

/**
 * Maps an evaluation onto exactly one execution state.
 *
 * Precedence: no code -> generation_failure; compile stop -> compilation_failure;
 * crash, signal or timeout -> runtime_error; shape or value breach ->
 * output_mismatch; otherwise correct.
 *
 * When the evaluator gives no elementwise verdict, a value breach is inferred
 * from the maxima: both max_abs_dev > atol and max_rel_dev > rtol must hold,
 * since any failing element exceeds both bounds.
 */
ExecState classify(const RawExecResult& raw, bool had_code, const CorrectnessConfig& cfg = {});

struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> values;
};

using TrialOutputs = std::vector<Tensor>;

struct CompareResult {
    bool pass = false;
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    bool shape_ok = false;
};

/// Elementwise |a - b| <= atol + rtol * |b|, where b is the reference.
/// NaN anywhere fails the comparison.
CompareResult compare_outputs(const TrialOutputs& candidate, const TrialOutputs& reference,
                              const CorrectnessConfig& cfg);
/// Multi-trial form: passes only if every trial passes; deviations are maxima over trials.
CompareResult compare_outputs(std::span<const TrialOutputs> candidate,
                              std::span<const TrialOutputs> reference, const CorrectnessConfig& cfg);

struct TimingStats {
    std::vector<double> samples_ns;
    double mean_ns = 0.0;
    double median_ns = 0.0;
    double std_ns = 0.0;  // sample standard deviation (n - 1); 0 for a single sample
};

/// Throws PreconditionError on an empty sample list.
TimingStats reduce_timing(std::span<const double> samples_ns);

/// Seed for one randomized correctness trial; stable across platforms.
std::uint64_t trial_seed(std::int64_t run_seed, std::string_view problem_id, int trial_index);

}  // namespace kforge
