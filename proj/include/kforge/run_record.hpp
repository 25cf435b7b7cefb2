#pragma once

#include "kforge/verification.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace kforge {

enum class LoopPhase { functional, optimization };

std::string_view to_string(LoopPhase p) noexcept;

struct TimingSummary {
    double mean_ns = 0.0;
    double median_ns = 0.0;
    double std_ns = 0.0;
    std::size_t runs = 0;

    static TimingSummary of(const TimingStats& s) { return {s.mean_ns, s.median_ns, s.std_ns, s.samples_ns.size()}; }
};

struct RecordTiming {
    TimingSummary candidate;
    TimingSummary baseline;
    std::optional<double> speedup;  // absent only when the candidate mean was not measurable
};

/// Append-only log entry for one generation/evaluation iteration.
/// (problem_id, sample, iteration) is unique within a run.
struct RunRecord {
    std::string run_id;
    std::string problem_id;
    int sample = 0;
    int iteration = 0;
    LoopPhase phase = LoopPhase::functional;
    std::string prompt_fingerprint;
    std::string model_name;
    ExecState exec_state = ExecState::generation_failure;
    std::optional<std::string> candidate_digest;
    std::optional<RecordTiming> timing;
    std::optional<std::string> recommendation_digest;
    std::vector<std::string> artifacts;  // relative to the problem directory unless absolute
    std::string detail;
    std::vector<std::string> warnings;
    std::string started_at;
    std::string finished_at;
};

/// Fields that legitimately differ between otherwise identical runs.
inline constexpr std::string_view kTimestampFields[] = {"started_at", "finished_at"};

nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

}  // namespace kforge
