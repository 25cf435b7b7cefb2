#pragma once

#include "kforge/run_record.hpp"
#include "kforge/verification.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kforge {

class MeasurementError : public Error {
public:
    using Error::Error;
};

/// Baseline mean over candidate mean. Throws MeasurementError when the candidate mean is not positive.
double speedup(const TimingStats& baseline, const TimingStats& candidate);
double speedup(double baseline_mean, double candidate_mean);

struct OutcomeRow {
    std::string problem_id;
    int level = 1;
    bool correct = false;
    std::optional<double> speedup;  // present => correct
};

/**
 * fast_p = (1/n) * #{rows : correct and speedup > p}.
 *
 * `n` is the level's problem count, so problems without a row count as failures.
 * Returns nullopt when n == 0. Throws PreconditionError if p < 0 or rows outnumber n.
 */
std::optional<double> fast_p(std::span<const OutcomeRow> rows, double p, std::size_t n);

struct FastPCurve {
    int level = 1;
    std::vector<double> thresholds;
    std::vector<double> values;
    std::size_t n = 0;
};

FastPCurve fast_p_curve(std::span<const OutcomeRow> rows, int level, std::span<const double> thresholds,
                        std::size_t n);

inline const std::vector<double> kDefaultThresholds{0.0, 0.5, 1.0, 1.5, 2.0};

struct ProblemSummary {
    std::string problem_id;
    int level = 1;
    std::optional<ExecState> final_state;  // nullopt: never attempted
    bool correct = false;
    std::optional<double> best_speedup;
    std::optional<int> best_iteration;
    int iterations_used = 0;
};

struct LevelReport {
    int level = 1;
    std::size_t n = 0;
    std::size_t correct = 0;
    FastPCurve curve;
};

struct Report {
    std::string run_id;
    nlohmann::json config;
    std::vector<double> thresholds;
    std::vector<LevelReport> levels;
    std::vector<ProblemSummary> problems;
    std::vector<std::string> warnings;

    std::vector<OutcomeRow> outcome_rows() const;
};

/// Reduces one problem's records: correct iff any record is correct; best speedup
/// is the maximum over correct records (earliest iteration on ties).
ProblemSummary summarize_problem(const std::string& problem_id, int level, const std::vector<RunRecord>& records);

/// Reads records.jsonl, skipping corrupt lines (each noted in `warnings`).
std::vector<RunRecord> read_records(const fs::path& records_path, std::vector<std::string>& warnings);

/// Builds the report for a run directory. Pure: same directory contents, same report.
Report aggregate(const fs::path& run_dir, std::span<const double> thresholds);

std::string render_json(const Report& report);
std::string render_table(const Report& report);
/// Per-problem rows (the continuous speedup distribution) as CSV.
std::string render_csv(const Report& report);

}  // namespace kforge
