#pragma once

#include "kforge/core.hpp"

#include <map>
#include <string>
#include <vector>

namespace kforge {

enum class ReportKind { api_summary, gpu_kernel_summary, memory_transfer_summary, range_summary };

std::string_view to_string(ReportKind k) noexcept;

/// One row of a profiler statistics table (API call, kernel, memory op or range).
struct KernelStatRow {
    std::string name;
    double total_time_ns = 0.0;
    std::uint64_t calls = 0;
    double avg_ns = 0.0;
    double pct_time = 0.0;  // 0..100

    bool operator==(const KernelStatRow&) const = default;
};

/// A CSV we could not map onto a known report layout; forwarded as text.
struct OpaqueTable {
    std::string title;
    std::string text;
};

struct StatsReports {
    std::map<ReportKind, std::vector<KernelStatRow>> tables;
    std::vector<OpaqueTable> opaque;
    std::vector<std::string> warnings;

    bool empty() const noexcept;
};

/// Parses one CSV document. `file_name` helps identify the report kind.
/// Rows that fail to parse are skipped and noted in `warnings`.
void parse_stats_csv(std::string_view text, std::string_view file_name, StatsReports& into);

/// Parses every `*.csv` in `dir` (sorted by file name).
StatsReports parse_stats_reports(const fs::path& dir);

/// Serializes rows in the profiler's column layout; parse_stats_csv reads it back unchanged.
std::string write_stats_csv(ReportKind kind, const std::vector<KernelStatRow>& rows);

enum class EvidenceKind { text_table, image };

struct ProfileItem {
    EvidenceKind kind = EvidenceKind::text_table;
    std::string title;
    std::string payload;  // table text, or image file path
    std::string digest;
};

struct ProfileBundle {
    std::vector<ProfileItem> items;
    Backend source_backend = Backend::cuda;

    bool empty() const noexcept { return items.empty(); }
    std::size_t image_count() const noexcept;
};

struct BundleBudget {
    std::size_t max_rows = 20;
    std::size_t max_images = 3;
};

/**
 * Assembles the evidence handed to the performance-analysis agent.
 *
 * Typed tables keep their top `max_rows` rows by total time (descending, ties by
 * name). Images are ordered summary, memory, timeline, then anything else by
 * file name, and capped at `max_images`. Items with a duplicate digest are dropped.
 * Throws PreconditionError("no profiling evidence") when nothing usable remains.
 */
ProfileBundle build_bundle(const StatsReports& reports, const std::vector<fs::path>& screenshots,
                           const BundleBudget& budget, Backend backend);

/// PNG files in `dir` whose names start with summary, memory or timeline.
std::vector<fs::path> find_screenshots(const fs::path& dir);

/// Sorts evaluator artifact paths into stats reports (CSV files or directories
/// holding them) and screenshots. Missing paths are noted as warnings.
std::pair<StatsReports, std::vector<fs::path>> ingest_artifacts(const std::vector<fs::path>& paths);

}  // namespace kforge
