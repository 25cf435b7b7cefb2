#include "kforge/profiling.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <regex>

using namespace kforge;

namespace {

fs::path nsys_dir() { return test::fixture_dir() / "profiling" / "nsys"; }

struct OracleRow {
    std::string name;
    double total, avg;
    std::uint64_t calls;
};

/// Independent reader for the fixture layout: every field is double-quoted.
std::vector<OracleRow> oracle_rows(const fs::path& file) {
    std::vector<OracleRow> out;
    const std::regex field("\"([^\"]*)\"");
    bool header = true;
    for (const auto& line : split(read_file(file), '\n')) {
        if (trim(line).empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        for (auto it = std::sregex_iterator(line.begin(), line.end(), field); it != std::sregex_iterator(); ++it)
            f.push_back((*it)[1]);
        out.push_back({f.at(8), std::stod(f.at(1)), std::stod(f.at(3)), std::stoull(f.at(2))});
    }
    return out;
}

}  // namespace

TEST(StatsCsv, FixturesParseCompletely) {
    const auto reports = parse_stats_reports(nsys_dir());
    EXPECT_TRUE(reports.warnings.empty());
    EXPECT_TRUE(reports.opaque.empty());
    const std::map<ReportKind, std::string> files{
        {ReportKind::api_summary, "report_cuda_api_sum.csv"},
        {ReportKind::gpu_kernel_summary, "report_cuda_gpu_kern_sum.csv"},
        {ReportKind::memory_transfer_summary, "report_cuda_gpu_mem_time_sum.csv"}};
    for (const auto& [kind, file] : files) {
        const auto expected = oracle_rows(nsys_dir() / file);
        const auto& got = reports.tables.at(kind);
        ASSERT_EQ(got.size(), expected.size()) << file;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].name, expected[i].name);
            EXPECT_EQ(got[i].total_time_ns, expected[i].total);
            EXPECT_EQ(got[i].calls, expected[i].calls);
            EXPECT_EQ(got[i].avg_ns, expected[i].avg);
            EXPECT_LE(std::fabs(got[i].total_time_ns - got[i].avg_ns * static_cast<double>(got[i].calls)), 1000.0);
        }
    }
}

TEST(StatsCsv, QuotedCommasInNamesSurvive) {
    const auto reports = parse_stats_reports(nsys_dir());
    const auto& kern = reports.tables.at(ReportKind::gpu_kernel_summary);
    EXPECT_TRUE(std::any_of(kern.begin(), kern.end(), [](const KernelStatRow& r) {
        return r.name == "void fused_conv_relu_kernel<18>(const float *, float *, int)";
    }));
}

TEST(StatsCsv, BadRowsAreSkippedWithWarning) {
    const std::string text =
        "Time (%),Total Time (ns),Instances,Avg (ns),Name\n"
        "50.0,1000,10,100.0,good\n"
        "abc,1000,10,100.0,bad_number\n"
        "50.0,1000\n"
        "150.0,1000,10,100.0,bad_pct\n"
        "50.0,1000,10,100.0,also_good\n";
    StatsReports r;
    parse_stats_csv(text, "kern.csv", r);
    ASSERT_EQ(r.tables.at(ReportKind::gpu_kernel_summary).size(), 2u);
    EXPECT_EQ(r.warnings.size(), 3u);
}

TEST(StatsCsv, UnknownLayoutIsForwardedAsOpaque) {
    StatsReports r;
    parse_stats_csv("a,b\n1,2\n", "weird.csv", r);
    EXPECT_TRUE(r.tables.empty());
    ASSERT_EQ(r.opaque.size(), 1u);
    EXPECT_EQ(r.opaque[0].title, "weird.csv");
}

TEST(StatsCsv, KindFromHeaderWhenFileNameIsUninformative) {
    StatsReports r;
    parse_stats_csv("Time (%),Total Time (ns),Count,Avg (ns),Operation\n100,10,1,10,[CUDA memset]\n", "x.csv", r);
    EXPECT_EQ(r.tables.count(ReportKind::memory_transfer_summary), 1u);
}

TEST(StatsCsv, MissingPercentIsDerivedFromTotals) {
    StatsReports r;
    parse_stats_csv("Total Time (ns),Num Calls,Avg (ns),Name\n300,3,100,a\n100,1,100,b\n", "api.csv", r);
    const auto& rows = r.tables.at(ReportKind::api_summary);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_DOUBLE_EQ(rows[0].pct_time, 75.0);
    EXPECT_DOUBLE_EQ(rows[1].pct_time, 25.0);
}

TEST(StatsCsv, CrlfAndEmptyFile) {
    StatsReports r;
    parse_stats_csv("Time (%),Total Time (ns),Instances,Avg (ns),Name\r\n1,10,1,10,k\r\n", "kern.csv", r);
    EXPECT_EQ(r.tables.at(ReportKind::gpu_kernel_summary).size(), 1u);
    parse_stats_csv("", "kern.csv", r);
    EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(StatsCsv, WriteThenParseRoundTrips) {
    const auto reports = parse_stats_reports(nsys_dir());
    for (const auto& [kind, rows] : reports.tables) {
        StatsReports back;
        parse_stats_csv(write_stats_csv(kind, rows), "x.csv", back);
        ASSERT_EQ(back.tables.count(kind), 1u) << to_string(kind);
        EXPECT_EQ(back.tables.at(kind), rows);
    }
}

TEST(StatsCsv, MissingDirectoryIsLoadError) {
    EXPECT_THROW(parse_stats_reports("/nonexistent/kforge"), LoadError);
}

TEST(Bundle, KeepsTopRowsByTotalTime) {
    const auto reports = parse_stats_reports(nsys_dir());
    const auto bundle = build_bundle(reports, {}, {20, 3}, Backend::cuda);
    // oracle: sort the raw kernel rows by total time, take 20
    auto rows = oracle_rows(nsys_dir() / "report_cuda_gpu_kern_sum.csv");
    ASSERT_EQ(rows.size(), 25u);
    std::sort(rows.begin(), rows.end(), [](const OracleRow& a, const OracleRow& b) {
        return a.total != b.total ? a.total > b.total : a.name < b.name;
    });
    rows.resize(20);
    const auto it = std::find_if(bundle.items.begin(), bundle.items.end(), [](const ProfileItem& i) {
        return i.title.starts_with("gpu_kernel_summary");
    });
    ASSERT_NE(it, bundle.items.end());
    StatsReports back;
    parse_stats_csv(it->payload, "kern.csv", back);
    const auto& kept = back.tables.at(ReportKind::gpu_kernel_summary);
    ASSERT_EQ(kept.size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(kept[i].name, rows[i].name);
        EXPECT_EQ(kept[i].total_time_ns, rows[i].total);
    }
}

TEST(Bundle, SmallTablesAreKeptWhole) {
    const auto reports = parse_stats_reports(nsys_dir());
    const auto bundle = build_bundle(reports, {}, {20, 3}, Backend::cuda);
    EXPECT_EQ(bundle.items.size(), 3u);
    EXPECT_EQ(bundle.image_count(), 0u);
}

TEST(Bundle, ImagesOrderedAndCapped) {
    test::TempDir dir("shots");
    for (const char* n : {"timeline.png", "memory.png", "summary.png", "summary_b.png", "other.png"})
        write_file(dir / n, std::string("png-") + n);
    const auto shots = find_screenshots(dir.path());
    EXPECT_EQ(shots.size(), 4u);  // other.png is not a recognised capture
    const auto bundle = build_bundle({}, shots, {20, 3}, Backend::metal);
    ASSERT_EQ(bundle.image_count(), 3u);
    EXPECT_EQ(bundle.items[0].title, "summary.png");
    EXPECT_EQ(bundle.items[1].title, "summary_b.png");
    EXPECT_EQ(bundle.items[2].title, "memory.png");
}

TEST(Bundle, DuplicateImagesAreDropped) {
    test::TempDir dir("dups");
    write_file(dir / "summary.png", "same");
    write_file(dir / "memory.png", "same");
    const auto bundle = build_bundle({}, find_screenshots(dir.path()), {20, 3}, Backend::metal);
    EXPECT_EQ(bundle.image_count(), 1u);
}

TEST(Bundle, NothingUsableThrows) {
    EXPECT_THROW(build_bundle({}, {}, {20, 3}, Backend::cuda), PreconditionError);
}

TEST(Bundle, OpaqueTablesAreTruncated) {
    StatsReports r;
    std::string text = "a,b\n";
    for (int i = 0; i < 50; ++i) text += std::to_string(i) + ",x\n";
    r.opaque.push_back({"odd.csv", text});
    const auto bundle = build_bundle(r, {}, {5, 3}, Backend::cuda);
    ASSERT_EQ(bundle.items.size(), 1u);
    EXPECT_EQ(split(bundle.items[0].payload, '\n').size(), 7u);  // header + 5 rows + trailing empty
}

TEST(Ingest, SortsArtifactsAndNotesMissing) {
    test::TempDir dir("ingest");
    write_file(dir / "summary.png", "img");
    write_file(dir / "trace.gputrace", "opaque");
    const auto [reports, images] =
        ingest_artifacts({nsys_dir(), dir / "summary.png", dir / "absent.csv", dir / "trace.gputrace"});
    EXPECT_EQ(reports.tables.size(), 3u);
    EXPECT_EQ(images.size(), 1u);
    ASSERT_EQ(reports.warnings.size(), 1u);
    EXPECT_NE(reports.warnings[0].find("absent.csv"), std::string::npos);
}
