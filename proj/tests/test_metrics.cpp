#include "kforge/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace kforge;
using nlohmann::json;

namespace {

OutcomeRow row(std::string id, bool correct, std::optional<double> s, int level = 1) {
    return OutcomeRow{std::move(id), level, correct, s};
}

RunRecord record(const std::string& id, int iter, ExecState st, std::optional<double> s = std::nullopt) {
    RunRecord r;
    r.run_id = "run-x";
    r.problem_id = id;
    r.iteration = iter;
    r.exec_state = st;
    r.model_name = "mock";
    r.prompt_fingerprint = "fp";
    r.started_at = r.finished_at = "2026-01-01T00:00:00.000Z";
    if (st == ExecState::correct) {
        r.candidate_digest = "d" + std::to_string(iter);
        r.timing = RecordTiming{{1e6 / s.value_or(1), 1e6, 0, 5}, {1e6, 1e6, 0, 5}, s};
    }
    return r;
}

void write_run(const fs::path& dir, const std::map<std::string, std::vector<RunRecord>>& recs,
               const std::vector<std::pair<std::string, int>>& problems) {
    json list = json::array();
    for (const auto& [id, level] : problems) list.push_back({{"id", id}, {"level", level}});
    write_file(dir / "problems.json", json{{"problems", list}}.dump());
    write_file(dir / "config.json", json{{"backend", "cuda"}}.dump());
    for (const auto& [id, rs] : recs) {
        std::string d = id;
        std::replace(d.begin(), d.end(), '/', '_');
        fs::create_directories(dir / d);
        std::string body;
        for (const auto& r : rs) body += to_json(r).dump() + "\n";
        write_file(dir / d / "records.jsonl", body);
    }
}

}  // namespace

TEST(Speedup, RatioAndUndefined) {
    EXPECT_DOUBLE_EQ(speedup(2.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(speedup(1.0, 4.0), 0.25);
    EXPECT_THROW(speedup(1.0, 0.0), MeasurementError);
    EXPECT_THROW(speedup(0.0, 1.0), MeasurementError);
    EXPECT_THROW(speedup(1.0, std::nan("")), MeasurementError);
}

TEST(FastP, StrictThreshold) {
    const std::vector<OutcomeRow> rows{row("a", true, 1.0), row("b", true, 1.0001), row("c", false, std::nullopt)};
    EXPECT_DOUBLE_EQ(*fast_p(rows, 1.0, 4), 0.25);  // 1.0 is not > 1.0
    EXPECT_DOUBLE_EQ(*fast_p(rows, 0.0, 4), 0.5);
}

TEST(FastP, EdgeCases) {
    EXPECT_FALSE(fast_p({}, 1.0, 0).has_value());
    EXPECT_DOUBLE_EQ(*fast_p({}, 1.0, 10), 0.0);
    const std::vector<OutcomeRow> rows{row("a", true, 2.0)};
    EXPECT_THROW(fast_p(rows, -0.1, 1), PreconditionError);
    EXPECT_THROW(fast_p(rows, 1.0, 0), PreconditionError);
}

TEST(FastP, RandomFixturesAgainstCountingOracle) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> count(0, 40), coin(0, 3);
    std::uniform_real_distribution<double> sp(0.0, 3.0);
    for (int f = 0; f < 300; ++f) {
        const std::size_t n = static_cast<std::size_t>(count(rng)) + 1;
        std::vector<OutcomeRow> rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (coin(rng) == 0) continue;  // never attempted
            const bool ok = coin(rng) != 0;
            rows.push_back(row("p" + std::to_string(i), ok, ok ? std::optional(std::round(sp(rng) * 4) / 4) : std::nullopt));
        }
        double prev = 2.0;
        for (double p : kDefaultThresholds) {
            std::size_t hits = 0;
            for (const auto& r : rows) hits += (r.correct && *r.speedup > p) ? 1 : 0;
            const double got = *fast_p(rows, p, n);
            ASSERT_DOUBLE_EQ(got, static_cast<double>(hits) / static_cast<double>(n));
            ASSERT_LE(got, prev);
            prev = got;
        }
    }
}

TEST(FastP, CurvePerLevel) {
    const std::vector<OutcomeRow> rows{row("a", true, 1.5, 1), row("b", true, 0.5, 2)};
    const auto c = fast_p_curve(rows, 1, kDefaultThresholds, 2);
    ASSERT_EQ(c.values.size(), 5u);
    EXPECT_EQ(c.values, (std::vector<double>{0.5, 0.5, 0.5, 0.0, 0.0}));
    EXPECT_TRUE(fast_p_curve(rows, 3, kDefaultThresholds, 0).values.empty());
}

TEST(Summary, BestIsMaxWithEarliestTie) {
    const std::vector<RunRecord> rs{record("p", 1, ExecState::compilation_failure), record("p", 2, ExecState::correct, 1.4),
                                    record("p", 3, ExecState::correct, 1.4), record("p", 4, ExecState::output_mismatch)};
    const auto s = summarize_problem("p", 1, rs);
    EXPECT_TRUE(s.correct);
    EXPECT_EQ(s.best_iteration, 2);
    EXPECT_EQ(s.final_state, ExecState::output_mismatch);
    EXPECT_EQ(s.iterations_used, 4);
    EXPECT_FALSE(summarize_problem("q", 1, {}).final_state);
}

TEST(Aggregate, ReportFromRunDirectory) {
    test::TempDir dir("agg");
    write_run(dir.path(),
              {{"level1/a", {record("level1/a", 1, ExecState::correct, 1.2)}},
               {"level1/b", {record("level1/b", 1, ExecState::runtime_error)}},
               {"level2/c", {record("level2/c", 1, ExecState::correct, 0.8)}}},
              {{"level1/a", 1}, {"level1/b", 1}, {"level1/never", 1}, {"level2/c", 2}});
    const auto r = aggregate(dir.path(), kDefaultThresholds);
    ASSERT_EQ(r.levels.size(), 3u);
    EXPECT_EQ(r.levels[0].n, 3u);
    EXPECT_EQ(r.levels[0].correct, 1u);
    EXPECT_DOUBLE_EQ(r.levels[0].curve.values[2], 1.0 / 3.0);  // fast_1
    EXPECT_DOUBLE_EQ(r.levels[1].curve.values[2], 0.0);
    EXPECT_DOUBLE_EQ(r.levels[1].curve.values[1], 1.0);  // fast_0.5
    EXPECT_TRUE(r.levels[2].curve.values.empty());
    EXPECT_EQ(r.config["backend"], "cuda");
}

TEST(Aggregate, IsPureAndSkipsCorruptLines) {
    test::TempDir dir("agg2");
    write_run(dir.path(), {{"level1/a", {record("level1/a", 1, ExecState::correct, 1.2)}}}, {{"level1/a", 1}});
    std::ofstream(dir / "level1_a/records.jsonl", std::ios::app) << "{not json\n";
    const auto a = render_json(aggregate(dir.path(), kDefaultThresholds));
    const auto b = render_json(aggregate(dir.path(), kDefaultThresholds));
    EXPECT_EQ(a, b);
    EXPECT_EQ(json::parse(a)["warnings"].size(), 1u);
}

TEST(Aggregate, NotARunDirectory) {
    test::TempDir dir("agg3");
    EXPECT_THROW(aggregate(dir.path(), kDefaultThresholds), LoadError);
}

TEST(Render, TableAndCsv) {
    test::TempDir dir("render");
    write_run(dir.path(), {{"level1/a", {record("level1/a", 1, ExecState::correct, 1.25)}}},
              {{"level1/a", 1}, {"level1/b", 1}});
    const auto r = aggregate(dir.path(), std::vector<double>{1.0});
    const auto table = render_table(r);
    EXPECT_NE(table.find("fast_1"), std::string::npos);
    EXPECT_NE(table.find("0.500"), std::string::npos);
    EXPECT_EQ(render_csv(r),
              "problem_id,level,final_state,correct,best_speedup,best_iteration,iterations_used\n"
              "level1/a,1,correct,true,1.25,1,1\n"
              "level1/b,1,not_attempted,false,,,0\n");
}

TEST(RunRecordJson, RoundTrip) {
    auto r = record("level1/a", 2, ExecState::correct, 1.5);
    r.recommendation_digest = "rd";
    r.artifacts = {"prompts/iter2.txt"};
    r.warnings = {"w"};
    r.phase = LoopPhase::optimization;
    r.sample = 1;
    const auto j = to_json(r);
    EXPECT_EQ(to_json(run_record_from_json(j)), j);
    EXPECT_EQ(j["timing"]["speedup"], 1.5);
    EXPECT_EQ(j["phase"], "optimization");
}
