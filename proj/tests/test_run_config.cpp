#include "kforge/run_config.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace kforge;
using nlohmann::json;

namespace {

RunConfig valid() {
    RunConfig c;
    c.problems = (test::problem_set_dir()).string();
    c.exec_script = "exec.json";
    c.mock_script = "mock.json";
    return c;
}

bool mentions(const std::vector<std::string>& problems, std::string_view what) {
    return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) { return p.find(what) != p.npos; });
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
    RunConfig c = valid();
    c.backend = "metal";
    c.levels = {1, 3};
    c.use_profiling = true;
    c.shim = {"python3", "shim.py"};
    c.devices = {"0", "1"};
    c.atol = 0.05;
    const json j = c;
    EXPECT_EQ(j.get<RunConfig>(), c);
}

TEST(RunConfig, PartialDocumentUsesDefaults) {
    const auto c = json{{"backend", "metal"}}.get<RunConfig>();
    EXPECT_EQ(c.backend, "metal");
    EXPECT_EQ(c.iterations, 5);
    EXPECT_EQ(c.max_rows, 20u);
    EXPECT_EQ(c.timed_runs, 100);
}

TEST(RunConfig, UnknownKeysAndWrongTypesRejected) {
    EXPECT_THROW(json({{"iteratoins", 3}}).get<RunConfig>(), ConfigError);
    EXPECT_THROW(json({{"iterations", "three"}}).get<RunConfig>(), ConfigError);
    EXPECT_THROW(json::array().get<RunConfig>(), ConfigError);
}

TEST(RunConfig, LoadFromFile) {
    test::TempDir dir("cfg");
    write_file(dir / "c.json", R"({"iterations": 3, "model": "claude-opus-4"})");
    const auto c = load_run_config(dir / "c.json");
    EXPECT_EQ(c.iterations, 3);
    write_file(dir / "bad.json", "{");
    EXPECT_THROW(load_run_config(dir / "bad.json"), ConfigError);
}

TEST(RunConfig, ValidDefaultsPass) { EXPECT_TRUE(validate_run_config(valid()).empty()); }

TEST(RunConfig, ValidationItemizes) {
    RunConfig c = valid();
    c.backend = "rocm";
    c.mode = "single-shot";
    c.iterations = 5;
    c.levels = {4};
    c.parallelism = 2;
    c.executor = "shim";
    const auto p = validate_run_config(c);
    EXPECT_TRUE(mentions(p, "unknown backend"));
    EXPECT_TRUE(mentions(p, "single-shot mode requires"));
    EXPECT_TRUE(mentions(p, "level 4"));
    EXPECT_TRUE(mentions(p, "parallelism 2 exceeds"));
    EXPECT_TRUE(mentions(p, "--shim"));
}

TEST(RunConfig, GraphCompiledOnlyOnCuda) {
    RunConfig c = valid();
    c.baseline = "graph-compiled";
    EXPECT_TRUE(validate_run_config(c).empty());
    c.backend = "metal";
    EXPECT_TRUE(mentions(validate_run_config(c), "only supported on cuda"));
}

TEST(RunConfig, UnknownModelReported) {
    RunConfig c = valid();
    c.model = "gpt-2";
    EXPECT_TRUE(mentions(validate_run_config(c), "generation model"));
}

TEST(RunConfig, ResolveBuildsLoopAndEval) {
    RunConfig c = valid();
    c.iterations = 3;
    c.use_reference = true;
    c.use_profiling = true;
    c.analysis_model = "mock-text";
    c.seed = 9;
    c.timeout_s = 30;
    const auto r = resolve_run_config(c);
    EXPECT_EQ(r.loop.num_iterations, 3);
    EXPECT_TRUE(r.loop.strategy.use_reference);
    EXPECT_EQ(r.loop.generation_profile.mock_script, "mock.json");
    EXPECT_FALSE(r.loop.analysis_profile.supports_images);
    EXPECT_EQ(r.eval.correctness.seed, 9);
    EXPECT_EQ(r.eval.timeout, std::chrono::seconds(30));
    EXPECT_EQ(r.eval.timing.timed_runs, 100);
}

TEST(RunConfig, IdentityIgnoresOperationalFields) {
    RunConfig a = valid(), b = valid();
    b.devices = {"0", "1", "2"};
    b.parallelism = 3;
    b.runs_dir = "elsewhere";
    EXPECT_EQ(identity_json(a), identity_json(b));
    b.iterations = 4;
    EXPECT_NE(identity_json(a), identity_json(b));
}

TEST(RunConfig, IdentityTracksScriptContents) {
    test::TempDir dir("ident");
    RunConfig a = valid();
    a.exec_script = (dir / "e.json").string();
    write_file(a.exec_script, "{}");
    const auto before = identity_json(a);
    write_file(a.exec_script, "{\"default\": {}}");
    EXPECT_NE(before, identity_json(a));
}
