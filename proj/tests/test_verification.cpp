#include "kforge/verification.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace kforge;

namespace {

RawExecResult at(ExecPhase p) {
    RawExecResult r;
    r.phase_reached = p;
    return r;
}

/// Independent statement of the precedence rule, used as the oracle.
ExecState oracle_state(const RawExecResult& r, bool had_code, const CorrectnessConfig& cfg) {
    if (!had_code) return ExecState::generation_failure;
    if (r.phase_reached == ExecPhase::compile) return ExecState::compilation_failure;
    if (r.phase_reached == ExecPhase::run || r.timed_out || r.signal) return ExecState::runtime_error;
    if (r.phase_reached == ExecPhase::compare) return ExecState::output_mismatch;
    if (r.shape_ok.has_value() && !*r.shape_ok) return ExecState::output_mismatch;
    if (r.outputs_match.has_value()) return *r.outputs_match ? ExecState::correct : ExecState::output_mismatch;
    if (!(r.max_abs_dev <= cfg.atol || r.max_rel_dev <= cfg.rtol)) return ExecState::output_mismatch;
    return ExecState::correct;
}

Tensor t(std::vector<std::int64_t> shape, std::vector<double> v) { return Tensor{std::move(shape), std::move(v)}; }

}  // namespace

TEST(Classify, NoCodeIsGenerationFailureWhateverTheRecord) {
    EXPECT_EQ(classify(at(ExecPhase::timed), false), ExecState::generation_failure);
    EXPECT_EQ(classify(at(ExecPhase::compile), false), ExecState::generation_failure);
}

TEST(Classify, CompileStopIsCompilationFailure) {
    auto r = at(ExecPhase::compile);
    r.compile_transcript = "error: expected ';'";
    EXPECT_EQ(classify(r, true), ExecState::compilation_failure);
}

TEST(Classify, CrashSignalAndTimeoutAreRuntimeErrors) {
    EXPECT_EQ(classify(at(ExecPhase::run), true), ExecState::runtime_error);
    auto sig = at(ExecPhase::timed);
    sig.signal = 11;
    EXPECT_EQ(classify(sig, true), ExecState::runtime_error);
    auto slow = at(ExecPhase::timed);
    slow.timed_out = true;
    EXPECT_EQ(classify(slow, true), ExecState::runtime_error);
}

TEST(Classify, ValueBreachIsMismatch) {
    auto r = at(ExecPhase::timed);
    r.max_abs_dev = 0.5;
    r.max_rel_dev = 0.5;
    EXPECT_EQ(classify(r, true, {5, 1e-2, 1e-2, 0}), ExecState::output_mismatch);
}

TEST(Classify, WithinToleranceIsCorrect) {
    auto r = at(ExecPhase::timed);
    r.max_abs_dev = 0.009;
    r.max_rel_dev = 0.5;  // small absolute error on a tiny value
    EXPECT_EQ(classify(r, true, {5, 1e-2, 1e-2, 0}), ExecState::correct);
}

TEST(Classify, ShapeMismatchBeatsValues) {
    auto r = at(ExecPhase::timed);
    r.shape_ok = false;
    r.outputs_match = true;
    EXPECT_EQ(classify(r, true), ExecState::output_mismatch);
}

TEST(Classify, EvaluatorVerdictIsAuthoritative) {
    auto r = at(ExecPhase::timed);
    r.outputs_match = false;
    EXPECT_EQ(classify(r, true), ExecState::output_mismatch);
    r.outputs_match = true;
    r.max_abs_dev = 10;
    r.max_rel_dev = 10;
    EXPECT_EQ(classify(r, true), ExecState::correct);
}

TEST(Classify, NanDeviationIsMismatch) {
    auto r = at(ExecPhase::timed);
    r.max_abs_dev = std::numeric_limits<double>::quiet_NaN();
    r.max_rel_dev = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(classify(r, true), ExecState::output_mismatch);
}

TEST(Classify, TotalityFuzzAgainstPrecedenceOracle) {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> phase(0, 3), coin(0, 1), tri(0, 2);
    std::uniform_real_distribution<double> dev(0.0, 0.03);
    for (int i = 0; i < 20000; ++i) {
        RawExecResult r = at(static_cast<ExecPhase>(phase(rng)));
        r.timed_out = coin(rng) && coin(rng);
        if (coin(rng) && coin(rng)) r.signal = 11;
        if (int s = tri(rng); s < 2) r.shape_ok = s == 1;
        if (int m = tri(rng); m < 2) r.outputs_match = m == 1;
        r.max_abs_dev = dev(rng);
        r.max_rel_dev = dev(rng);
        const bool had_code = tri(rng) != 0;
        const CorrectnessConfig cfg{5, 1e-2, 1e-2, 0};
        const auto got = classify(r, had_code, cfg);
        ASSERT_EQ(got, oracle_state(r, had_code, cfg)) << "case " << i;
    }
}

TEST(ExecStateNames, RoundTrip) {
    for (auto s : {ExecState::generation_failure, ExecState::compilation_failure, ExecState::runtime_error,
                   ExecState::output_mismatch, ExecState::correct})
        EXPECT_EQ(exec_state_from_string(to_string(s)), s);
    EXPECT_THROW(exec_state_from_string("fast"), ParseError);
    EXPECT_THROW(exec_phase_from_string("link"), ParseError);
}

TEST(CompareOutputs, SelfComparisonHasZeroDeviation) {
    const TrialOutputs a{t({2, 2}, {1, 2, 3, 4})};
    const auto r = compare_outputs(a, a, {});
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.shape_ok);
    EXPECT_EQ(r.max_abs_dev, 0.0);
    EXPECT_EQ(r.max_rel_dev, 0.0);
}

TEST(CompareOutputs, ShapeMismatchFails) {
    const auto r = compare_outputs(TrialOutputs{t({2, 2}, {1, 2, 3, 4})}, TrialOutputs{t({4}, {1, 2, 3, 4})}, {});
    EXPECT_FALSE(r.pass);
    EXPECT_FALSE(r.shape_ok);
}

TEST(CompareOutputs, ArityMismatchFails) {
    const auto r = compare_outputs(TrialOutputs{t({1}, {1}), t({1}, {1})}, TrialOutputs{t({1}, {1})}, {});
    EXPECT_FALSE(r.pass);
    EXPECT_FALSE(r.shape_ok);
}

TEST(CompareOutputs, NanFails) {
    const auto r = compare_outputs(TrialOutputs{t({1}, {std::nan("")})}, TrialOutputs{t({1}, {1.0})}, {});
    EXPECT_FALSE(r.pass);
}

TEST(CompareOutputs, BoundaryIsInclusive) {
    // |a - b| = atol + rtol * |b| exactly (binary-exact values).
    const CorrectnessConfig cfg{1, 0.25, 0.5, 0};
    EXPECT_TRUE(compare_outputs(TrialOutputs{t({1}, {3.25})}, TrialOutputs{t({1}, {2.0})}, cfg).pass);
    EXPECT_FALSE(compare_outputs(TrialOutputs{t({1}, {3.5})}, TrialOutputs{t({1}, {2.0})}, cfg).pass);
}

TEST(CompareOutputs, ReferenceIsTheRelativeDenominator) {
    // With rtol > 0 the rule is asymmetric: b is the reference.
    const CorrectnessConfig cfg{1, 0.0, 0.5, 0};
    EXPECT_TRUE(compare_outputs(TrialOutputs{t({1}, {1.0})}, TrialOutputs{t({1}, {2.0})}, cfg).pass);
    EXPECT_FALSE(compare_outputs(TrialOutputs{t({1}, {2.0})}, TrialOutputs{t({1}, {1.0})}, cfg).pass);
}

TEST(CompareOutputs, SymmetricWhenAbsoluteOnly) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> v(-2, 2);
    const CorrectnessConfig cfg{1, 0.3, 0.0, 0};
    for (int i = 0; i < 1000; ++i) {
        const TrialOutputs a{t({3}, {v(rng), v(rng), v(rng)})};
        const TrialOutputs b{t({3}, {v(rng), v(rng), v(rng)})};
        ASSERT_EQ(compare_outputs(a, b, cfg).pass, compare_outputs(b, a, cfg).pass);
    }
}

TEST(CompareOutputs, MatchesBruteForceOracle) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> v(-1, 1), noise(-0.02, 0.02);
    const CorrectnessConfig cfg{1, 1e-2, 1e-2, 0};
    for (int i = 0; i < 2000; ++i) {
        Tensor ref = t({8}, {}), cand = t({8}, {});
        bool expect = true;
        double max_abs = 0;
        for (int j = 0; j < 8; ++j) {
            const double b = v(rng), a = b + noise(rng);
            ref.values.push_back(b);
            cand.values.push_back(a);
            const double d = std::fabs(a - b);
            max_abs = std::max(max_abs, d);
            if (d > cfg.atol + cfg.rtol * std::fabs(b)) expect = false;
        }
        const auto r = compare_outputs(TrialOutputs{cand}, TrialOutputs{ref}, cfg);
        ASSERT_EQ(r.pass, expect);
        ASSERT_DOUBLE_EQ(r.max_abs_dev, max_abs);
    }
}

TEST(CompareOutputs, MultiTrialNeedsEveryTrial) {
    const std::vector<TrialOutputs> ref{{t({1}, {1.0})}, {t({1}, {2.0})}};
    const std::vector<TrialOutputs> good{{t({1}, {1.0})}, {t({1}, {2.0})}};
    const std::vector<TrialOutputs> bad{{t({1}, {1.0})}, {t({1}, {3.0})}};
    EXPECT_TRUE(compare_outputs(std::span<const TrialOutputs>(good), std::span<const TrialOutputs>(ref), {}).pass);
    const auto r = compare_outputs(std::span<const TrialOutputs>(bad), std::span<const TrialOutputs>(ref), {});
    EXPECT_FALSE(r.pass);
    EXPECT_DOUBLE_EQ(r.max_abs_dev, 1.0);
}

TEST(ReduceTiming, MatchesPythonStatisticsOnFixture) {
    const auto doc = nlohmann::json::parse(read_file(test::fixture_dir() / "timing_100.json"));
    const auto samples = doc["samples_ns"].get<std::vector<double>>();
    ASSERT_EQ(samples.size(), 100u);
    const auto s = reduce_timing(samples);
    EXPECT_NEAR(s.mean_ns, doc["mean_ns"].get<double>(), 1e-6);
    EXPECT_NEAR(s.median_ns, doc["median_ns"].get<double>(), 1e-6);
    EXPECT_NEAR(s.std_ns, doc["std_ns"].get<double>(), 1e-6);
}

TEST(ReduceTiming, SingleSampleHasZeroStd) {
    const std::vector<double> one{42.0};
    const auto s = reduce_timing(one);
    EXPECT_EQ(s.mean_ns, 42.0);
    EXPECT_EQ(s.median_ns, 42.0);
    EXPECT_EQ(s.std_ns, 0.0);
}

TEST(ReduceTiming, EmptyIsPreconditionError) {
    EXPECT_THROW(reduce_timing(std::vector<double>{}), PreconditionError);
}

TEST(ReduceTiming, PermutationInvariantBitForBit) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> v(1e5, 2e6);
    std::vector<double> xs(100);
    for (auto& x : xs) x = v(rng);
    const auto base = reduce_timing(xs);
    for (int i = 0; i < 50; ++i) {
        std::shuffle(xs.begin(), xs.end(), rng);
        const auto s = reduce_timing(xs);
        ASSERT_EQ(s.mean_ns, base.mean_ns);
        ASSERT_EQ(s.median_ns, base.median_ns);
        ASSERT_EQ(s.std_ns, base.std_ns);
    }
}

TEST(TrialSeed, StableAndDistinct) {
    EXPECT_EQ(trial_seed(1, "level1/problem1", 0), trial_seed(1, "level1/problem1", 0));
    EXPECT_NE(trial_seed(1, "level1/problem1", 0), trial_seed(1, "level1/problem1", 1));
    EXPECT_NE(trial_seed(1, "level1/problem1", 0), trial_seed(2, "level1/problem1", 0));
}
