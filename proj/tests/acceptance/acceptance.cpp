// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include "kforge/metrics.hpp"
#include "kforge/profiling.hpp"
#include "loop_harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace kforge;
using namespace kforge::test;
using nlohmann::json;
using S = ExecState;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

// Tolerances
constexpr double kFastPTol = 1e-12;     // oracle comparison (exact rational arithmetic in doubles)
constexpr double kPublishedRatioTol = 5e-4;  // three-decimal published fraction
constexpr double kPublishedSpeedupTol = 1e-2;
constexpr double kCsvTotalTolNs = 1000.0;
constexpr double kBestSpeedupTol = 1e-9;
constexpr double kFastPBudgetSeconds = 5.0;

Outcome fast_p_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260101);
    std::uniform_int_distribution<int> size(1, 120), kind(0, 9);
    std::uniform_real_distribution<double> sp(0.0, 3.0);
    const std::vector<double> ps{0.0, 0.5, 1.0, 1.5, 2.0};
    for (int f = 0; f < 1000; ++f) {
        const auto n = static_cast<std::size_t>(size(rng));
        std::vector<OutcomeRow> rows;
        for (std::size_t i = 0; i < n; ++i) {
            const int k = kind(rng);
            if (k == 0) continue;  // not attempted
            const bool correct = k >= 4;
            std::optional<double> s;
            if (correct) s = k == 9 ? std::vector<double>{0.5, 1.0, 1.5, 2.0}[i % 4] : sp(rng);  // exact ties included
            rows.push_back({"p" + std::to_string(i), 1, correct, s});
        }
        double prev = 1.0;
        for (double p : ps) {
            std::size_t hits = 0;
            for (const auto& r : rows)
                if (r.correct && r.speedup.value() > p) ++hits;
            const double expect = static_cast<double>(hits) / static_cast<double>(n);
            const auto got = fast_p(rows, p, n);
            if (!got || std::fabs(*got - expect) > kFastPTol)
                return fail(fmt::format("fixture {} p={} got {} expected {}", f, p, got.value_or(-1), expect));
            if (*got > prev) return fail(fmt::format("fixture {} not monotone at p={}", f, p));
            prev = *got;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= kFastPBudgetSeconds) return fail(fmt::format("took {:.2f} s", secs));
    return {true, fmt::format("1000 fixtures x 5 thresholds, monotone, {:.3f} s", secs)};
}

Outcome published_numbers() {
    // 91 level-1 problems on the reference-guided Metal configuration; 11 faster than the baseline.
    std::vector<OutcomeRow> rows;
    for (int i = 0; i < 91; ++i) {
        const bool fast = i < 11;
        const bool correct = i < 40;
        rows.push_back({"level1/p" + std::to_string(i), 1, correct,
                        correct ? std::optional<double>(fast ? 1.25 : 0.8) : std::nullopt});
    }
    const double f1 = fast_p(rows, 1.0, 91).value();
    if (std::fabs(f1 - 0.121) > kPublishedRatioTol) return fail(fmt::format("fast_1.0 = {}", f1));
    const double squeeze = speedup(1.04, 0.474);
    const double mobilenet = speedup(2.78, 1.8);
    if (std::fabs(squeeze - 2.19) > kPublishedSpeedupTol) return fail(fmt::format("1.04/0.474 = {}", squeeze));
    if (std::fabs(mobilenet - 1.54) > kPublishedSpeedupTol) return fail(fmt::format("2.78/1.8 = {}", mobilenet));
    return {true, fmt::format("fast_1.0={:.4f} speedups {:.4f} {:.4f}", f1, squeeze, mobilenet)};
}

Outcome state_machine() {
    const std::vector<ScriptStep> script{
        {S::compilation_failure}, {S::compilation_failure}, {S::correct, 1.3}, {S::output_mismatch}, {S::correct, 1.6}};
    LoopHarness h;
    h.cfg.num_iterations = 5;
    const auto p = make_problem("level1/problem1");
    add_problem_script(h.scripts, p.id, script);
    const auto out = h.run(p);
    const auto expect = replay(script, 5);
    if (out.records.size() != 5) return fail(fmt::format("{} records", out.records.size()));
    std::string phases;
    for (std::size_t k = 0; k < 5; ++k) {
        phases += out.records[k].phase == LoopPhase::functional ? 'F' : 'O';
        if (out.records[k].phase != expect.phases[k]) return fail("phase mismatch at iteration " + std::to_string(k + 1));
        if (out.records[k].exec_state != script[k].state) return fail("state mismatch at iteration " + std::to_string(k + 1));
    }
    if (phases != "FFFOO") return fail("phases " + phases);
    if (!out.best || std::fabs(out.best->speedup - 1.6) > kBestSpeedupTol || out.best->iteration != expect.best->second)
        return fail("best candidate differs from replay");
    return {true, fmt::format("phases {} best {:.3f} at iteration {}", phases, out.best->speedup, out.best->iteration)};
}

Outcome fuzz_budget() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> state(0, 4), budget(1, 5), extra(0, 4);
    std::uniform_real_distribution<double> sp(0.2, 3.0);
    for (int t = 0; t < 10000; ++t) {
        LoopHarness h;
        h.cfg.num_iterations = budget(rng);
        h.cfg.strategy.use_profiling = t % 3 == 0;
        h.cfg.num_samples = t % 7 == 0 ? 2 : 1;
        std::vector<ScriptStep> steps(static_cast<std::size_t>(h.cfg.num_iterations + extra(rng)));
        for (auto& s : steps) s = {static_cast<S>(state(rng)), sp(rng)};
        const auto p = make_problem("level1/problem1");
        add_problem_script(h.scripts, p.id, steps);
        const auto out = h.run(p);
        std::map<int, int> per_sample;
        for (const auto& r : out.records) {
            if (r.iteration < 1 || r.iteration > h.cfg.num_iterations)
                return fail(fmt::format("script {} produced iteration {}", t, r.iteration));
            ++per_sample[r.sample];
        }
        for (const auto& [sample, count] : per_sample)
            if (count > h.cfg.num_iterations) return fail(fmt::format("script {} sample {} ran {} times", t, sample, count));
    }
    return {true, "10000 scripts within budget"};
}

class ConcurrencyProbe : public Executor {
public:
    RawExecResult execute(const ExecRequest& req) override {
        const int now = ++active;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(3));
        --active;
        ++calls;
        return inner.execute(req);
    }
    std::atomic<int> active{0}, peak{0}, calls{0};
    MockExecutor inner{json::object()};
};

Outcome device_leases() {
    DevicePool pool({"0", "1", "2", "3"});
    ConcurrencyProbe probe;
    auto scripts = empty_mock_scripts();
    for (int i = 0; i < 64; ++i)
        add_problem_script(scripts, "level1/problem" + std::to_string(i), {{S::correct, 1.2}});
    MockModelClient client(scripts.provider);
    const auto templates = TemplateSet::load_default();
    LoopConfig cfg;
    cfg.num_iterations = 1;
    cfg.generation_profile = resolve_profile("mock");
    cfg.generation_profile.mock_script = "<inline>";
    EvalSettings eval;
    eval.timing = {3, 0, true};
    LoopDeps deps{client, probe, pool, templates, load_one_shot(default_asset_dir(), Backend::cuda), nullptr};
    std::vector<std::thread> threads;
    std::vector<Problem> problems;
    for (int i = 0; i < 64; ++i) problems.push_back(make_problem("level1/problem" + std::to_string(i)));
    for (int i = 0; i < 64; ++i)
        threads.emplace_back([&, i] { run_problem(problems[i], cfg, eval, deps, "run-lease", {}); });
    for (auto& t : threads) t.join();
    if (probe.calls != 64) return fail(fmt::format("{} evaluations ran", probe.calls.load()));
    if (probe.peak > 4 || pool.high_water() > 4)
        return fail(fmt::format("peak {} concurrent, {} leases", probe.peak.load(), pool.high_water()));
    return {true, fmt::format("64 evaluations, peak {} concurrent, lease high-water {}", probe.peak.load(),
                              pool.high_water())};
}

Outcome classification_totality() {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> phase(0, 3), coin(0, 1), tri(0, 2);
    std::uniform_real_distribution<double> dev(0.0, 0.05);
    const CorrectnessConfig cfg{5, 1e-2, 1e-2, 0};
    std::map<S, int> seen;
    for (int i = 0; i < 100000; ++i) {
        RawExecResult r;
        r.phase_reached = static_cast<ExecPhase>(phase(rng));
        r.timed_out = coin(rng) && coin(rng);
        if (coin(rng) && coin(rng)) r.signal = 9;
        if (int s = tri(rng); s < 2) r.shape_ok = s == 1;
        if (int m = tri(rng); m < 2) r.outputs_match = m == 1;
        r.max_abs_dev = coin(rng) && coin(rng) ? std::nan("") : dev(rng);
        r.max_rel_dev = dev(rng);
        const bool had_code = tri(rng) != 0;
        const S got = classify(r, had_code, cfg);
        S expect;
        if (!had_code) expect = S::generation_failure;
        else if (r.phase_reached == ExecPhase::compile) expect = S::compilation_failure;
        else if (r.phase_reached == ExecPhase::run || r.timed_out || r.signal) expect = S::runtime_error;
        else if (r.phase_reached == ExecPhase::compare || r.shape_ok == false) expect = S::output_mismatch;
        else if (r.outputs_match) expect = *r.outputs_match ? S::correct : S::output_mismatch;
        else expect = (r.max_abs_dev <= cfg.atol || r.max_rel_dev <= cfg.rtol) ? S::correct : S::output_mismatch;
        if (got != expect) return fail(fmt::format("case {}: got {} expected {}", i, to_string(got), to_string(expect)));
        ++seen[got];
    }
    if (seen.size() != 5) return fail("not every state was reached");
    return {true, "100000 evaluations, each mapped to exactly one state"};
}

Outcome profiler_csv() {
    const auto dir = fixture_dir() / "profiling" / "nsys";
    const auto reports = parse_stats_reports(dir);
    if (!reports.warnings.empty()) return fail("warnings: " + reports.warnings.front());
    if (reports.tables.size() != 3) return fail(fmt::format("{} tables", reports.tables.size()));
    std::size_t rows = 0;
    for (const auto& [kind, table] : reports.tables) {
        for (const auto& r : table) {
            ++rows;
            if (std::fabs(r.total_time_ns - r.avg_ns * static_cast<double>(r.calls)) > kCsvTotalTolNs)
                return fail("total/avg mismatch for " + r.name);
        }
    }
    const auto& kern = reports.tables.at(ReportKind::gpu_kernel_summary);
    auto sorted = kern;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.total_time_ns != b.total_time_ns ? a.total_time_ns > b.total_time_ns : a.name < b.name;
    });
    const auto bundle = build_bundle(reports, {}, {20, 3}, Backend::cuda);
    for (const auto& item : bundle.items) {
        if (!item.title.starts_with("gpu_kernel_summary")) continue;
        StatsReports back;
        parse_stats_csv(item.payload, "kern.csv", back);
        const auto& kept = back.tables.at(ReportKind::gpu_kernel_summary);
        if (kept.size() != 20) return fail(fmt::format("bundle kept {} kernel rows", kept.size()));
        for (std::size_t i = 0; i < 20; ++i)
            if (kept[i].name != sorted[i].name) return fail("bundle row order differs at " + std::to_string(i));
        return {true, fmt::format("{} rows parsed, kernel table trimmed {} -> 20", rows, kern.size())};
    }
    return fail("kernel table missing from bundle");
}

std::string strip_timestamps(const std::string& jsonl) {
    std::string out;
    std::istringstream in(jsonl);
    for (std::string line; std::getline(in, line);) {
        auto j = json::parse(line);
        for (auto f : kTimestampFields) j.erase(std::string(f));
        out += j.dump() + "\n";
    }
    return out;
}

Outcome determinism() {
    const auto set = load_problem_set(problem_set_dir(), Backend::cuda);
    TempDir root("determinism");
    std::vector<fs::path> dirs;
    std::string run_id;
    for (const char* name : {"a", "b"}) {
        LoopHarness h;
        h.scripts = random_mock_scripts(set, 5, 7);
        h.cfg.strategy.use_profiling = true;
        h.devices = {"0", "1", "2", "3"};
        for (auto& rec : h.scripts.executor["records"]) rec["outcome"]["profile_artifacts"] = {"nsys"};
        auto deps = h.deps();
        SuiteOptions opts;
        opts.runs_dir = root / name;
        opts.parallelism = 4;
        opts.identity = {{"fixture", "determinism"}};
        const auto r = run_suite(set, h.cfg, h.eval, deps, opts);
        if (!run_id.empty() && r.run_id != run_id) return fail("run ids differ");
        run_id = r.run_id;
        dirs.push_back(r.run_dir);
    }
    std::size_t compared = 0;
    for (const auto& p : set.problems) {
        const auto rel = fs::path(problem_dir_name(p.id)) / "records.jsonl";
        const auto a = read_file(dirs[0] / rel), b = read_file(dirs[1] / rel);
        if (a.empty()) return fail("no records for " + p.id);
        if (strip_timestamps(a) != strip_timestamps(b)) return fail("records differ for " + p.id);
        ++compared;
    }
    return {true, fmt::format("{} problems, records identical modulo timestamps", compared)};
}

Outcome problem_counts() {
    const auto cuda = load_problem_set(problem_set_dir(), Backend::cuda);
    const auto metal = load_problem_set(problem_set_dir(), Backend::metal);
    const std::map<int, std::size_t> want_cuda{{1, 100}, {2, 100}, {3, 50}}, want_metal{{1, 91}, {2, 79}, {3, 50}};
    if (cuda.counts_by_level != want_cuda) return fail("cuda counts differ");
    if (metal.counts_by_level != want_metal) return fail("metal counts differ");
    return {true, "cuda 100/100/50, metal 91/79/50"};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"fast_p_matches_oracle", fast_p_oracle},
        {"published_metric_values", published_numbers},
        {"loop_state_machine_script", state_machine},
        {"fuzzed_scripts_respect_budget", fuzz_budget},
        {"device_pool_exclusive_leases", device_leases},
        {"classification_is_total", classification_totality},
        {"profiler_csv_ingest_and_bundle", profiler_csv},
        {"records_deterministic", determinism},
        {"bundled_problem_counts", problem_counts},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " - " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
