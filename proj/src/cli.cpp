#include "kforge/cli.hpp"

#include "kforge/executor.hpp"
#include "kforge/fixtures.hpp"
#include "kforge/metrics.hpp"
#include "kforge/orchestrator.hpp"
#include "kforge/problem_store.hpp"
#include "kforge/profiling.hpp"
#include "kforge/run_config.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>

namespace kforge {

using json = nlohmann::json;

namespace {

/// Routes log output to `err` for the lifetime of the guard.
class LogScope {
public:
    explicit LogScope(std::ostream& err) : previous_(spdlog::default_logger()) {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        auto logger = std::make_shared<spdlog::logger>("kforge", sink);
        logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");
        const char* env = std::getenv("KFORGE_LOG");
        logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
        spdlog::set_default_logger(logger);
    }
    ~LogScope() { spdlog::set_default_logger(previous_); }
    LogScope(const LogScope&) = delete;
    LogScope& operator=(const LogScope&) = delete;

private:
    std::shared_ptr<spdlog::logger> previous_;
};

int report_config_error(std::ostream& err, const std::vector<std::string>& problems) {
    for (const auto& p : problems) err << "error: " << p << '\n';
    return kExitUsage;
}

ProblemSet filter_problems(const ProblemSet& set, const std::vector<std::string>& ids, const std::vector<int>& levels) {
    if (ids.empty() && levels.empty()) return set;
    const std::set<std::string> want_ids(ids.begin(), ids.end());
    const std::set<int> want_levels(levels.begin(), levels.end());
    std::vector<std::string> unknown;
    for (const auto& id : ids)
        if (!set.find(id)) unknown.push_back("unknown or excluded problem id '" + id + "'");
    if (!unknown.empty()) throw ConfigError(std::move(unknown));

    ProblemSet out;
    out.backend = set.backend;
    out.excluded = set.excluded;
    out.manifest_size = set.manifest_size;
    out.counts_by_level = {{1, 0}, {2, 0}, {3, 0}};
    for (const auto& p : set.problems) {
        if (!want_ids.empty() && !want_ids.count(p.id)) continue;
        if (!want_levels.empty() && !want_levels.count(p.level)) continue;
        out.problems.push_back(p);
        ++out.counts_by_level[p.level];
    }
    return out;
}

std::vector<std::string> split_command(const std::string& cmd) {
    std::vector<std::string> out;
    for (auto& part : split(cmd, ' '))
        if (!part.empty()) out.push_back(part);
    return out;
}

struct RunFlags {
    RunConfig values;
    std::string config_path;
    std::string resume;
    std::string shim_command;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> bindings;
};

void add_run_options(CLI::App& cmd, RunFlags& f) {
    auto& v = f.values;
    auto bind = [&](CLI::Option* opt, std::function<void(RunConfig&)> apply) {
        f.bindings.emplace_back(opt, std::move(apply));
    };
    cmd.add_option("--config", f.config_path, "Run config JSON file; flags override its values");
    cmd.add_option("--resume", f.resume, "Resume the run with this id (its config.json is the base config)");
    bind(cmd.add_option("--backend", v.backend, "Target backend: cuda or metal"),
         [&](RunConfig& c) { c.backend = v.backend; });
    bind(cmd.add_option("--problems", v.problems, "Problem-set directory holding manifest.json"),
         [&](RunConfig& c) { c.problems = v.problems; });
    bind(cmd.add_option("--problem-ids", v.problem_ids, "Only run these problem ids")->delimiter(','),
         [&](RunConfig& c) { c.problem_ids = v.problem_ids; });
    bind(cmd.add_option("--levels", v.levels, "Only run these levels (1,2,3)")->delimiter(','),
         [&](RunConfig& c) { c.levels = v.levels; });
    bind(cmd.add_option("--mode", v.mode, "single-shot or iterative"), [&](RunConfig& c) { c.mode = v.mode; });
    bind(cmd.add_option("--iterations", v.iterations, "Generation budget per problem (default 5)"),
         [&](RunConfig& c) { c.iterations = v.iterations; });
    bind(cmd.add_flag("--use-reference", v.use_reference, "Inject a reference implementation from --references"),
         [&](RunConfig& c) { c.use_reference = v.use_reference; });
    bind(cmd.add_flag("--use-profiling", v.use_profiling, "Profile correct candidates and ask the analysis model"),
         [&](RunConfig& c) { c.use_profiling = v.use_profiling; });
    bind(cmd.add_option("--samples", v.samples, "Independent sample chains per problem (default 1)"),
         [&](RunConfig& c) { c.samples = v.samples; });
    bind(cmd.add_option("--model", v.model, "Generation model profile name or JSON file"),
         [&](RunConfig& c) { c.model = v.model; });
    bind(cmd.add_option("--analysis-model", v.analysis_model, "Analysis model profile (default: --model)"),
         [&](RunConfig& c) { c.analysis_model = v.analysis_model; });
    bind(cmd.add_option("--seed", v.seed, "Run seed"), [&](RunConfig& c) { c.seed = v.seed; });
    bind(cmd.add_flag("--reuse-profile", v.reuse_profile, "Profile only the first correct candidate"),
         [&](RunConfig& c) { c.reuse_profile = v.reuse_profile; });
    bind(cmd.add_option("--max-rows", v.max_rows, "Rows kept per profiler table (default 20)"),
         [&](RunConfig& c) { c.max_rows = v.max_rows; });
    bind(cmd.add_option("--max-images", v.max_images, "Screenshots kept per bundle (default 3)"),
         [&](RunConfig& c) { c.max_images = v.max_images; });
    bind(cmd.add_option("--feedback-tokens", v.feedback_budget_tokens, "Token budget for error feedback"),
         [&](RunConfig& c) { c.feedback_budget_tokens = v.feedback_budget_tokens; });
    bind(cmd.add_option("--task-instructions", v.task_instructions, "Extra instructions appended to prompts"),
         [&](RunConfig& c) { c.task_instructions = v.task_instructions; });
    bind(cmd.add_option("--baseline", v.baseline, "Baseline: eager or graph-compiled (cuda only)"),
         [&](RunConfig& c) { c.baseline = v.baseline; });
    bind(cmd.add_option("--timed-runs", v.timed_runs, "Timed runs per measurement (default 100)"),
         [&](RunConfig& c) { c.timed_runs = v.timed_runs; });
    bind(cmd.add_option("--warmup-runs", v.warmup_runs, "Warmup runs per measurement (default 10)"),
         [&](RunConfig& c) { c.warmup_runs = v.warmup_runs; });
    bind(cmd.add_option("--trials", v.trials, "Randomized correctness trials (default 5)"),
         [&](RunConfig& c) { c.trials = v.trials; });
    bind(cmd.add_option("--atol", v.atol, "Absolute tolerance (default 1e-2)"), [&](RunConfig& c) { c.atol = v.atol; });
    bind(cmd.add_option("--rtol", v.rtol, "Relative tolerance (default 1e-2)"), [&](RunConfig& c) { c.rtol = v.rtol; });
    bind(cmd.add_option("--timeout", v.timeout_s, "Per-evaluation timeout in seconds (default 600)"),
         [&](RunConfig& c) { c.timeout_s = v.timeout_s; });
    bind(cmd.add_flag("--no-baseline-cache{false}", v.baseline_cache, "Re-measure the baseline every evaluation"),
         [&](RunConfig& c) { c.baseline_cache = v.baseline_cache; });
    bind(cmd.add_option("--references", v.references, "Reference corpus directory (index.json)"),
         [&](RunConfig& c) { c.references = v.references; });
    bind(cmd.add_option("--templates", v.templates, "Prompt template directory"),
         [&](RunConfig& c) { c.templates = v.templates; });
    bind(cmd.add_option("--screenshots", v.screenshots, "Pre-captured profiler screenshots, one subdir per problem"),
         [&](RunConfig& c) { c.screenshots = v.screenshots; });
    bind(cmd.add_option("--executor", v.executor, "Evaluator: mock or shim"),
         [&](RunConfig& c) { c.executor = v.executor; });
    bind(cmd.add_option("--shim", f.shim_command, "Evaluation shim command line"),
         [&](RunConfig& c) { c.shim = split_command(f.shim_command); });
    bind(cmd.add_option("--exec-script", v.exec_script, "Mock executor script (JSON)"),
         [&](RunConfig& c) { c.exec_script = v.exec_script; });
    bind(cmd.add_option("--mock-script", v.mock_script, "Mock provider script (JSON)"),
         [&](RunConfig& c) { c.mock_script = v.mock_script; });
    bind(cmd.add_option("--devices", v.devices, "Device ids, comma separated (default 0)")->delimiter(','),
         [&](RunConfig& c) { c.devices = v.devices; });
    bind(cmd.add_option("--parallelism", v.parallelism, "Problems evaluated concurrently (<= devices)"),
         [&](RunConfig& c) { c.parallelism = v.parallelism; });
    bind(cmd.add_option("--runs-dir", v.runs_dir, "Directory holding run directories (default runs)"),
         [&](RunConfig& c) { c.runs_dir = v.runs_dir; });
}

int cmd_run(RunFlags& f, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    if (!f.config_path.empty()) {
        cfg = load_run_config(f.config_path);
    } else if (!f.resume.empty()) {
        RunConfig probe;
        for (auto& [opt, apply] : f.bindings)
            if (opt->count() > 0) apply(probe);
        const auto path = fs::path(probe.runs_dir) / f.resume / "config.json";
        if (!fs::exists(path)) return report_config_error(err, {"no run to resume at " + path.parent_path().string()});
        cfg = load_run_config(path);
    }
    for (auto& [opt, apply] : f.bindings)
        if (opt->count() > 0) apply(cfg);

    auto problems = validate_run_config(cfg);
    if (cfg.use_reference && cfg.references.empty()) problems.push_back("--use-reference requires --references");
    if (!problems.empty()) return report_config_error(err, problems);
    const auto resolved = resolve_run_config(cfg);

    const auto set = filter_problems(load_problem_set(cfg.problems, resolved.backend), cfg.problem_ids, cfg.levels);
    const auto templates = cfg.templates.empty() ? TemplateSet::load_default() : TemplateSet::load(cfg.templates);
    const auto one_shot = load_one_shot(default_asset_dir(), resolved.backend);
    std::map<std::string, ReferenceImpl> references;
    if (cfg.use_reference) references = select_references(load_reference_corpus(cfg.references));

    std::shared_ptr<Executor> inner;
    if (cfg.executor == "shim")
        inner = std::make_shared<SubprocessExecutor>(cfg.shim);
    else
        inner = MockExecutor::from_file(cfg.exec_script);
    CachingExecutor executor(inner, !cfg.baseline_cache);

    std::shared_ptr<ModelClient> mock;
    if (!cfg.mock_script.empty()) mock = MockModelClient::from_file(cfg.mock_script);
    auto http = std::make_shared<HttpModelClient>(std::make_shared<HttplibTransport>());
    RoutingModelClient client(http, mock);
    DevicePool pool(cfg.devices);

    LoopDeps deps{client, executor, pool, templates, one_shot, &references};
    SuiteOptions opts;
    opts.runs_dir = cfg.runs_dir;
    opts.parallelism = cfg.parallelism;
    if (!f.resume.empty()) opts.resume_id = f.resume;
    opts.identity = identity_json(cfg);
    opts.config = cfg;

    const auto result = run_suite(set, resolved.loop, resolved.eval, deps, opts);
    out << "run " << result.run_id << " -> " << result.run_dir.string() << '\n';
    out << fmt::format("executed {} skipped {} aborted {}\n", result.executed, result.skipped, result.aborted.size());
    out << render_table(aggregate(result.run_dir, kDefaultThresholds));
    for (const auto& id : result.aborted) err << "aborted: " << id << '\n';
    return result.aborted.empty() ? kExitOk : kExitInfrastructure;
}

struct ReportFlags {
    std::string run;
    std::vector<double> thresholds = kDefaultThresholds;
    std::string format = "table";
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
    const auto report = aggregate(f.run, f.thresholds);
    if (f.format == "json")
        out << render_json(report) << '\n';
    else if (f.format == "csv")
        out << render_csv(report);
    else
        out << render_table(report);
    return kExitOk;
}

struct ProblemsFlags {
    std::string dir;
    std::vector<std::string> backends{"cuda", "metal"};
    std::string format = "table";
    bool list = false;
};

int cmd_problems(const ProblemsFlags& f, std::ostream& out, std::ostream& err) {
    json doc = json::array();
    std::vector<std::string> bad;
    for (const auto& b : f.backends)
        if (!parse_backend(b)) bad.push_back("unknown backend '" + b + "'");
    if (!bad.empty()) return report_config_error(err, bad);
    if (f.format == "table") out << fmt::format("{:<8}{:>8}{:>8}{:>8}{:>8}{:>10}\n", "backend", "level1", "level2",
                                                "level3", "total", "excluded");
    for (const auto& b : f.backends) {
        const auto set = load_problem_set(f.dir, backend_from_string(b));
        const auto& c = set.counts_by_level;
        if (f.format == "table") {
            out << fmt::format("{:<8}{:>8}{:>8}{:>8}{:>8}{:>10}\n", to_string(set.backend), c.at(1), c.at(2), c.at(3),
                               set.problems.size(), set.excluded.size());
        }
        json ids = json::array();
        for (const auto& p : set.problems) ids.push_back(p.id);
        doc.push_back({{"backend", to_string(set.backend)},
                       {"counts_by_level", {{"1", c.at(1)}, {"2", c.at(2)}, {"3", c.at(3)}}},
                       {"total", set.problems.size()},
                       {"excluded", set.excluded},
                       {"problems", ids}});
        if (f.list && f.format == "table")
            for (const auto& p : set.problems) out << "  " << p.id << "  " << p.name << '\n';
    }
    if (f.format == "json") out << doc.dump(2) << '\n';
    return kExitOk;
}

struct ScriptFlags {
    std::string problems;
    std::string backend = "cuda";
    int iterations = 5;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_mock_scripts(const ScriptFlags& f, std::ostream& out, std::ostream& err) {
    const auto backend = parse_backend(f.backend);
    if (!backend) return report_config_error(err, {"unknown backend '" + f.backend + "'"});
    const auto set = load_problem_set(f.problems, *backend);
    auto scripts = random_mock_scripts(set, f.iterations, f.seed);
    fs::create_directories(fs::path(f.out_dir) / "profile");
    const std::vector<KernelStatRow> kernels{
        {"candidate_main_kernel(const float *, float *, int)", 6.1e6, 100, 61000.0, 71.0},
        {"elementwise_epilogue_kernel", 1.8e6, 100, 18000.0, 21.0},
        {"reduce_partial_sums_kernel", 0.7e6, 100, 7000.0, 8.0}};
    write_file(fs::path(f.out_dir) / "profile" / "report_cuda_gpu_kern_sum.csv",
               write_stats_csv(ReportKind::gpu_kernel_summary, kernels));
    const json artifacts = json::array({"profile"});
    scripts.executor["default"]["profile_artifacts"] = artifacts;
    for (auto& rec : scripts.executor["records"])
        if (rec["outcome"].value("phase", "") == "timed") rec["outcome"]["profile_artifacts"] = artifacts;
    write_file(fs::path(f.out_dir) / "provider.json", scripts.provider.dump(2) + "\n");
    write_file(fs::path(f.out_dir) / "executor.json", scripts.executor.dump(2) + "\n");
    out << "wrote " << (fs::path(f.out_dir) / "provider.json").string() << " and "
        << (fs::path(f.out_dir) / "executor.json").string() << '\n';
    return kExitOk;
}

struct SelfTestFlags {
    std::string shim;
    int timed_runs = 100;
    std::int64_t timeout_s = 600;
};

int cmd_shim_selftest(const SelfTestFlags& f, std::ostream& out, std::ostream& err) {
    auto argv = split_command(f.shim);
    if (argv.empty()) return report_config_error(err, {"--shim is required"});
    const auto dir = fs::temp_directory_path() / fmt::format("kforge-selftest-{}", sha256_hex(f.shim).substr(0, 8));
    fs::create_directories(dir);
    const auto result_path = dir / "result.json";
    fs::remove(result_path);
    argv.insert(argv.end(), {"--self-test", "--out", result_path.string()});
    const auto proc = run_process(argv, {}, std::chrono::seconds(f.timeout_s), dir);
    if (proc.timed_out || proc.exit_code.value_or(-1) != 0 || !fs::exists(result_path)) {
        err << "shim self-test failed to produce a result document\n" << tail(proc.stderr_text, 2000) << '\n';
        return kExitInfrastructure;
    }
    ExecRequest req;
    req.timing.timed_runs = f.timed_runs;
    const auto raw = parse_shim_result(json::parse(read_file(result_path)), req);
    const auto state = classify(raw, true, req.correctness);
    out << fmt::format("phase={} state={} max_abs_dev={} samples={}\n", to_string(raw.phase_reached), to_string(state),
                       raw.max_abs_dev, raw.candidate_samples_ns.size());
    const bool ok = raw.phase_reached == ExecPhase::timed && raw.max_abs_dev == 0.0;
    return ok ? kExitOk : kExitInfrastructure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    LogScope log_scope(err);
    CLI::App app{"kforge: iterative kernel synthesis with a generation agent and a performance-analysis agent",
                 "kforge"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run the synthesis loop over a problem set");
    add_run_options(*run, run_flags);

    ReportFlags report_flags;
    auto* report = app.add_subcommand("report", "Aggregate a run directory into fast_p metrics");
    report->add_option("--run", report_flags.run, "Run directory")->required();
    report->add_option("--thresholds", report_flags.thresholds, "Speedup thresholds p (comma separated)")
        ->delimiter(',');
    report->add_option("--format", report_flags.format, "json, table or csv")
        ->check(CLI::IsMember({"json", "table", "csv"}));

    ProblemsFlags problems_flags;
    auto* problems = app.add_subcommand("problems", "List a problem set and its per-level counts");
    problems->add_option("--problems", problems_flags.dir, "Problem-set directory")->required();
    problems->add_option("--backend", problems_flags.backends, "Backends to show (default cuda,metal)")
        ->delimiter(',');
    problems->add_option("--format", problems_flags.format, "json or table")->check(CLI::IsMember({"json", "table"}));
    problems->add_flag("--list", problems_flags.list, "Also list problem ids");

    auto* fixtures = app.add_subcommand("fixtures", "Fixture utilities");
    fixtures->require_subcommand(1);
    ScriptFlags script_flags;
    auto* scripts = fixtures->add_subcommand("mock-scripts", "Write seeded mock provider/executor scripts");
    scripts->add_option("--problems", script_flags.problems, "Problem-set directory")->required();
    scripts->add_option("--backend", script_flags.backend, "cuda or metal");
    scripts->add_option("--iterations", script_flags.iterations, "Scripted iterations per problem");
    scripts->add_option("--seed", script_flags.seed, "Random seed");
    scripts->add_option("--out", script_flags.out_dir, "Output directory")->required();
    SelfTestFlags selftest_flags;
    auto* selftest = fixtures->add_subcommand("shim-selftest", "Invoke the evaluation shim's self-test");
    selftest->add_option("--shim", selftest_flags.shim, "Shim command line")->required();
    selftest->add_option("--timed-runs", selftest_flags.timed_runs, "Expected timed samples");
    selftest->add_option("--timeout", selftest_flags.timeout_s, "Timeout in seconds");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags, out, err);
        if (report->parsed()) return cmd_report(report_flags, out);
        if (problems->parsed()) return cmd_problems(problems_flags, out, err);
        if (scripts->parsed()) return cmd_mock_scripts(script_flags, out, err);
        if (selftest->parsed()) return cmd_shim_selftest(selftest_flags, out, err);
    } catch (const ConfigError& e) {
        return report_config_error(err, e.problems());
    } catch (const InfrastructureError& e) {
        err << "infrastructure error: " << e.what() << '\n';
        return kExitInfrastructure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace kforge
