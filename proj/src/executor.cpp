#include "kforge/executor.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

extern char** environ;

namespace kforge {

using json = nlohmann::json;

std::string_view to_string(BaselineKind k) noexcept {
    return k == BaselineKind::eager ? "eager" : "graph_compiled";
}

BaselineKind baseline_kind_from_string(std::string_view s) {
    if (s == "eager") return BaselineKind::eager;
    if (s == "graph_compiled" || s == "graph-compiled") return BaselineKind::graph_compiled;
    throw ParseError("baseline_kind", "unknown baseline kind '" + std::string(s) + "'");
}

std::string tail(std::string_view text, std::size_t max_chars) {
    if (text.size() <= max_chars) return std::string(text);
    return "..." + std::string(text.substr(text.size() - max_chars));
}

std::string ExecRequest::fingerprint() const {
    json j{{"problem_id", problem.id},
           {"problem_source", sha256_hex(problem.reference_source)},
           {"candidate", sha256_hex(candidate_source)},
           {"backend", to_string(backend)},
           {"baseline_kind", to_string(baseline_kind)},
           {"timing", {timing.timed_runs, timing.warmup_runs, timing.reset_compile_context}},
           {"correctness", {correctness.trials, correctness.atol, correctness.rtol, correctness.seed}},
           {"profiling", profiling == ProfilingMode::capture},
           {"measure_baseline", measure_baseline}};
    return sha256_hex(j.dump());
}

std::vector<std::string> validate_request(const ExecRequest& req) {
    std::vector<std::string> problems;
    if (req.baseline_kind == BaselineKind::graph_compiled && req.backend != Backend::cuda)
        problems.push_back("graph_compiled baseline is only supported on cuda");
    if (req.timing.timed_runs < 1) problems.push_back("timed_runs must be >= 1");
    if (req.timing.warmup_runs < 0) problems.push_back("warmup_runs must be >= 0");
    if (req.correctness.trials < 1) problems.push_back("trials must be >= 1");
    if (req.correctness.atol < 0 || req.correctness.rtol < 0) problems.push_back("atol and rtol must be >= 0");
    if (req.device.empty()) problems.push_back("no device leased");
    if (req.timeout.count() <= 0) problems.push_back("timeout must be positive");
    return problems;
}

// ---------------------------------------------------------------------------
// Mock

MockExecutor::MockExecutor(json script, fs::path base_dir) : script_(std::move(script)), base_dir_(std::move(base_dir)) {}

std::shared_ptr<MockExecutor> MockExecutor::from_file(const fs::path& path) {
    try {
        return std::make_shared<MockExecutor>(json::parse(read_file(path)), fs::absolute(path).parent_path());
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), e.what());
    }
}

RawExecResult MockExecutor::execute(const ExecRequest& req) {
    if (auto problems = validate_request(req); !problems.empty()) throw ConfigError(problems);

    const json* outcome = nullptr;
    const auto digest = sha256_hex(req.candidate_source);
    static const json kNoRecords = json::array();
    const json& records = script_.contains("records") ? script_.at("records") : kNoRecords;
    for (const auto& rec : records) {
        const auto& m = rec.value("match", json::object());
        bool ok = true;
        if (m.contains("candidate_contains"))
            ok = ok && req.candidate_source.find(m["candidate_contains"].get<std::string>()) != std::string::npos;
        if (m.contains("candidate_digest")) ok = ok && m["candidate_digest"] == digest;
        if (m.contains("problem_id")) ok = ok && m["problem_id"] == req.problem.id;
        if (ok) {
            outcome = &rec.at("outcome");
            break;
        }
    }
    static const json kDefault = json{{"phase", "timed"}, {"cand_mean_ms", 1.0}, {"base_mean_ms", 1.0}};
    if (!outcome) outcome = script_.contains("default") ? &script_.at("default") : &kDefault;
    const json& o = *outcome;

    if (o.contains("infrastructure_error"))
        throw InfrastructureError(o["infrastructure_error"].get<std::string>());

    RawExecResult r;
    r.device_class = "mock";
    if (o.contains("sleep_ms")) {
        const auto want = std::chrono::milliseconds(o["sleep_ms"].get<std::int64_t>());
        std::this_thread::sleep_for(std::min(want, req.timeout));
        if (want > req.timeout) {
            r.phase_reached = ExecPhase::run;
            r.timed_out = true;
            r.run_transcript = fmt::format("evaluation exceeded the {} ms timeout", req.timeout.count());
            return r;
        }
    }

    std::string phase = o.value("phase", "");
    if (phase.empty()) {
        if (o.contains("compile_error")) phase = "compile";
        else if (o.contains("runtime_error") || o.contains("signal") || o.value("timed_out", false)) phase = "run";
        else if (o.value("shape_ok", true) == false || o.value("outputs_match", true) == false) phase = "compare";
        else phase = "timed";
    }
    r.phase_reached = exec_phase_from_string(phase);
    r.compile_transcript = o.value("compile_error", "");
    r.run_transcript = o.value("runtime_error", o.value("stdout", ""));
    if (o.contains("signal")) r.signal = o["signal"].get<int>();
    r.timed_out = o.value("timed_out", false);
    if (o.contains("shape_ok")) r.shape_ok = o["shape_ok"].get<bool>();
    if (o.contains("outputs_match")) r.outputs_match = o["outputs_match"].get<bool>();
    r.max_abs_dev = o.value("max_abs_dev", 0.0);
    r.max_rel_dev = o.value("max_rel_dev", 0.0);

    if (r.phase_reached == ExecPhase::timed) {
        const auto n = static_cast<std::size_t>(req.timing.timed_runs);
        auto samples = [&](const char* explicit_key, const char* mean_key) {
            if (o.contains(explicit_key)) return o[explicit_key].get<std::vector<double>>();
            return std::vector<double>(n, o.value(mean_key, 1.0) * 1e6);
        };
        r.candidate_samples_ns = samples("cand_samples_ns", "cand_mean_ms");
        if (req.measure_baseline) r.baseline_samples_ns = samples("base_samples_ns", "base_mean_ms");
    }
    if (req.profiling == ProfilingMode::capture) {
        if (o.contains("profile_artifacts")) {
            for (const auto& p : o["profile_artifacts"]) {
                fs::path path = p.get<std::string>();
                r.profile_artifact_paths.push_back((path.is_absolute() ? path : base_dir_ / path).string());
            }
        } else {
            r.profiling_unavailable = true;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Subprocess

ProcessOutcome run_process(const std::vector<std::string>& argv, const std::vector<std::string>& extra_env,
                           std::chrono::milliseconds timeout, const fs::path& capture_dir) {
    if (argv.empty()) throw InfrastructureError("empty command");
    fs::create_directories(capture_dir);
    const auto out_path = capture_dir / "shim.stdout";
    const auto err_path = capture_dir / "shim.stderr";

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::vector<std::string> env_store;
    for (char** e = environ; e && *e; ++e) env_store.emplace_back(*e);
    for (const auto& kv : extra_env) env_store.push_back(kv);
    std::vector<char*> envp;
    for (auto& e : env_store) envp.push_back(e.data());
    envp.push_back(nullptr);
    std::vector<std::string> args = argv;
    std::vector<char*> argp;
    for (auto& a : args) argp.push_back(a.data());
    argp.push_back(nullptr);

    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, argp[0], &actions, &attr, argp.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) throw InfrastructureError(fmt::format("cannot spawn '{}': {}", argv[0], std::strerror(rc)));

    ProcessOutcome out;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    while (true) {
        const pid_t w = waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) throw InfrastructureError("waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            out.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!out.timed_out) {
        if (WIFEXITED(status)) out.exit_code = WEXITSTATUS(status);
        else if (WIFSIGNALED(status)) out.signal = WTERMSIG(status);
    }
    out.stdout_text = fs::exists(out_path) ? read_file(out_path) : "";
    out.stderr_text = fs::exists(err_path) ? read_file(err_path) : "";
    return out;
}

json shim_request_document(const ExecRequest& req, const fs::path& problem_path, const fs::path& candidate_path) {
    return json{
        {"schema_version", kShimSchemaVersion},
        {"problem_id", req.problem.id},
        {"problem_source_path", problem_path.string()},
        {"candidate_source_path", candidate_path.string()},
        {"backend", to_string(req.backend)},
        {"baseline_kind", to_string(req.baseline_kind)},
        {"measure_baseline", req.measure_baseline},
        {"timing",
         {{"timed_runs", req.timing.timed_runs},
          {"warmup_runs", req.timing.warmup_runs},
          {"reset_compile_context", req.timing.reset_compile_context}}},
        {"correctness",
         {{"trials", req.correctness.trials},
          {"atol", req.correctness.atol},
          {"rtol", req.correctness.rtol},
          {"seed", req.correctness.seed}}},
        {"profiling", req.profiling == ProfilingMode::capture},
        {"device", req.device},
        {"timeout_hint_s", static_cast<double>(req.timeout.count()) / 1000.0},
        {"artifact_dir", (req.work_dir / "profile").string()},
    };
}

RawExecResult parse_shim_result(const json& doc, const ExecRequest& req) {
    auto violation = [](const std::string& what) { return InfrastructureError("shim protocol violation: " + what); };
    if (!doc.is_object()) throw violation("result is not an object");
    if (doc.value("schema_version", -1) != kShimSchemaVersion)
        throw violation("unsupported schema_version " + doc.value("schema_version", json(nullptr)).dump());

    RawExecResult r;
    try {
        r.phase_reached = exec_phase_from_string(doc.at("phase_reached").get<std::string>());
        r.compile_transcript = doc.value("compile_transcript", "");
        r.run_transcript = doc.value("run_transcript", "");
        if (doc.contains("shapes")) {
            const auto& s = doc["shapes"];
            r.candidate_shapes = s.value("candidate", std::vector<std::vector<std::int64_t>>{});
            r.reference_shapes = s.value("reference", std::vector<std::vector<std::int64_t>>{});
        }
        if (doc.contains("shape_ok") && !doc["shape_ok"].is_null()) r.shape_ok = doc["shape_ok"].get<bool>();
        if (doc.contains("outputs_match") && !doc["outputs_match"].is_null())
            r.outputs_match = doc["outputs_match"].get<bool>();
        auto number = [&](const char* key) {
            return doc.contains(key) && doc[key].is_number() ? doc[key].get<double>() : 0.0;
        };
        r.max_abs_dev = number("max_abs_dev");
        r.max_rel_dev = number("max_rel_dev");
        r.candidate_samples_ns = doc.value("candidate_samples_ns", std::vector<double>{});
        r.baseline_samples_ns = doc.value("baseline_samples_ns", std::vector<double>{});
        r.profile_artifact_paths = doc.value("profile_artifact_paths", std::vector<std::string>{});
        r.profiling_unavailable = doc.value("profiling_unavailable", false);
        r.wall_time_ms = number("wall_time_ms");
        r.device_class = doc.value("device_class", "");
        if (doc.contains("signal") && doc["signal"].is_number_integer()) r.signal = doc["signal"].get<int>();
        r.timed_out = doc.value("timed_out", false);
    } catch (const json::exception& e) {
        throw violation(e.what());
    } catch (const ParseError& e) {
        throw violation(e.what());
    }

    if (r.phase_reached == ExecPhase::timed) {
        const auto n = static_cast<std::size_t>(req.timing.timed_runs);
        if (r.candidate_samples_ns.size() != n)
            throw violation(fmt::format("expected {} candidate samples, got {}", n, r.candidate_samples_ns.size()));
        if (req.measure_baseline && r.baseline_samples_ns.size() != n)
            throw violation(fmt::format("expected {} baseline samples, got {}", n, r.baseline_samples_ns.size()));
    }
    return r;
}

RawExecResult SubprocessExecutor::attempt(const ExecRequest& req, int attempt_no) {
    const auto dir = req.work_dir.empty() ? fs::temp_directory_path() / ("kforge-" + req.fingerprint()) : req.work_dir;
    fs::create_directories(dir);
    const auto problem_path = dir / "problem.py";
    const auto candidate_path = dir / "candidate.py";
    const auto request_path = dir / "request.json";
    const auto result_path = dir / "result.json";
    write_file(problem_path, req.problem.reference_source);
    write_file(candidate_path, req.candidate_source);
    write_file(request_path, shim_request_document(req, problem_path, candidate_path).dump(2));
    fs::remove(result_path);

    std::vector<std::string> argv = shim_;
    argv.insert(argv.end(), {"--request", request_path.string(), "--out", result_path.string()});
    std::vector<std::string> env;
    if (req.profiling == ProfilingMode::capture && req.backend == Backend::metal) env.emplace_back("MTL_CAPTURE_ENABLED=1");

    const auto started = std::chrono::steady_clock::now();
    const auto proc = run_process(argv, env, req.timeout, dir);
    const auto wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    spdlog::debug("event=shim_exit problem={} attempt={} exit={} signal={} timed_out={}", req.problem.id, attempt_no,
                  proc.exit_code.value_or(-1), proc.signal.value_or(0), proc.timed_out);

    if (proc.timed_out) {
        RawExecResult r;
        r.phase_reached = ExecPhase::run;
        r.timed_out = true;
        r.wall_time_ms = wall_ms;
        r.run_transcript = fmt::format("evaluation exceeded the {} ms timeout\n{}", req.timeout.count(),
                                       tail(proc.stderr_text + proc.stdout_text, 4000));
        return r;
    }
    if (proc.signal) {
        RawExecResult r;
        r.phase_reached = ExecPhase::run;
        r.signal = proc.signal;
        r.wall_time_ms = wall_ms;
        r.run_transcript = fmt::format("evaluation process terminated by signal {}\n{}", *proc.signal,
                                       tail(proc.stderr_text, 4000));
        return r;
    }
    if (proc.exit_code != 0)
        throw InfrastructureError(fmt::format("shim exited with status {}: {}", proc.exit_code.value_or(-1),
                                              tail(proc.stderr_text, 2000)));

    json doc;
    try {
        if (fs::exists(result_path)) {
            doc = json::parse(read_file(result_path));
        } else {
            // fall back to the last JSON object printed on stdout
            const auto lines = split(proc.stdout_text, '\n');
            for (auto it = lines.rbegin(); it != lines.rend() && doc.is_null(); ++it) {
                const auto t = trim(*it);
                if (t.starts_with('{')) doc = json::parse(t);
            }
        }
    } catch (const json::parse_error& e) {
        throw InfrastructureError(std::string("shim protocol violation: ") + e.what());
    }
    if (doc.is_null()) throw InfrastructureError("shim protocol violation: no result document");
    auto r = parse_shim_result(doc, req);
    if (r.wall_time_ms == 0.0) r.wall_time_ms = wall_ms;
    if (r.run_transcript.empty() && r.phase_reached == ExecPhase::run) r.run_transcript = tail(proc.stderr_text, 4000);
    return r;
}

RawExecResult SubprocessExecutor::execute(const ExecRequest& req) {
    if (auto problems = validate_request(req); !problems.empty()) throw ConfigError(problems);
    try {
        return attempt(req, 1);
    } catch (const InfrastructureError& e) {
        spdlog::warn("event=shim_retry problem={} error=\"{}\"", req.problem.id, e.what());
        return attempt(req, 2);
    }
}

// ---------------------------------------------------------------------------
// Baseline cache

RawExecResult CachingExecutor::execute(const ExecRequest& req) {
    if (bypass_ || !req.measure_baseline) return inner_->execute(req);
    const auto key = fmt::format("{}|{}|{}|{}|{}|{}|{}", req.problem.id, sha256_hex(req.problem.reference_source),
                                 to_string(req.backend), to_string(req.baseline_kind), req.timing.timed_runs,
                                 req.timing.warmup_runs, req.timing.reset_compile_context);
    std::optional<std::vector<double>> cached;
    {
        std::lock_guard lock(mu_);
        if (auto it = cache_.find(key); it != cache_.end()) cached = it->second;
    }
    if (cached) {
        auto copy = req;
        copy.measure_baseline = false;
        auto r = inner_->execute(copy);
        if (r.phase_reached == ExecPhase::timed) {
            r.baseline_samples_ns = *cached;
            std::lock_guard lock(mu_);
            ++hits_;
        }
        return r;
    }
    auto r = inner_->execute(req);
    if (r.phase_reached == ExecPhase::timed && !r.baseline_samples_ns.empty()) {
        std::lock_guard lock(mu_);
        cache_.emplace(key, r.baseline_samples_ns);
    }
    return r;
}

std::size_t CachingExecutor::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

}  // namespace kforge
