#include "kforge/orchestrator.hpp"

#include "kforge/metrics.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <unistd.h>

namespace kforge {

using json = nlohmann::json;

std::string_view to_string(LoopMode m) noexcept {
    return m == LoopMode::single_shot ? "single_shot" : "iterative";
}

LoopMode loop_mode_from_string(std::string_view s) {
    if (s == "single_shot" || s == "single-shot") return LoopMode::single_shot;
    if (s == "iterative") return LoopMode::iterative;
    throw ParseError("mode", "unknown mode '" + std::string(s) + "' (expected single-shot or iterative)");
}

std::vector<std::string> validate_loop_config(const LoopConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.num_iterations < 1) problems.push_back("num_iterations must be >= 1");
    if (cfg.mode == LoopMode::single_shot && cfg.num_iterations != 1)
        problems.push_back("single-shot mode requires num_iterations = 1");
    if (cfg.num_samples < 1) problems.push_back("num_samples must be >= 1");
    if (cfg.feedback_budget_tokens == 0) problems.push_back("feedback budget must be positive");
    for (auto& p : validate_profile(cfg.generation_profile)) problems.push_back("generation profile: " + p);
    if (cfg.strategy.use_profiling)
        for (auto& p : validate_profile(cfg.analysis_profile)) problems.push_back("analysis profile: " + p);
    return problems;
}

std::optional<BestCandidate> select_best(const std::vector<RunRecord>& records) {
    std::optional<BestCandidate> best;
    for (const auto& r : records) {
        if (r.exec_state != ExecState::correct || !r.timing || !r.timing->speedup) continue;
        const double s = *r.timing->speedup;
        const bool earlier = best && std::pair(r.sample, r.iteration) < std::pair(best->sample, best->iteration);
        if (!best || s > best->speedup || (s == best->speedup && earlier)) {
            best = BestCandidate{r.problem_id, r.candidate_digest.value_or(""), s, r.iteration, r.sample};
        }
    }
    return best;
}

std::string problem_dir_name(std::string_view problem_id) {
    std::string out(problem_id);
    for (char& c : out)
        if (c == '/' || c == '\\') c = '_';
    return out;
}

namespace {

std::string file_tag(int sample, int iteration) {
    return sample == 0 ? fmt::format("iter{}", iteration) : fmt::format("s{}_iter{}", sample, iteration);
}

fs::path scratch_dir() {
    static std::atomic<int> counter{0};
    auto dir = fs::temp_directory_path() / fmt::format("kforge-{}-{}", ::getpid(), counter++);
    fs::create_directories(dir);
    return dir;
}

void append_line(const fs::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw LoadError("cannot append to " + path.string());
    out << line << '\n';
}

/// Copies evaluator artifacts under `dest`; returns the copies (paths relative to `root`).
std::vector<std::string> preserve_artifacts(const std::vector<std::string>& paths, const fs::path& dest,
                                            const fs::path& root, std::vector<std::string>& warnings) {
    std::vector<std::string> out;
    if (paths.empty()) return out;
    fs::create_directories(dest);
    for (const auto& p : paths) {
        const fs::path src(p);
        std::error_code ec;
        if (!fs::exists(src, ec)) {
            warnings.push_back("artifact missing: " + src.filename().string());
            continue;
        }
        const auto target = dest / src.filename();
        fs::copy(src, target, fs::copy_options::recursive | fs::copy_options::overwrite_existing, ec);
        if (ec) {
            warnings.push_back("artifact copy failed: " + src.filename().string());
            continue;
        }
        out.push_back(fs::relative(target, root).generic_string());
    }
    return out;
}

class ProblemLoop {
public:
    ProblemLoop(const Problem& problem, const LoopConfig& cfg, const EvalSettings& eval, LoopDeps& deps,
                const std::string& run_id, const fs::path& dir)
        : problem_(problem), cfg_(cfg), eval_(eval), deps_(deps), run_id_(run_id), dir_(dir) {}

    ProblemOutcome run() {
        ProblemOutcome outcome;
        outcome.problem_id = problem_.id;
        if (!dir_.empty()) fs::create_directories(dir_);
        try {
            for (int s = 0; s < cfg_.num_samples; ++s) run_chain(s, outcome.records);
        } catch (const InfrastructureError& e) {
            outcome.abort_reason = e.what();
            spdlog::error("event=problem_aborted run={} problem={} reason=\"{}\"", run_id_, problem_.id, e.what());
        }
        outcome.best = select_best(outcome.records);
        return outcome;
    }

private:
    struct Iteration {
        Candidate candidate;
        EvalReport report;
        std::optional<Recommendation> recommendation;
    };

    void run_chain(int sample, std::vector<RunRecord>& records) {
        const int budget = cfg_.budget();
        std::optional<Iteration> prev;
        LoopPhase phase = LoopPhase::functional;
        std::optional<ProfileBundle> cached_bundle;

        std::optional<ReferenceImpl> reference;
        if (cfg_.strategy.use_reference && deps_.references) {
            if (auto it = deps_.references->find(problem_.id); it != deps_.references->end()) reference = it->second;
        }

        for (int i = 1; i <= budget; ++i) {
            RunRecord rec;
            rec.run_id = run_id_;
            rec.problem_id = problem_.id;
            rec.sample = sample;
            rec.iteration = i;
            rec.phase = phase;
            rec.model_name = cfg_.generation_profile.model_name;
            rec.started_at = utc_timestamp();
            if (i == 1 && cfg_.strategy.use_reference && !reference)
                rec.warnings.push_back("no reference available; using baseline prompt");

            PromptSpec spec;
            spec.mode = i == 1 ? PromptMode::single_shot : PromptMode::refinement;
            spec.backend = eval_.backend;
            spec.problem = problem_;
            spec.one_shot = deps_.one_shot;
            if (i == 1) spec.reference = reference;
            if (prev) {
                spec.prior = std::pair(prev->candidate, prev->report);
                if (prev->report.state == ExecState::correct) spec.recommendation = prev->recommendation;
            }
            spec.task_instructions = cfg_.task_instructions;
            spec.feedback_budget_tokens = cfg_.feedback_budget_tokens;
            const auto prompt = deps_.templates.render_generation(spec);
            rec.prompt_fingerprint = prompt.fingerprint;
            const auto tag = file_tag(sample, i);
            if (!dir_.empty()) {
                write_file(dir_ / "prompts" / (tag + ".txt"), prompt.text);
                rec.artifacts.push_back("prompts/" + tag + ".txt");
            }

            Iteration cur;
            cur.candidate.iteration = i;
            cur.candidate.prompt_fingerprint = prompt.fingerprint;
            std::optional<Candidate> extracted;
            const CallContext ctx{problem_.id, AgentRole::generation, i, sample};
            try {
                const auto response = generate(deps_.client, cfg_.generation_profile, prompt, ctx);
                extracted = extract_code(response);
                if (!extracted) cur.report.note = "response contained no extractable program";
            } catch (const TransportError& e) {
                cur.report.note = std::string("model call failed: ") + e.what();
            } catch (const CapabilityError& e) {
                cur.report.note = std::string("model cannot accept prompt: ") + e.what();
            }

            if (extracted) {
                cur.candidate.source = extracted->source;
                cur.candidate.extraction = extracted->extraction;
                rec.candidate_digest = cur.candidate.digest();
                if (!dir_.empty()) {
                    write_file(dir_ / "candidates" / (tag + ".src"), cur.candidate.source);
                    rec.artifacts.push_back("candidates/" + tag + ".src");
                }
                cur.report = evaluate(cur.candidate, sample, i, rec);
            } else {
                cur.report.state = ExecState::generation_failure;
                rec.detail = cur.report.note;
            }
            rec.exec_state = cur.report.state;

            if (cur.report.state == ExecState::correct) {
                const auto& ct = *cur.report.candidate_timing;
                const auto& bt = *cur.report.baseline_timing;
                rec.timing = RecordTiming{TimingSummary::of(ct), TimingSummary::of(bt), cur.report.speedup};
                if (cfg_.strategy.use_profiling && i < budget) {
                    cur.recommendation = recommend(cur.candidate, sample, i, rec, cached_bundle);
                    if (cur.recommendation) rec.recommendation_digest = cur.recommendation->digest();
                }
                phase = LoopPhase::optimization;
            } else if (rec.detail.empty()) {
                rec.detail = tail(cur.report.raw.failure_transcript(), 2000);
            }

            rec.finished_at = utc_timestamp();
            if (!dir_.empty()) append_line(dir_ / "records.jsonl", to_json(rec).dump());
            spdlog::info("event=iteration run={} problem={} sample={} iter={} phase={} state={}{}", run_id_,
                         problem_.id, sample, i, to_string(rec.phase), to_string(rec.exec_state),
                         rec.timing && rec.timing->speedup ? fmt::format(" speedup={:.4f}", *rec.timing->speedup)
                                                           : std::string());
            records.push_back(std::move(rec));
            prev = std::move(cur);
        }
    }

    ExecRequest make_request(const Candidate& c, int sample, int iteration) const {
        ExecRequest req;
        req.problem = problem_;
        req.candidate_source = c.source;
        req.backend = eval_.backend;
        req.baseline_kind = eval_.baseline_kind;
        req.timing = eval_.timing;
        req.correctness = eval_.correctness;
        req.correctness.seed = cfg_.seed;
        req.timeout = eval_.timeout;
        req.work_dir = (dir_.empty() ? scratch_dir() : dir_ / "work") / file_tag(sample, iteration);
        return req;
    }

    RawExecResult execute_leased(ExecRequest& req, int sample, int iteration) {
        const auto holder = fmt::format("{}/{}#{}@{}", run_id_, problem_.id, sample, iteration);
        auto lease = deps_.pool.acquire(holder);
        req.device = lease.device();
        if (auto problems = validate_request(req); !problems.empty()) throw ConfigError(std::move(problems));
        fs::create_directories(req.work_dir);
        return deps_.executor.execute(req);
    }

    EvalReport evaluate(const Candidate& c, int sample, int iteration, RunRecord& rec) {
        auto req = make_request(c, sample, iteration);
        EvalReport report;
        report.baseline_kind = eval_.baseline_kind;
        report.raw = execute_leased(req, sample, iteration);
        report.state = classify(report.raw, true, req.correctness);
        if (report.state != ExecState::correct) return report;

        if (report.raw.candidate_samples_ns.empty() || report.raw.baseline_samples_ns.empty())
            throw InfrastructureError("evaluator reported success without timing samples");
        report.candidate_timing = reduce_timing(report.raw.candidate_samples_ns);
        report.baseline_timing = reduce_timing(report.raw.baseline_samples_ns);
        try {
            report.speedup = speedup(*report.baseline_timing, *report.candidate_timing);
        } catch (const MeasurementError& e) {
            rec.warnings.push_back(e.what());
        }
        return report;
    }

    std::optional<ProfileBundle> capture_bundle(const Candidate& c, int sample, int iteration, RunRecord& rec) {
        auto req = make_request(c, sample, iteration);
        req.profiling = ProfilingMode::capture;
        req.measure_baseline = false;
        req.work_dir /= "profile";
        const auto raw = execute_leased(req, sample, iteration);
        if (raw.profiling_unavailable) rec.warnings.push_back("profiling unavailable on this evaluator");

        std::vector<std::string> paths = raw.profile_artifact_paths;
        if (!dir_.empty()) {
            const auto kept = preserve_artifacts(raw.profile_artifact_paths,
                                                 dir_ / "artifacts" / file_tag(sample, iteration), dir_, rec.warnings);
            rec.artifacts.insert(rec.artifacts.end(), kept.begin(), kept.end());
            paths.clear();
            for (const auto& k : kept) paths.push_back((dir_ / k).string());
        }
        auto [reports, images] = ingest_artifacts(std::vector<fs::path>(paths.begin(), paths.end()));
        for (auto& w : reports.warnings) rec.warnings.push_back(w);
        if (!eval_.screenshots_dir.empty()) {
            for (auto& p : find_screenshots(eval_.screenshots_dir / problem_dir_name(problem_.id))) images.push_back(p);
        }
        try {
            return build_bundle(reports, images, cfg_.bundle_budget, eval_.backend);
        } catch (const PreconditionError& e) {
            rec.warnings.push_back(std::string("no recommendation: ") + e.what());
            return std::nullopt;
        }
    }

    static ProfileBundle text_only(const ProfileBundle& b) {
        ProfileBundle out;
        out.source_backend = b.source_backend;
        for (const auto& item : b.items)
            if (item.kind == EvidenceKind::text_table) out.items.push_back(item);
        return out;
    }

    std::optional<Recommendation> recommend(const Candidate& c, int sample, int iteration, RunRecord& rec,
                                            std::optional<ProfileBundle>& cached) {
        std::optional<ProfileBundle> bundle;
        if (cfg_.reuse_profile && cached) {
            bundle = cached;
        } else {
            bundle = capture_bundle(c, sample, iteration, rec);
            if (bundle && cfg_.reuse_profile) cached = bundle;
        }
        if (!bundle) return std::nullopt;

        if (!cfg_.analysis_profile.supports_images && bundle->image_count() > 0) {
            rec.warnings.push_back("analysis model is text-only; image evidence dropped");
            bundle = text_only(*bundle);
            if (bundle->empty()) {
                rec.warnings.push_back("no recommendation: no text evidence for a text-only analysis model");
                return std::nullopt;
            }
        }
        const auto prompt = deps_.templates.render_analysis(c, *bundle);
        const auto tag = file_tag(sample, iteration);
        if (!dir_.empty()) {
            write_file(dir_ / "prompts" / ("analysis_" + tag + ".txt"), prompt.text);
            rec.artifacts.push_back("prompts/analysis_" + tag + ".txt");
        }
        const CallContext ctx{problem_.id, AgentRole::analysis, iteration, sample};
        try {
            auto r = analyze_performance(deps_.client, cfg_.analysis_profile, prompt, ctx);
            if (!r.single_form) rec.warnings.push_back("recommendation reads as a list; passed through unchanged");
            if (!dir_.empty()) {
                write_file(dir_ / "recommendations" / (tag + ".txt"), r.text);
                rec.artifacts.push_back("recommendations/" + tag + ".txt");
            }
            return r;
        } catch (const TransportError& e) {
            rec.warnings.push_back(std::string("no recommendation: ") + e.what());
        } catch (const CapabilityError& e) {
            rec.warnings.push_back(std::string("no recommendation: ") + e.what());
        } catch (const InfrastructureError&) {
            throw;
        } catch (const Error& e) {
            rec.warnings.push_back(std::string("no recommendation: ") + e.what());
        }
        return std::nullopt;
    }

    const Problem& problem_;
    const LoopConfig& cfg_;
    const EvalSettings& eval_;
    LoopDeps& deps_;
    const std::string& run_id_;
    fs::path dir_;
};

json problems_document(const ProblemSet& set) {
    json list = json::array();
    for (const auto& p : set.problems) list.push_back({{"id", p.id}, {"level", p.level}, {"name", p.name}});
    json counts = json::object();
    for (const auto& [level, n] : set.counts_by_level) counts[std::to_string(level)] = n;
    return json{{"backend", to_string(set.backend)},
                {"problems", list},
                {"counts_by_level", counts},
                {"excluded", set.excluded},
                {"digest", set.digest()}};
}

}  // namespace

ProblemOutcome run_problem(const Problem& problem, const LoopConfig& cfg, const EvalSettings& eval, LoopDeps& deps,
                           const std::string& run_id, const fs::path& problem_dir) {
    if (auto problems = validate_loop_config(cfg); !problems.empty()) throw ConfigError(std::move(problems));
    return ProblemLoop(problem, cfg, eval, deps, run_id, problem_dir).run();
}

std::string compute_run_id(const json& identity, const ProblemSet& problems, std::int64_t seed) {
    const json doc{{"identity", identity}, {"problem_set", problems.digest()}, {"seed", seed}};
    return "run-" + sha256_hex(doc.dump()).substr(0, 16);
}

SuiteResult run_suite(const ProblemSet& problems, const LoopConfig& cfg, const EvalSettings& eval, LoopDeps& deps,
                      const SuiteOptions& opts) {
    std::vector<std::string> config_problems = validate_loop_config(cfg);
    if (opts.parallelism < 1) config_problems.push_back("parallelism must be >= 1");
    if (opts.parallelism > deps.pool.size())
        config_problems.push_back(fmt::format("parallelism {} exceeds device pool size {}", opts.parallelism,
                                              deps.pool.size()));
    if (!config_problems.empty()) throw ConfigError(std::move(config_problems));

    SuiteResult result;
    result.run_id = compute_run_id(opts.identity, problems, cfg.seed);
    if (opts.resume_id && *opts.resume_id != result.run_id)
        throw ConfigError({fmt::format("cannot resume {}: the effective configuration maps to {}", *opts.resume_id,
                                       result.run_id)});
    result.run_dir = opts.runs_dir / result.run_id;
    const auto identity_path = result.run_dir / "identity.json";
    const json identity_doc{{"identity", opts.identity}, {"problem_set", problems.digest()}, {"seed", cfg.seed}};
    if (fs::exists(identity_path)) {
        json stored;
        try {
            stored = json::parse(read_file(identity_path));
        } catch (const json::exception&) {
            throw ConfigError({"run directory " + result.run_dir.string() + " has a corrupt identity.json"});
        }
        if (stored != identity_doc)
            throw ConfigError({"run directory " + result.run_dir.string() + " was created with a different config"});
        spdlog::info("event=resume run={}", result.run_id);
    } else if (opts.resume_id) {
        throw ConfigError({"no run directory to resume at " + result.run_dir.string()});
    }
    fs::create_directories(result.run_dir);
    write_file_atomic(identity_path, identity_doc.dump(2) + "\n");
    write_file_atomic(result.run_dir / "config.json", opts.config.dump(2) + "\n");
    write_file_atomic(result.run_dir / "problems.json", problems_document(problems).dump(2) + "\n");

    std::vector<const Problem*> todo;
    for (const auto& p : problems.problems) {
        const auto dir = result.run_dir / problem_dir_name(p.id);
        const auto status_path = dir / "status.json";
        if (fs::exists(status_path)) {
            try {
                if (json::parse(read_file(status_path)).value("status", "") == "complete") {
                    ++result.skipped;
                    continue;
                }
            } catch (const json::exception&) {
            }
        }
        if (fs::exists(dir)) fs::remove_all(dir);
        todo.push_back(&p);
    }
    spdlog::info("event=suite_start run={} problems={} pending={} parallelism={}", result.run_id,
                 problems.problems.size(), todo.size(), opts.parallelism);

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next++;
            if (idx >= todo.size()) return;
            const Problem& p = *todo[idx];
            const auto dir = result.run_dir / problem_dir_name(p.id);
            json status;
            try {
                auto outcome = run_problem(p, cfg, eval, deps, result.run_id, dir);
                status = {{"status", outcome.abort_reason ? "aborted" : "complete"}};
                if (outcome.abort_reason) status["abort_reason"] = *outcome.abort_reason;
                if (outcome.best)
                    status["best"] = {{"candidate_digest", outcome.best->candidate_digest},
                                      {"speedup", outcome.best->speedup},
                                      {"iteration", outcome.best->iteration},
                                      {"sample", outcome.best->sample}};
            } catch (const std::exception& e) {
                spdlog::error("event=problem_failed run={} problem={} reason=\"{}\"", result.run_id, p.id, e.what());
                status = {{"status", "aborted"}, {"abort_reason", e.what()}};
            }
            write_file_atomic(dir / "status.json", status.dump(2) + "\n");
            std::lock_guard lock(mu);
            ++result.executed;
            if (status["status"] == "aborted") result.aborted.push_back(p.id);
        }
    };
    const std::size_t nthreads = std::min(opts.parallelism, std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    std::sort(result.aborted.begin(), result.aborted.end());

    const auto report = aggregate(result.run_dir, kDefaultThresholds);
    auto summary = json::parse(render_json(report));
    summary["executed"] = result.executed;
    summary["skipped"] = result.skipped;
    summary["aborted"] = result.aborted;
    write_file_atomic(result.run_dir / "summary.json", summary.dump(2) + "\n");
    spdlog::info("event=suite_done run={} executed={} skipped={} aborted={}", result.run_id, result.executed,
                 result.skipped, result.aborted.size());
    return result;
}

}  // namespace kforge
