#include "kforge/run_config.hpp"

#include <fmt/format.h>

#include <set>

namespace kforge {

using json = nlohmann::json;

void to_json(json& j, const RunConfig& c) {
    j = json{{"backend", c.backend},
             {"problems", c.problems},
             {"problem_ids", c.problem_ids},
             {"levels", c.levels},
             {"mode", c.mode},
             {"iterations", c.iterations},
             {"use_reference", c.use_reference},
             {"use_profiling", c.use_profiling},
             {"samples", c.samples},
             {"model", c.model},
             {"analysis_model", c.analysis_model},
             {"seed", c.seed},
             {"reuse_profile", c.reuse_profile},
             {"max_rows", c.max_rows},
             {"max_images", c.max_images},
             {"feedback_budget_tokens", c.feedback_budget_tokens},
             {"task_instructions", c.task_instructions},
             {"baseline", c.baseline},
             {"timed_runs", c.timed_runs},
             {"warmup_runs", c.warmup_runs},
             {"trials", c.trials},
             {"atol", c.atol},
             {"rtol", c.rtol},
             {"timeout_s", c.timeout_s},
             {"baseline_cache", c.baseline_cache},
             {"references", c.references},
             {"templates", c.templates},
             {"screenshots", c.screenshots},
             {"executor", c.executor},
             {"shim", c.shim},
             {"exec_script", c.exec_script},
             {"mock_script", c.mock_script},
             {"devices", c.devices},
             {"parallelism", c.parallelism},
             {"runs_dir", c.runs_dir}};
}

void from_json(const json& j, RunConfig& c) {
    if (!j.is_object()) throw ConfigError({"run config must be a JSON object"});
    const json defaults = RunConfig{};
    std::vector<std::string> problems;
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) problems.push_back("unknown config key '" + key + "'");
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));

    json merged = defaults;
    merged.update(j);
    auto field = [&](const char* key, auto& dst) {
        try {
            merged.at(key).get_to(dst);
        } catch (const json::exception&) {
            problems.push_back(fmt::format("config key '{}' has the wrong type", key));
        }
    };
    field("backend", c.backend);
    field("problems", c.problems);
    field("problem_ids", c.problem_ids);
    field("levels", c.levels);
    field("mode", c.mode);
    field("iterations", c.iterations);
    field("use_reference", c.use_reference);
    field("use_profiling", c.use_profiling);
    field("samples", c.samples);
    field("model", c.model);
    field("analysis_model", c.analysis_model);
    field("seed", c.seed);
    field("reuse_profile", c.reuse_profile);
    field("max_rows", c.max_rows);
    field("max_images", c.max_images);
    field("feedback_budget_tokens", c.feedback_budget_tokens);
    field("task_instructions", c.task_instructions);
    field("baseline", c.baseline);
    field("timed_runs", c.timed_runs);
    field("warmup_runs", c.warmup_runs);
    field("trials", c.trials);
    field("atol", c.atol);
    field("rtol", c.rtol);
    field("timeout_s", c.timeout_s);
    field("baseline_cache", c.baseline_cache);
    field("references", c.references);
    field("templates", c.templates);
    field("screenshots", c.screenshots);
    field("executor", c.executor);
    field("shim", c.shim);
    field("exec_script", c.exec_script);
    field("mock_script", c.mock_script);
    field("devices", c.devices);
    field("parallelism", c.parallelism);
    field("runs_dir", c.runs_dir);
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

RunConfig load_run_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError({fmt::format("{}: invalid JSON ({})", path.string(), e.what())});
    }
    return j.get<RunConfig>();
}

std::vector<std::string> validate_run_config(const RunConfig& c) {
    std::vector<std::string> problems;
    const auto backend = parse_backend(c.backend);
    if (!backend) problems.push_back(fmt::format("unknown backend '{}' (expected cuda or metal)", c.backend));
    if (c.problems.empty()) problems.push_back("no problem set given (--problems)");
    if (c.mode != "iterative" && c.mode != "single-shot" && c.mode != "single_shot")
        problems.push_back(fmt::format("unknown mode '{}' (expected single-shot or iterative)", c.mode));
    const bool single = c.mode == "single-shot" || c.mode == "single_shot";
    if (c.iterations < 1) problems.push_back("iterations must be >= 1");
    if (single && c.iterations != 1) problems.push_back("single-shot mode requires --iterations 1");
    if (c.samples < 1) problems.push_back("samples must be >= 1");
    for (int l : c.levels)
        if (l < 1 || l > 3) problems.push_back(fmt::format("level {} out of range 1..3", l));
    if (c.baseline != "eager" && c.baseline != "graph_compiled" && c.baseline != "graph-compiled")
        problems.push_back(fmt::format("unknown baseline '{}' (expected eager or graph-compiled)", c.baseline));
    else if (c.baseline != "eager" && backend == Backend::metal)
        problems.push_back("graph-compiled baseline is only supported on cuda");
    if (c.timed_runs < 1) problems.push_back("timed_runs must be >= 1");
    if (c.warmup_runs < 0) problems.push_back("warmup_runs must be >= 0");
    if (c.trials < 1) problems.push_back("trials must be >= 1");
    if (!(c.atol >= 0) || !(c.rtol >= 0)) problems.push_back("atol and rtol must be >= 0");
    if (c.timeout_s < 1) problems.push_back("timeout must be >= 1 second");
    if (c.feedback_budget_tokens == 0) problems.push_back("feedback budget must be positive");
    if (c.executor == "shim") {
        if (c.shim.empty()) problems.push_back("executor 'shim' requires --shim <command>");
    } else if (c.executor == "mock") {
        if (c.exec_script.empty()) problems.push_back("executor 'mock' requires --exec-script <file>");
    } else {
        problems.push_back(fmt::format("unknown executor '{}' (expected mock or shim)", c.executor));
    }
    if (c.devices.empty()) problems.push_back("at least one device is required");
    if (std::set(c.devices.begin(), c.devices.end()).size() != c.devices.size())
        problems.push_back("device ids must be unique");
    if (c.parallelism < 1) problems.push_back("parallelism must be >= 1");
    if (c.parallelism > c.devices.size())
        problems.push_back(fmt::format("parallelism {} exceeds device count {}", c.parallelism, c.devices.size()));

    auto check_profile = [&](const std::string& name, const char* role) {
        try {
            auto p = resolve_profile(name);
            if (p.provider == Provider::mock) p.mock_script = c.mock_script;
            for (const auto& msg : validate_profile(p)) problems.push_back(fmt::format("{} model: {}", role, msg));
        } catch (const Error& e) {
            problems.push_back(fmt::format("{} model: {}", role, e.what()));
        }
    };
    check_profile(c.model, "generation");
    if (c.use_profiling) check_profile(c.analysis_model.empty() ? c.model : c.analysis_model, "analysis");
    return problems;
}

json identity_json(const RunConfig& c) {
    json j = c;
    for (const char* k : {"runs_dir", "devices", "parallelism", "problems", "exec_script", "mock_script"}) j.erase(k);
    auto digest_of = [](const std::string& path) -> json {
        if (path.empty()) return nullptr;
        std::error_code ec;
        if (!fs::exists(path, ec)) return path;
        return sha256_file(path);
    };
    j["exec_script_digest"] = digest_of(c.exec_script);
    j["mock_script_digest"] = digest_of(c.mock_script);
    try {
        j["generation_profile"] = resolve_profile(c.model);
        j["analysis_profile"] = resolve_profile(c.analysis_model.empty() ? c.model : c.analysis_model);
    } catch (const Error&) {
    }
    return j;
}

ResolvedRun resolve_run_config(const RunConfig& c) {
    if (auto problems = validate_run_config(c); !problems.empty()) throw ConfigError(std::move(problems));
    ResolvedRun r;
    r.backend = backend_from_string(c.backend);
    auto& loop = r.loop;
    loop.num_iterations = c.iterations;
    loop.mode = loop_mode_from_string(c.mode);
    loop.strategy = {c.use_reference, c.use_profiling};
    loop.num_samples = c.samples;
    loop.generation_profile = resolve_profile(c.model);
    loop.analysis_profile = resolve_profile(c.analysis_model.empty() ? c.model : c.analysis_model);
    if (loop.generation_profile.provider == Provider::mock) loop.generation_profile.mock_script = c.mock_script;
    if (loop.analysis_profile.provider == Provider::mock) loop.analysis_profile.mock_script = c.mock_script;
    loop.seed = c.seed;
    loop.reuse_profile = c.reuse_profile;
    loop.bundle_budget = {c.max_rows, c.max_images};
    loop.feedback_budget_tokens = c.feedback_budget_tokens;
    loop.task_instructions = c.task_instructions;

    auto& eval = r.eval;
    eval.backend = r.backend;
    eval.baseline_kind = baseline_kind_from_string(c.baseline);
    eval.timing = {c.timed_runs, c.warmup_runs, true};
    eval.correctness = {c.trials, c.atol, c.rtol, c.seed};
    eval.timeout = std::chrono::seconds(c.timeout_s);
    eval.screenshots_dir = c.screenshots;
    return r;
}

}  // namespace kforge
