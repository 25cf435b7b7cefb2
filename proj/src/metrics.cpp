#include "kforge/metrics.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <sstream>

namespace kforge {

using json = nlohmann::json;

double speedup(double baseline_mean, double candidate_mean) {
    if (!(candidate_mean > 0.0)) throw MeasurementError("candidate mean time is not positive; speedup undefined");
    if (!(baseline_mean > 0.0)) throw MeasurementError("baseline mean time is not positive; speedup undefined");
    return baseline_mean / candidate_mean;
}

double speedup(const TimingStats& baseline, const TimingStats& candidate) {
    return speedup(baseline.mean_ns, candidate.mean_ns);
}

std::optional<double> fast_p(std::span<const OutcomeRow> rows, double p, std::size_t n) {
    if (p < 0.0) throw PreconditionError("fast_p threshold must be >= 0");
    if (rows.size() > n) throw PreconditionError(fmt::format("{} outcome rows exceed problem count {}", rows.size(), n));
    if (n == 0) return std::nullopt;
    std::size_t hits = 0;
    for (const auto& r : rows)
        if (r.correct && r.speedup && *r.speedup > p) ++hits;
    return static_cast<double>(hits) / static_cast<double>(n);
}

FastPCurve fast_p_curve(std::span<const OutcomeRow> rows, int level, std::span<const double> thresholds,
                        std::size_t n) {
    FastPCurve curve;
    curve.level = level;
    curve.n = n;
    std::vector<OutcomeRow> at_level;
    for (const auto& r : rows)
        if (r.level == level) at_level.push_back(r);
    for (double p : thresholds) {
        auto v = fast_p(at_level, p, n);
        if (!v) continue;
        curve.thresholds.push_back(p);
        curve.values.push_back(*v);
    }
    return curve;
}

std::vector<OutcomeRow> Report::outcome_rows() const {
    std::vector<OutcomeRow> rows;
    for (const auto& p : problems) {
        if (!p.final_state) continue;
        rows.push_back({p.problem_id, p.level, p.correct, p.correct ? p.best_speedup : std::nullopt});
    }
    return rows;
}

ProblemSummary summarize_problem(const std::string& problem_id, int level, const std::vector<RunRecord>& records) {
    ProblemSummary s;
    s.problem_id = problem_id;
    s.level = level;
    s.iterations_used = static_cast<int>(records.size());
    std::optional<std::pair<int, int>> best_key;
    for (const auto& r : records) {
        s.final_state = r.exec_state;
        if (r.exec_state != ExecState::correct) continue;
        s.correct = true;
        if (!r.timing || !r.timing->speedup) continue;
        const double v = *r.timing->speedup;
        const std::pair key(r.sample, r.iteration);
        if (!s.best_speedup || v > *s.best_speedup || (v == *s.best_speedup && key < *best_key)) {
            s.best_speedup = v;
            s.best_iteration = r.iteration;
            best_key = key;
        }
    }
    return s;
}

std::vector<RunRecord> read_records(const fs::path& records_path, std::vector<std::string>& warnings) {
    std::vector<RunRecord> out;
    if (!fs::exists(records_path)) return out;
    std::istringstream in(read_file(records_path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(run_record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            warnings.push_back(fmt::format("{}:{}: skipped corrupt record ({})", records_path.generic_string(),
                                           lineno, e.what()));
            spdlog::warn("event=corrupt_record file={} line={}", records_path.generic_string(), lineno);
        }
    }
    return out;
}

Report aggregate(const fs::path& run_dir, std::span<const double> thresholds) {
    if (!fs::exists(run_dir / "problems.json")) throw LoadError("not a run directory: " + run_dir.string());
    for (double p : thresholds)
        if (p < 0.0) throw PreconditionError("fast_p threshold must be >= 0");

    Report report;
    report.run_id = run_dir.filename().string();
    report.thresholds.assign(thresholds.begin(), thresholds.end());
    if (fs::exists(run_dir / "config.json")) {
        try {
            report.config = json::parse(read_file(run_dir / "config.json"));
        } catch (const json::exception& e) {
            report.warnings.push_back(std::string("config.json unreadable: ") + e.what());
        }
    }
    const auto doc = json::parse(read_file(run_dir / "problems.json"));
    std::map<int, std::size_t> counts{{1, 0}, {2, 0}, {3, 0}};
    for (const auto& p : doc.at("problems")) {
        const auto id = p.at("id").get<std::string>();
        const int level = p.at("level").get<int>();
        ++counts[level];
        std::string dir(id);
        std::replace(dir.begin(), dir.end(), '/', '_');
        const auto records = read_records(run_dir / dir / "records.jsonl", report.warnings);
        report.problems.push_back(summarize_problem(id, level, records));
    }
    const auto rows = report.outcome_rows();
    for (const auto& [level, n] : counts) {
        LevelReport lr;
        lr.level = level;
        lr.n = n;
        for (const auto& r : rows)
            if (r.level == level && r.correct) ++lr.correct;
        lr.curve = fast_p_curve(rows, level, thresholds, n);
        report.levels.push_back(std::move(lr));
    }
    return report;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string render_json(const Report& report) {
    json levels = json::array();
    for (const auto& l : report.levels) {
        json fp = json::object();
        for (std::size_t i = 0; i < l.curve.thresholds.size(); ++i)
            fp[fmt::format("{}", l.curve.thresholds[i])] = l.curve.values[i];
        levels.push_back({{"level", l.level}, {"n", l.n}, {"correct", l.correct}, {"fast_p", fp}});
    }
    json problems = json::array();
    for (const auto& p : report.problems) {
        problems.push_back({{"problem_id", p.problem_id},
                            {"level", p.level},
                            {"final_state", p.final_state ? json(to_string(*p.final_state)) : json(nullptr)},
                            {"correct", p.correct},
                            {"best_speedup", opt(p.best_speedup)},
                            {"best_iteration", p.best_iteration ? json(*p.best_iteration) : json(nullptr)},
                            {"iterations_used", p.iterations_used}});
    }
    return json{{"run_id", report.run_id},
                {"thresholds", report.thresholds},
                {"levels", levels},
                {"problems", problems},
                {"warnings", report.warnings}}
        .dump(2);
}

std::string render_table(const Report& report) {
    std::string out = fmt::format("run {}\n", report.run_id);
    out += fmt::format("{:<7}{:>6}{:>9}", "level", "n", "correct");
    for (double p : report.thresholds) out += fmt::format("{:>10}", fmt::format("fast_{}", p));
    out += '\n';
    for (const auto& l : report.levels) {
        out += fmt::format("{:<7}{:>6}{:>9}", l.level, l.n, l.correct);
        for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
            if (i < l.curve.values.size())
                out += fmt::format("{:>10.3f}", l.curve.values[i]);
            else
                out += fmt::format("{:>10}", "-");
        }
        out += '\n';
    }
    for (const auto& w : report.warnings) out += "warning: " + w + '\n';
    return out;
}

std::string render_csv(const Report& report) {
    std::string out = "problem_id,level,final_state,correct,best_speedup,best_iteration,iterations_used\n";
    for (const auto& p : report.problems) {
        out += fmt::format("{},{},{},{},{},{},{}\n", p.problem_id, p.level,
                           p.final_state ? to_string(*p.final_state) : std::string_view("not_attempted"),
                           p.correct ? "true" : "false", p.best_speedup ? fmt::format("{}", *p.best_speedup) : "",
                           p.best_iteration ? std::to_string(*p.best_iteration) : "", p.iterations_used);
    }
    return out;
}

}  // namespace kforge
