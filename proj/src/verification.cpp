#include "kforge/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kforge {

std::string_view to_string(ExecState s) noexcept {
    switch (s) {
        case ExecState::generation_failure: return "generation_failure";
        case ExecState::compilation_failure: return "compilation_failure";
        case ExecState::runtime_error: return "runtime_error";
        case ExecState::output_mismatch: return "output_mismatch";
        case ExecState::correct: return "correct";
    }
    return "unknown";
}

ExecState exec_state_from_string(std::string_view s) {
    for (auto st : {ExecState::generation_failure, ExecState::compilation_failure,
                    ExecState::runtime_error, ExecState::output_mismatch, ExecState::correct}) {
        if (to_string(st) == s) return st;
    }
    throw ParseError("exec_state", "unknown execution state '" + std::string(s) + "'");
}

std::string_view to_string(ExecPhase p) noexcept {
    switch (p) {
        case ExecPhase::compile: return "compile";
        case ExecPhase::run: return "run";
        case ExecPhase::compare: return "compare";
        case ExecPhase::timed: return "timed";
    }
    return "unknown";
}

ExecPhase exec_phase_from_string(std::string_view s) {
    for (auto p : {ExecPhase::compile, ExecPhase::run, ExecPhase::compare, ExecPhase::timed}) {
        if (to_string(p) == s) return p;
    }
    throw ParseError("phase_reached", "unknown phase '" + std::string(s) + "'");
}

const std::string& RawExecResult::failure_transcript() const noexcept {
    return phase_reached == ExecPhase::compile ? compile_transcript : run_transcript;
}

ExecState classify(const RawExecResult& raw, bool had_code, const CorrectnessConfig& cfg) {
    if (!had_code) return ExecState::generation_failure;
    if (raw.phase_reached == ExecPhase::compile) return ExecState::compilation_failure;
    if (raw.phase_reached == ExecPhase::run || raw.timed_out || raw.signal.has_value())
        return ExecState::runtime_error;
    if (raw.phase_reached == ExecPhase::compare) return ExecState::output_mismatch;

    if (raw.shape_ok == false) return ExecState::output_mismatch;
    if (raw.outputs_match.has_value()) {
        return *raw.outputs_match ? ExecState::correct : ExecState::output_mismatch;
    }
    // NaN deviations compare false and fall through to mismatch.
    const bool abs_ok = raw.max_abs_dev <= cfg.atol;
    const bool rel_ok = raw.max_rel_dev <= cfg.rtol;
    if (!(abs_ok || rel_ok)) return ExecState::output_mismatch;
    return ExecState::correct;
}

CompareResult compare_outputs(const TrialOutputs& candidate, const TrialOutputs& reference,
                              const CorrectnessConfig& cfg) {
    CompareResult r;
    if (candidate.size() != reference.size()) return r;

    r.shape_ok = true;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (candidate[i].shape != reference[i].shape ||
            candidate[i].values.size() != reference[i].values.size()) {
            r.shape_ok = false;
        }
    }
    if (!r.shape_ok) return r;

    bool pass = true;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        const auto& a = candidate[i].values;
        const auto& b = reference[i].values;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double diff = std::abs(a[j] - b[j]);
            const double denom = std::max(std::abs(b[j]), std::numeric_limits<double>::min());
            const double rel = diff / denom;
            if (std::isnan(diff)) {
                r.max_abs_dev = r.max_rel_dev = std::numeric_limits<double>::infinity();
                pass = false;
                continue;
            }
            r.max_abs_dev = std::max(r.max_abs_dev, diff);
            r.max_rel_dev = std::max(r.max_rel_dev, rel);
            if (!(diff <= cfg.atol + cfg.rtol * std::abs(b[j]))) pass = false;
        }
    }
    r.pass = pass;
    return r;
}

CompareResult compare_outputs(std::span<const TrialOutputs> candidate,
                              std::span<const TrialOutputs> reference, const CorrectnessConfig& cfg) {
    CompareResult total;
    if (candidate.size() != reference.size() || candidate.empty()) return total;
    total.pass = true;
    total.shape_ok = true;
    for (std::size_t t = 0; t < candidate.size(); ++t) {
        const auto r = compare_outputs(candidate[t], reference[t], cfg);
        total.pass = total.pass && r.pass;
        total.shape_ok = total.shape_ok && r.shape_ok;
        total.max_abs_dev = std::max(total.max_abs_dev, r.max_abs_dev);
        total.max_rel_dev = std::max(total.max_rel_dev, r.max_rel_dev);
    }
    return total;
}

TimingStats reduce_timing(std::span<const double> samples_ns) {
    if (samples_ns.empty()) throw PreconditionError("reduce_timing: empty sample list");
    TimingStats s;
    s.samples_ns.assign(samples_ns.begin(), samples_ns.end());

    // Sorting first makes the sums permutation-invariant bit for bit.
    std::vector<double> sorted = s.samples_ns;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    s.mean_ns = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    s.median_ns = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (n > 1) {
        double ss = 0.0;
        for (double x : sorted) ss += (x - s.mean_ns) * (x - s.mean_ns);
        s.std_ns = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return s;
}

std::uint64_t trial_seed(std::int64_t run_seed, std::string_view problem_id, int trial_index) {
    const auto hex = sha256_hex(std::to_string(run_seed) + "/" + std::string(problem_id) + "/" +
                                std::to_string(trial_index));
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace kforge
