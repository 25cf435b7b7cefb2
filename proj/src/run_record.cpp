#include "kforge/run_record.hpp"

namespace kforge {

using json = nlohmann::json;

namespace {

json timing_json(const TimingSummary& t) {
    return json{{"mean_ns", t.mean_ns}, {"median_ns", t.median_ns}, {"std_ns", t.std_ns}, {"runs", t.runs}};
}

TimingSummary timing_from(const json& j) {
    return {j.at("mean_ns").get<double>(), j.at("median_ns").get<double>(), j.at("std_ns").get<double>(),
            j.at("runs").get<std::size_t>()};
}

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string_view to_string(LoopPhase p) noexcept {
    return p == LoopPhase::functional ? "functional" : "optimization";
}

json to_json(const RunRecord& r) {
    json timing = nullptr;
    if (r.timing) {
        timing = json{{"candidate", timing_json(r.timing->candidate)},
                      {"baseline", timing_json(r.timing->baseline)},
                      {"speedup", optional_json(r.timing->speedup)}};
    }
    return json{{"run_id", r.run_id},
                {"problem_id", r.problem_id},
                {"sample", r.sample},
                {"iteration", r.iteration},
                {"phase", to_string(r.phase)},
                {"prompt_fingerprint", r.prompt_fingerprint},
                {"model_name", r.model_name},
                {"exec_state", to_string(r.exec_state)},
                {"candidate_digest", optional_json(r.candidate_digest)},
                {"timing", timing},
                {"recommendation_digest", optional_json(r.recommendation_digest)},
                {"artifacts", r.artifacts},
                {"detail", r.detail},
                {"warnings", r.warnings},
                {"started_at", r.started_at},
                {"finished_at", r.finished_at}};
}

RunRecord run_record_from_json(const json& j) {
    RunRecord r;
    r.run_id = j.value("run_id", "");
    r.problem_id = j.at("problem_id").get<std::string>();
    r.sample = j.value("sample", 0);
    r.iteration = j.at("iteration").get<int>();
    const auto phase = j.at("phase").get<std::string>();
    if (phase != "functional" && phase != "optimization") throw ParseError("phase", "unknown phase '" + phase + "'");
    r.phase = phase == "functional" ? LoopPhase::functional : LoopPhase::optimization;
    r.prompt_fingerprint = j.value("prompt_fingerprint", "");
    r.model_name = j.value("model_name", "");
    r.exec_state = exec_state_from_string(j.at("exec_state").get<std::string>());
    if (j.contains("candidate_digest") && j["candidate_digest"].is_string())
        r.candidate_digest = j["candidate_digest"].get<std::string>();
    if (j.contains("timing") && j["timing"].is_object()) {
        const auto& t = j["timing"];
        RecordTiming rt{timing_from(t.at("candidate")), timing_from(t.at("baseline")), std::nullopt};
        if (t.contains("speedup") && t["speedup"].is_number()) rt.speedup = t["speedup"].get<double>();
        r.timing = rt;
    }
    if (j.contains("recommendation_digest") && j["recommendation_digest"].is_string())
        r.recommendation_digest = j["recommendation_digest"].get<std::string>();
    r.artifacts = j.value("artifacts", std::vector<std::string>{});
    r.detail = j.value("detail", "");
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.started_at = j.value("started_at", "");
    r.finished_at = j.value("finished_at", "");
    return r;
}

}  // namespace kforge
