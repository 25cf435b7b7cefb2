#include "kforge/fixtures.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace kforge {

using json = nlohmann::json;

std::string mock_marker(std::string_view problem_id, int iteration) {
    return fmt::format("# mock-candidate {} iter {}", problem_id, iteration);
}

std::string mock_generation_response(std::string_view problem_id, int iteration, ExecState state) {
    if (state == ExecState::generation_failure)
        return "I was not able to write a kernel for this problem within the constraints given.";
    return fmt::format(
        "Here is the optimized module.\n\n```python\n{}\nimport torch\nimport torch.nn as nn\n\n\n"
        "class ModelNew(nn.Module):\n    def __init__(self, *args, **kwargs):\n        super().__init__()\n\n"
        "    def forward(self, *inputs):\n        return inputs[0]\n```\n",
        mock_marker(problem_id, iteration));
}

json mock_outcome(const ScriptStep& step) {
    switch (step.state) {
        case ExecState::generation_failure:
            return json{{"phase", "compile"}, {"compile_error", "unreachable: no candidate"}};
        case ExecState::compilation_failure:
            return json{{"phase", "compile"}, {"compile_error", "error: identifier \"blockDim\" is undefined"}};
        case ExecState::runtime_error:
            return json{{"phase", "run"}, {"runtime_error", "RuntimeError: illegal memory access was encountered"}};
        case ExecState::output_mismatch:
            return json{{"phase", "compare"}, {"outputs_match", false}, {"max_abs_dev", 0.5}, {"max_rel_dev", 0.5}};
        case ExecState::correct:
            break;
    }
    return json{{"phase", "timed"}, {"base_mean_ms", 1.0}, {"cand_mean_ms", 1.0 / step.speedup}};
}

MockScripts empty_mock_scripts() {
    MockScripts s;
    s.provider = json{{"generation", json::array()},
                      {"analysis", json::array()},
                      {"problems", json::object()},
                      {"default_response",
                       {{"generation", "No program this time."},
                        {"analysis", "Fuse the two elementwise kernels into one launch to cut global memory traffic."}}}};
    s.executor = json{{"records", json::array()},
                      {"default", {{"phase", "timed"}, {"base_mean_ms", 1.0}, {"cand_mean_ms", 2.0}}}};
    return s;
}

void add_problem_script(MockScripts& scripts, std::string_view problem_id, const std::vector<ScriptStep>& steps) {
    const std::string id(problem_id);
    auto& gen = scripts.provider["problems"][id]["generation"];
    if (!gen.is_array()) gen = json::array();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const int iteration = static_cast<int>(k) + 1;
        gen.push_back({{"match", {{"ordinal", k}}},
                       {"response_text", mock_generation_response(id, iteration, steps[k].state)}});
        if (steps[k].state == ExecState::generation_failure) continue;
        scripts.executor["records"].push_back(
            {{"match", {{"candidate_contains", mock_marker(id, iteration) + "\n"}}}, {"outcome", mock_outcome(steps[k])}});
    }
}

MockScripts random_mock_scripts(const ProblemSet& problems, int iterations, std::uint64_t seed) {
    auto scripts = empty_mock_scripts();
    std::mt19937_64 rng(seed);
    // generation, compile, runtime, mismatch, correct
    std::discrete_distribution<int> state_dist({10, 25, 10, 15, 40});
    std::uniform_real_distribution<double> speed(0.3, 2.5);
    for (const auto& p : problems.problems) {
        std::vector<ScriptStep> steps;
        for (int i = 0; i < iterations; ++i) {
            ScriptStep s;
            s.state = static_cast<ExecState>(state_dist(rng));
            s.speedup = std::round(speed(rng) * 1000.0) / 1000.0;
            steps.push_back(s);
        }
        add_problem_script(scripts, p.id, steps);
    }
    return scripts;
}

}  // namespace kforge
