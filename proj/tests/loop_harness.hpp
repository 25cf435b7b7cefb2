#pragma once

#include "kforge/fixtures.hpp"
#include "kforge/orchestrator.hpp"
#include "test_support.hpp"

#include <memory>
#include <mutex>
#include <vector>

namespace kforge::test {

/// Forwards to a wrapped executor and remembers every request it saw.
class RecordingExecutor : public Executor {
public:
    explicit RecordingExecutor(std::shared_ptr<Executor> inner) : inner_(std::move(inner)) {}
    RawExecResult execute(const ExecRequest& req) override {
        {
            std::lock_guard lock(mu_);
            requests.push_back(req);
        }
        return inner_->execute(req);
    }
    std::vector<ExecRequest> requests;

private:
    std::shared_ptr<Executor> inner_;
    std::mutex mu_;
};

/// Mock world for driving the refinement loop from scripted outcomes.
struct LoopHarness {
    MockScripts scripts = empty_mock_scripts();
    TemplateSet templates = TemplateSet::load_default();
    LoopConfig cfg;
    EvalSettings eval;
    std::vector<std::string> devices{"0"};
    std::map<std::string, ReferenceImpl> references;
    fs::path artifact_base = fixture_dir() / "profiling";

    std::shared_ptr<MockModelClient> client;
    std::shared_ptr<RecordingExecutor> executor;
    std::unique_ptr<DevicePool> pool;

    LoopHarness() {
        cfg.generation_profile = resolve_profile("mock");
        cfg.generation_profile.mock_script = "<inline>";
        cfg.analysis_profile = cfg.generation_profile;
        eval.timing = {5, 1, true};
    }

    LoopDeps deps() {
        client = std::make_shared<MockModelClient>(scripts.provider);
        executor = std::make_shared<RecordingExecutor>(std::make_shared<MockExecutor>(scripts.executor, artifact_base));
        pool = std::make_unique<DevicePool>(devices);
        return LoopDeps{*client, *executor, *pool, templates, load_one_shot(default_asset_dir(), eval.backend),
                        references.empty() ? nullptr : &references};
    }

    ProblemOutcome run(const Problem& p, const fs::path& dir = {}) {
        auto d = deps();
        return run_problem(p, cfg, eval, d, "run-test", dir);
    }
};

/// Independent restatement of the loop rules: the phase of each iteration and the
/// best (speedup, iteration) for one scripted chain.
struct ReplayResult {
    std::vector<LoopPhase> phases;
    std::optional<std::pair<double, int>> best;
};

inline ReplayResult replay(const std::vector<ScriptStep>& steps, int budget) {
    ReplayResult out;
    bool seen_correct = false;
    for (int i = 1; i <= budget; ++i) {
        out.phases.push_back(seen_correct ? LoopPhase::optimization : LoopPhase::functional);
        const ScriptStep step = i <= static_cast<int>(steps.size()) ? steps[i - 1] : ScriptStep{ExecState::generation_failure};
        if (step.state == ExecState::correct) {
            seen_correct = true;
            if (!out.best || step.speedup > out.best->first) out.best = std::pair(step.speedup, i);
        }
    }
    return out;
}

}  // namespace kforge::test
