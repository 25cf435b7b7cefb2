#pragma once

#include "kforge/core.hpp"
#include "kforge/verification.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kforge {

struct ExtractionInfo {
    std::string method;  // "fenced_last" or "whole_body"
    std::size_t fenced_blocks = 0;
    std::string language;
};

/// One synthesized program.
struct Candidate {
    std::string source;
    int iteration = 0;
    std::string prompt_fingerprint;
    ExtractionInfo extraction;

    std::string digest() const { return sha256_hex(source); }
};

enum class BaselineKind { eager, graph_compiled };

std::string_view to_string(BaselineKind k) noexcept;
BaselineKind baseline_kind_from_string(std::string_view s);

/// Classified outcome of one evaluation.
struct EvalReport {
    ExecState state = ExecState::generation_failure;
    RawExecResult raw;
    BaselineKind baseline_kind = BaselineKind::eager;
    std::optional<TimingStats> candidate_timing;
    std::optional<TimingStats> baseline_timing;
    std::optional<double> speedup;
    std::string note;  // e.g. transport failure text for generation failures
};

/// Single optimization suggestion from the performance-analysis agent.
struct Recommendation {
    std::string text;
    std::vector<std::string> evidence_digests;
    std::string candidate_fingerprint;
    bool single_form = true;  // heuristic: reads as one recommendation, not a list

    std::string digest() const { return sha256_hex(text); }
};

}  // namespace kforge
