#pragma once

#include "kforge/providers.hpp"
#include "kforge/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kforge {

/// Generation agent: prompt in, raw model text out.
/// Throws CapabilityError when the prompt carries images the profile cannot accept.
ModelResponse generate(ModelClient& client, const ProviderProfile& profile, const RenderedPrompt& prompt,
                       const CallContext& ctx);

/// Performance-analysis agent: wraps the model's answer into a Recommendation.
/// Throws CapabilityError for image evidence on a text-only profile, and Error
/// when the model returns no text.
Recommendation analyze_performance(ModelClient& client, const ProviderProfile& profile, const RenderedPrompt& prompt,
                                   const CallContext& ctx);

/// True when the text reads as one recommendation rather than an enumerated list.
bool is_single_recommendation(std::string_view text);

struct FencedBlock {
    std::string language;
    std::string content;
};

/// Every ``` or ~~~ fenced block in order. An unterminated final fence runs to the end.
std::vector<FencedBlock> find_fenced_blocks(std::string_view text);

/**
 * Pulls the program out of a model response.
 *
 * The last fenced block in a source language wins (shell/output/text blocks are
 * skipped unless nothing else exists). Without fences, the whole body is taken
 * when it reads as source code: at least one line opens with a code construct
 * and at most a fifth of the lines read as prose. Returns nullopt otherwise.
 * The extracted source has leading/trailing blank lines stripped and ends in '\n'.
 */
std::optional<Candidate> extract_code(const ModelResponse& response);

}  // namespace kforge
