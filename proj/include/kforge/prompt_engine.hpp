#pragma once

#include "kforge/problem_store.hpp"
#include "kforge/profiling.hpp"
#include "kforge/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kforge {

enum class PromptMode { single_shot, refinement };

struct OneShotExample {
    std::string problem_source;
    std::string solution_source;
};

/// Reads `<asset_dir>/one_shot/<backend>/{problem,solution}.py`.
OneShotExample load_one_shot(const fs::path& asset_dir, Backend backend);

fs::path default_asset_dir();

struct PromptSpec {
    PromptMode mode = PromptMode::single_shot;
    Backend backend = Backend::cuda;
    Problem problem;
    OneShotExample one_shot;
    std::optional<ReferenceImpl> reference;
    std::optional<std::pair<Candidate, EvalReport>> prior;
    std::optional<Recommendation> recommendation;
    std::string task_instructions;
    std::size_t feedback_budget_tokens = 4000;
};

struct Attachment {
    EvidenceKind kind = EvidenceKind::text_table;
    std::string title;
    std::string content;  // text, or the image path
    std::string digest;
};

struct RenderedPrompt {
    std::string text;
    std::string fingerprint;
    std::vector<Attachment> attachments;

    bool has_images() const noexcept;
};

/**
 * Prompt templates loaded from a directory holding `generation.tmpl` and
 * `analysis.tmpl`.
 *
 * A template file is a sequence of named sections. A line `@@ section <name>`
 * opens a section, lines starting with `@@ #` are comments, and `{{ name }}`
 * placeholders are substituted at render time. Each rendered section is
 * wrapped in `--- begin:<name> ---` / `--- end:<name> ---` markers.
 */
class TemplateSet {
public:
    static TemplateSet load(const fs::path& dir);
    static TemplateSet load_default();

    const std::string& section(std::string_view file, std::string_view name) const;
    bool has_section(std::string_view file, std::string_view name) const;

    RenderedPrompt render_generation(const PromptSpec& spec) const;
    RenderedPrompt render_analysis(const Candidate& candidate, const ProfileBundle& bundle) const;

private:
    std::map<std::string, std::map<std::string, std::string, std::less<>>, std::less<>> files_;
};

std::map<std::string, std::string, std::less<>> parse_template_sections(std::string_view text,
                                                                        std::string_view file_label);

/// Substitutes `{{ name }}` placeholders. Throws RenderError naming the first unresolved one.
std::string substitute(std::string_view body, const std::map<std::string, std::string, std::less<>>& vars);

RenderedPrompt render_generation_prompt(const PromptSpec& spec, const TemplateSet& templates);
RenderedPrompt render_analysis_prompt(const Candidate& candidate, const ProfileBundle& bundle,
                                      const TemplateSet& templates);

/// Rough token estimate: ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text) noexcept;

/// Keeps the head and tail of an over-budget transcript around an elision marker.
std::string truncate_feedback(std::string_view transcript, std::size_t budget_tokens);

/// Human-readable timing line used in optimization feedback.
std::string timing_summary(const EvalReport& report);

}  // namespace kforge
