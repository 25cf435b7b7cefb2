#include "kforge/prompt_engine.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace kforge {

namespace {

using Vars = std::map<std::string, std::string, std::less<>>;

constexpr std::string_view kGenerationSections[] = {
    "task", "example", "reference", "problem", "prior_candidate", "feedback_error",
    "feedback_performance", "recommendation", "instructions"};
constexpr std::string_view kAnalysisSections[] = {"analysis_task", "candidate", "evidence", "output_format"};

std::string display_name(Backend b) { return b == Backend::cuda ? "CUDA" : "Metal"; }

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

std::string finish(const std::string& text, const std::vector<Attachment>& attachments) {
    std::string material = text;
    for (const auto& a : attachments) {
        material += '\n';
        material += a.digest;
    }
    return sha256_hex(material);
}

}  // namespace

fs::path default_asset_dir() {
    if (const char* env = std::getenv("KFORGE_ASSET_DIR"); env && *env) return env;
    return KFORGE_ASSET_DIR;
}

OneShotExample load_one_shot(const fs::path& asset_dir, Backend backend) {
    const auto dir = asset_dir / "one_shot" / std::string(to_string(backend));
    return {read_file(dir / "problem.py"), read_file(dir / "solution.py")};
}

bool RenderedPrompt::has_images() const noexcept {
    return std::any_of(attachments.begin(), attachments.end(),
                       [](const Attachment& a) { return a.kind == EvidenceKind::image; });
}

std::map<std::string, std::string, std::less<>> parse_template_sections(std::string_view text,
                                                                        std::string_view file_label) {
    std::map<std::string, std::string, std::less<>> sections;
    std::string* current = nullptr;
    for (const auto& line : split(text, '\n')) {
        if (line.starts_with("@@ #")) continue;
        if (line.starts_with("@@ section ")) {
            const auto name = trim(std::string_view(line).substr(11));
            if (name.empty()) throw ParseError(std::string(file_label), "section without a name");
            if (sections.contains(name))
                throw ParseError(std::string(file_label), "duplicate section '" + name + "'");
            current = &sections[name];
            continue;
        }
        if (!current) {
            if (!trim(line).empty())
                throw ParseError(std::string(file_label), "text outside of any section: " + line);
            continue;
        }
        *current += line;
        *current += '\n';
    }
    for (auto& [name, body] : sections) {
        // drop trailing blank lines so section spacing is controlled by the renderer
        while (body.size() >= 2 && body.ends_with("\n\n")) body.pop_back();
    }
    return sections;
}

std::string substitute(std::string_view body, const Vars& vars) {
    std::string out;
    out.reserve(body.size());
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(body.substr(pos));
            break;
        }
        const auto close = body.find("}}", open + 2);
        if (close == std::string_view::npos) throw RenderError(std::string(body.substr(open)));
        out.append(body.substr(pos, open - pos));
        const auto name = trim(body.substr(open + 2, close - open - 2));
        auto it = vars.find(name);
        if (it == vars.end()) throw RenderError(name);
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

TemplateSet TemplateSet::load(const fs::path& dir) {
    TemplateSet set;
    for (const auto& [file, required] :
         {std::pair{std::string("generation"), std::span<const std::string_view>(kGenerationSections)},
          std::pair{std::string("analysis"), std::span<const std::string_view>(kAnalysisSections)}}) {
        const auto path = dir / (file + ".tmpl");
        auto sections = parse_template_sections(read_file(path), path.filename().string());
        for (auto name : required) {
            if (!sections.contains(name))
                throw LoadError(path.string() + ": missing section '" + std::string(name) + "'");
        }
        set.files_[file] = std::move(sections);
    }
    return set;
}

TemplateSet TemplateSet::load_default() { return load(default_asset_dir() / "templates"); }

bool TemplateSet::has_section(std::string_view file, std::string_view name) const {
    auto f = files_.find(file);
    return f != files_.end() && f->second.find(name) != f->second.end();
}

const std::string& TemplateSet::section(std::string_view file, std::string_view name) const {
    auto f = files_.find(file);
    if (f == files_.end()) throw LoadError("template file not loaded: " + std::string(file));
    auto s = f->second.find(name);
    if (s == f->second.end()) throw LoadError("template section not found: " + std::string(name));
    return s->second;
}

std::size_t estimate_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

std::string truncate_feedback(std::string_view transcript, std::size_t budget_tokens) {
    if (budget_tokens == 0) throw PreconditionError("truncate_feedback: budget must be positive");
    const std::size_t max_chars = budget_tokens * 4;
    if (transcript.size() <= max_chars) return std::string(transcript);

    std::size_t elided = transcript.size() - max_chars;
    std::string marker;
    std::size_t keep = 0;
    for (int pass = 0; pass < 3; ++pass) {
        marker = fmt::format("\n[... {} characters elided ...]\n", elided);
        if (marker.size() + 2 > max_chars) {
            // budget too small for a marker: hard cut on a code point boundary
            std::size_t cut = max_chars;
            while (cut > 0 && is_continuation(static_cast<unsigned char>(transcript[cut]))) --cut;
            return std::string(transcript.substr(0, cut));
        }
        keep = max_chars - marker.size();
        elided = transcript.size() - keep;
    }

    std::size_t head = (keep + 1) / 2;
    std::size_t tail_start = transcript.size() - (keep - head);
    while (head > 0 && is_continuation(static_cast<unsigned char>(transcript[head]))) --head;
    while (tail_start < transcript.size() && is_continuation(static_cast<unsigned char>(transcript[tail_start])))
        ++tail_start;
    std::string out;
    while (true) {
        marker = fmt::format("\n[... {} characters elided ...]\n", tail_start - head);
        if (head + marker.size() + (transcript.size() - tail_start) <= max_chars) break;
        ++tail_start;
        while (tail_start < transcript.size() &&
               is_continuation(static_cast<unsigned char>(transcript[tail_start])))
            ++tail_start;
    }
    out.reserve(max_chars);
    out.append(transcript.substr(0, head));
    out.append(marker);
    out.append(transcript.substr(tail_start));
    return out;
}

std::string timing_summary(const EvalReport& report) {
    if (!report.candidate_timing) return "no timing data";
    const auto ms = [](double ns) { return ns / 1e6; };
    const auto& c = *report.candidate_timing;
    std::string out = fmt::format("candidate mean {:.4f} ms (median {:.4f} ms, std {:.4f} ms, {} runs)", ms(c.mean_ns),
                                  ms(c.median_ns), ms(c.std_ns), c.samples_ns.size());
    if (report.baseline_timing) {
        const auto& b = *report.baseline_timing;
        out += fmt::format("; {} baseline mean {:.4f} ms", to_string(report.baseline_kind), ms(b.mean_ns));
    }
    if (report.speedup) out += fmt::format("; speedup {:.3f}x", *report.speedup);
    return out;
}

RenderedPrompt TemplateSet::render_generation(const PromptSpec& spec) const {
    if (spec.mode == PromptMode::refinement && !spec.prior)
        throw PreconditionError("refinement prompt requires a prior candidate and evaluation");
    if (trim(spec.one_shot.solution_source).empty())
        throw PreconditionError("generation prompt requires a one-shot example");

    Vars vars{
        {"backend", std::string(to_string(spec.backend))},
        {"backend_display", display_name(spec.backend)},
        {"example_problem", spec.one_shot.problem_source},
        {"example_solution", spec.one_shot.solution_source},
        {"problem_id", spec.problem.id},
        {"problem_name", spec.problem.name},
        {"problem_source", spec.problem.reference_source},
        {"task_instructions", spec.task_instructions},
    };
    if (spec.reference) {
        vars["reference_source"] = spec.reference->source;
        vars["reference_backend"] = display_name(spec.reference->origin_backend);
    }
    bool correct_prior = false;
    if (spec.prior) {
        const auto& [cand, report] = *spec.prior;
        correct_prior = report.state == ExecState::correct;
        vars["prior_iteration"] = std::to_string(cand.iteration);
        vars["prior_source"] = cand.source.empty() ? "(the previous response contained no program)" : cand.source;
        vars["prior_state"] = std::string(to_string(report.state));
        std::string transcript = report.raw.failure_transcript();
        if (report.state == ExecState::generation_failure) transcript = report.note;
        if (report.state == ExecState::output_mismatch && trim(transcript).empty()) {
            transcript = fmt::format("outputs differ from the reference: shape_ok={}, max_abs_dev={}, max_rel_dev={}",
                                     report.raw.shape_ok.value_or(true), report.raw.max_abs_dev,
                                     report.raw.max_rel_dev);
        }
        vars["error_transcript"] = truncate_feedback(transcript, spec.feedback_budget_tokens);
        vars["timing_summary"] = timing_summary(report);
    }
    if (spec.recommendation) vars["recommendation"] = spec.recommendation->text;

    std::vector<std::string_view> order{"task", "example"};
    if (spec.reference) order.push_back("reference");
    order.push_back("problem");
    if (spec.mode == PromptMode::refinement) {
        order.push_back("prior_candidate");
        if (correct_prior) {
            order.push_back("feedback_performance");
            if (spec.recommendation) order.push_back("recommendation");
        } else {
            order.push_back("feedback_error");
        }
    }
    order.push_back("instructions");

    RenderedPrompt out;
    for (auto name : order) {
        out.text += fmt::format("--- begin:{} ---\n", name);
        out.text += substitute(section("generation", name), vars);
        if (!out.text.ends_with('\n')) out.text += '\n';
        out.text += fmt::format("--- end:{} ---\n\n", name);
    }
    out.fingerprint = finish(out.text, out.attachments);
    return out;
}

RenderedPrompt TemplateSet::render_analysis(const Candidate& candidate, const ProfileBundle& bundle) const {
    if (bundle.empty()) throw PreconditionError("analysis prompt requires at least one profiling item");

    std::string listing;
    for (std::size_t i = 0; i < bundle.items.size(); ++i) {
        const auto& item = bundle.items[i];
        listing += fmt::format("{}. [{}] {}\n", i + 1, item.kind == EvidenceKind::image ? "image" : "table", item.title);
    }
    Vars vars{
        {"backend", std::string(to_string(bundle.source_backend))},
        {"backend_display", display_name(bundle.source_backend)},
        {"candidate_source", candidate.source},
        {"evidence_list", listing},
    };

    RenderedPrompt out;
    for (auto name : kAnalysisSections) {
        out.text += fmt::format("--- begin:{} ---\n", name);
        out.text += substitute(section("analysis", name), vars);
        if (!out.text.ends_with('\n')) out.text += '\n';
        out.text += fmt::format("--- end:{} ---\n\n", name);
    }
    for (const auto& item : bundle.items) {
        out.attachments.push_back({item.kind, item.title, item.payload, item.digest});
    }
    out.fingerprint = finish(out.text, out.attachments);
    return out;
}

RenderedPrompt render_generation_prompt(const PromptSpec& spec, const TemplateSet& templates) {
    return templates.render_generation(spec);
}

RenderedPrompt render_analysis_prompt(const Candidate& candidate, const ProfileBundle& bundle,
                                      const TemplateSet& templates) {
    return templates.render_analysis(candidate, bundle);
}

}  // namespace kforge
