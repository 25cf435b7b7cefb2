#include "kforge/agents.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

namespace kforge {

namespace {

constexpr std::array kNonSourceLanguages = {"bash", "sh", "shell", "console", "text", "txt",
                                            "output", "log", "plaintext", "json", "diff"};

constexpr std::array kCodeOpeners = {"import ", "from ", "#include", "class ", "def ", "__global__", "kernel void",
                                     "template<", "template <", "using namespace", "@", "return ", "if __name__",
                                     "#pragma", "static ", "struct ", "torch.", "extern \"C\""};

std::string normalize_source(const std::vector<std::string>& lines) {
    std::size_t first = 0, last = lines.size();
    while (first < last && trim(lines[first]).empty()) ++first;
    while (last > first && trim(lines[last - 1]).empty()) --last;
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        std::string line = lines[i];
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out += line;
        out += '\n';
    }
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool opens_with_code(std::string_view line) {
    const auto t = trim(line);
    return std::any_of(kCodeOpeners.begin(), kCodeOpeners.end(), [&](std::string_view op) { return t.starts_with(op); });
}

bool reads_as_prose(std::string_view line) {
    const auto t = trim(line);
    if (t.empty() || !std::isalpha(static_cast<unsigned char>(t.front()))) return false;
    if (t.find_first_of("(){}[];=<>#_") != std::string::npos) return false;
    const auto words = std::count(t.begin(), t.end(), ' ') + 1;
    return words >= 4;
}

}  // namespace

ModelResponse generate(ModelClient& client, const ProviderProfile& profile, const RenderedPrompt& prompt,
                       const CallContext& ctx) {
    if (prompt.has_images() && !profile.supports_images)
        throw CapabilityError("profile '" + profile.name + "' cannot accept image attachments");
    auto c = ctx;
    c.role = AgentRole::generation;
    return client.complete(profile, prompt, c);
}

bool is_single_recommendation(std::string_view text) {
    static const std::regex list_item(R"(^\s*(\d+[.)]|[-*•])\s+)");
    const auto lines = split(text, '\n');
    std::size_t items = 0;
    bool first_seen = false;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        const bool is_item = std::regex_search(line, list_item);
        if (!first_seen) {
            first_seen = true;
            if (is_item) return false;
        }
        if (is_item) ++items;
    }
    return first_seen && items < 2;
}

Recommendation analyze_performance(ModelClient& client, const ProviderProfile& profile, const RenderedPrompt& prompt,
                                   const CallContext& ctx) {
    if (prompt.has_images() && !profile.supports_images)
        throw CapabilityError("profile '" + profile.name + "' is text-only; profiling screenshots need a multimodal model");
    auto c = ctx;
    c.role = AgentRole::analysis;
    const auto response = client.complete(profile, prompt, c);
    Recommendation r;
    r.text = trim(response.raw_text);
    if (r.text.empty()) throw Error("performance analysis returned no recommendation");
    for (const auto& a : prompt.attachments) r.evidence_digests.push_back(a.digest);
    r.candidate_fingerprint = prompt.fingerprint;
    r.single_form = is_single_recommendation(r.text);
    return r;
}

std::vector<FencedBlock> find_fenced_blocks(std::string_view text) {
    std::vector<FencedBlock> blocks;
    std::optional<FencedBlock> open;
    std::string fence;
    std::vector<std::string> body;
    for (const auto& raw : split(text, '\n')) {
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto indent = line.find_first_not_of(' ');
        const auto stripped = indent == std::string_view::npos || indent > 3 ? std::string_view{} : line.substr(indent);
        if (!open) {
            if (stripped.starts_with("```") || stripped.starts_with("~~~")) {
                fence = std::string(stripped.substr(0, 3));
                open = FencedBlock{lower(trim(stripped.substr(3))), {}};
                body.clear();
            }
            continue;
        }
        if (stripped.starts_with(fence) && trim(stripped.substr(3)).empty()) {
            open->content = normalize_source(body);
            blocks.push_back(std::move(*open));
            open.reset();
            continue;
        }
        body.emplace_back(line);
    }
    if (open) {
        open->content = normalize_source(body);
        blocks.push_back(std::move(*open));
    }
    return blocks;
}

std::optional<Candidate> extract_code(const ModelResponse& response) {
    const auto blocks = find_fenced_blocks(response.raw_text);
    std::vector<const FencedBlock*> nonempty;
    for (const auto& b : blocks) {
        if (!b.content.empty()) nonempty.push_back(&b);
    }
    if (!nonempty.empty()) {
        const FencedBlock* pick = nonempty.back();
        for (auto it = nonempty.rbegin(); it != nonempty.rend(); ++it) {
            const auto lang = (*it)->language;
            const bool non_source = std::any_of(kNonSourceLanguages.begin(), kNonSourceLanguages.end(),
                                                [&](std::string_view l) { return lang == l; });
            if (!non_source) {
                pick = *it;
                break;
            }
        }
        Candidate c;
        c.source = pick->content;
        c.extraction = {"fenced_last", blocks.size(), pick->language};
        return c;
    }
    if (!blocks.empty()) return std::nullopt;  // only empty fences

    const auto lines = split(response.raw_text, '\n');
    std::size_t code_openers = 0, prose = 0, nonblank = 0;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        ++nonblank;
        if (opens_with_code(line)) ++code_openers;
        else if (reads_as_prose(line)) ++prose;
    }
    if (nonblank == 0 || code_openers == 0 || prose * 5 > nonblank) return std::nullopt;
    Candidate c;
    c.source = normalize_source(lines);
    c.extraction = {"whole_body", 0, ""};
    return c;
}

}  // namespace kforge
