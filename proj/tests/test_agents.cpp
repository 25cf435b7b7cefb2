#include "kforge/agents.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace kforge;
using nlohmann::json;

namespace {

class ScriptedClient : public ModelClient {
public:
    explicit ScriptedClient(std::string text) : text_(std::move(text)) {}
    ModelResponse complete(const ProviderProfile&, const RenderedPrompt&, const CallContext& ctx) override {
        last_role = ctx.role;
        ++calls;
        return ModelResponse{text_, std::nullopt, {}, std::nullopt};
    }
    AgentRole last_role = AgentRole::generation;
    int calls = 0;

private:
    std::string text_;
};

ModelResponse response(std::string text) { return ModelResponse{std::move(text), std::nullopt, {}, std::nullopt}; }

RenderedPrompt prompt_with_image() {
    RenderedPrompt p;
    p.text = "analyze";
    p.attachments.push_back({EvidenceKind::image, "summary.png", "/tmp/x.png", "d-img"});
    p.fingerprint = "fp";
    return p;
}

ProviderProfile text_only() { return resolve_profile("deepseek-r1"); }

}  // namespace

TEST(Extraction, LabelledCorpus) {
    const auto cases = json::parse(read_file(test::fixture_dir() / "extraction" / "cases.json"));
    ASSERT_EQ(cases.size(), 20u);
    for (const auto& c : cases) {
        const auto got = extract_code(response(c["response"].get<std::string>()));
        if (c["expected"].is_null()) {
            EXPECT_FALSE(got.has_value()) << c["name"];
        } else {
            ASSERT_TRUE(got.has_value()) << c["name"];
            EXPECT_EQ(got->source, c["expected"].get<std::string>()) << c["name"];
        }
    }
}

TEST(Extraction, RecordsMethod) {
    auto fenced = extract_code(response("```python\nimport torch\n```\n"));
    ASSERT_TRUE(fenced);
    EXPECT_EQ(fenced->extraction.method, "fenced_last");
    EXPECT_EQ(fenced->extraction.language, "python");
    auto whole = extract_code(response("import torch\nx = 1\n"));
    ASSERT_TRUE(whole);
    EXPECT_EQ(whole->extraction.method, "whole_body");
}

TEST(Extraction, ExtractedSourceEndsWithSingleNewline) {
    auto c = extract_code(response("```\n\n\nimport torch\n\n\n```"));
    ASSERT_TRUE(c);
    EXPECT_EQ(c->source, "import torch\n");
}

TEST(FencedBlocks, FindsAllInOrder) {
    const auto blocks = find_fenced_blocks("a\n```cpp\nint x;\n```\nb\n~~~python\nimport os\n~~~\n");
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].language, "cpp");
    EXPECT_EQ(blocks[0].content, "int x;\n");
    EXPECT_EQ(blocks[1].language, "python");
}

TEST(FencedBlocks, MismatchedFenceDoesNotClose) {
    const auto blocks = find_fenced_blocks("```\na\n~~~\nb\n```\n");
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_EQ(blocks[0].content, "a\n~~~\nb\n");
}

TEST(GenerationAgent, TagsRoleAndPassesThrough) {
    ScriptedClient client("hello");
    RenderedPrompt p;
    p.text = "x";
    CallContext ctx{"level1/problem1", AgentRole::analysis, 1, 0};
    const auto r = generate(client, resolve_profile("mock"), p, ctx);
    EXPECT_EQ(r.raw_text, "hello");
    EXPECT_EQ(client.last_role, AgentRole::generation);
}

TEST(GenerationAgent, ImagesToTextOnlyModelRejectedBeforeCall) {
    ScriptedClient client("x");
    EXPECT_THROW(generate(client, text_only(), prompt_with_image(), {}), CapabilityError);
    EXPECT_EQ(client.calls, 0);
}

TEST(AnalysisAgent, BuildsRecommendation) {
    ScriptedClient client("  Coalesce the global loads in the inner loop.\n");
    auto profile = resolve_profile("claude-opus-4");
    const auto prompt = prompt_with_image();
    const auto r = analyze_performance(client, profile, prompt, {});
    EXPECT_EQ(r.text, "Coalesce the global loads in the inner loop.");
    EXPECT_EQ(r.evidence_digests, std::vector<std::string>{"d-img"});
    EXPECT_EQ(r.candidate_fingerprint, "fp");
    EXPECT_TRUE(r.single_form);
    EXPECT_EQ(client.last_role, AgentRole::analysis);
}

TEST(AnalysisAgent, EmptyAnswerIsError) {
    ScriptedClient client("   \n");
    EXPECT_THROW(analyze_performance(client, resolve_profile("claude-opus-4"), prompt_with_image(), {}), Error);
}

TEST(AnalysisAgent, TextOnlyModelCannotSeeImages) {
    ScriptedClient client("x");
    EXPECT_THROW(analyze_performance(client, text_only(), prompt_with_image(), {}), CapabilityError);
}

TEST(SingleRecommendation, Heuristic) {
    EXPECT_TRUE(is_single_recommendation("Use shared memory tiling for the matmul."));
    EXPECT_TRUE(is_single_recommendation("Tile the loop.\n- detail: 32x32 tiles"));
    EXPECT_FALSE(is_single_recommendation("1. Tile the loop.\n2. Unroll it."));
    EXPECT_FALSE(is_single_recommendation("Suggestions:\n- tile\n- unroll"));
    EXPECT_FALSE(is_single_recommendation(""));
}
