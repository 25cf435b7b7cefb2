#include "kforge/providers.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

using namespace kforge;
using nlohmann::json;

namespace {

RenderedPrompt text_prompt(std::string text = "write a kernel") {
    RenderedPrompt p;
    p.text = std::move(text);
    p.fingerprint = sha256_hex(p.text);
    return p;
}

class FakeTransport : public HttpTransport {
public:
    std::vector<HttpResponse> replies;  // consumed in order; status 0 means "throw"
    std::vector<HttpRequest> seen;
    std::atomic<int> in_flight{0}, max_in_flight{0};
    std::chrono::milliseconds hold{0};

    HttpResponse post(const HttpRequest& r) override {
        const int now = ++in_flight;
        int prev = max_in_flight.load();
        while (now > prev && !max_in_flight.compare_exchange_weak(prev, now)) {
        }
        if (hold.count()) std::this_thread::sleep_for(hold);
        HttpResponse out{200, R"({"content":[{"type":"text","text":"ok"}]})"};
        {
            std::lock_guard lock(mu);
            seen.push_back(r);
            if (!replies.empty()) {
                out = replies.front();
                replies.erase(replies.begin());
            }
        }
        --in_flight;
        if (out.status == 0) throw TransportError("connection reset");
        return out;
    }
    std::mutex mu;
};

HttpModelClient make_client(std::shared_ptr<FakeTransport> t, std::vector<std::chrono::milliseconds>* sleeps,
                            int cap = 4) {
    return HttpModelClient(
        t, RetryPolicy{3, std::chrono::milliseconds(100)}, cap,
        [sleeps](std::chrono::milliseconds d) {
            if (sleeps) sleeps->push_back(d);
        },
        [](std::string_view) -> std::optional<std::string> { return "test-key"; });
}

}  // namespace

TEST(Profiles, BuiltinHyperparameters) {
    const auto opus = resolve_profile("claude-opus-4");
    EXPECT_EQ(opus.provider, Provider::provider_b);
    EXPECT_EQ(opus.temperature, 0.0);
    EXPECT_EQ(opus.max_tokens, 16384);
    EXPECT_EQ(opus.budget_tokens, 8192);
    const auto o3 = resolve_profile("openai-o3");
    EXPECT_EQ(o3.reasoning_effort, "high");
    EXPECT_FALSE(o3.max_output_tokens.has_value());
    const auto r1 = resolve_profile("deepseek-r1");
    EXPECT_EQ(r1.max_tokens, 20000);
    EXPECT_FALSE(r1.supports_images);
    for (const auto& [name, p] : builtin_profiles()) {
        if (p.provider == Provider::mock) continue;
        EXPECT_TRUE(validate_profile(p).empty()) << name;
        EXPECT_EQ(p.temperature, 0.0) << name;
    }
}

TEST(Profiles, JsonRoundTripAndFileResolution) {
    test::TempDir dir("prof");
    auto p = resolve_profile("claude-opus-4");
    p.name = "custom";
    write_file(dir / "p.json", json(p).dump());
    EXPECT_EQ(resolve_profile((dir / "p.json").string()), p);
    EXPECT_THROW(resolve_profile("no-such-model"), ConfigError);
}

TEST(Profiles, ValidationCatchesBadBudgets) {
    auto p = resolve_profile("claude-opus-4");
    p.budget_tokens = 20000;
    EXPECT_FALSE(validate_profile(p).empty());
    p = resolve_profile("deepseek-v3");
    p.reasoning_effort = "high";
    EXPECT_FALSE(validate_profile(p).empty());
}

TEST(Payload, EachHyperparameterAppearsOnce) {
    const auto prompt = text_prompt();
    const auto a = build_payload(resolve_profile("openai-o3"), prompt);
    EXPECT_EQ(a["reasoning"]["effort"], "high");
    EXPECT_EQ(a["temperature"], 0.0);
    EXPECT_FALSE(a.contains("max_output_tokens"));
    const auto b = build_payload(resolve_profile("claude-opus-4"), prompt);
    EXPECT_EQ(b["max_tokens"], 16384);
    EXPECT_EQ(b["thinking"]["budget_tokens"], 8192);
    const auto c = build_payload(resolve_profile("deepseek-r1"), prompt);
    EXPECT_EQ(c["model"], "deepseek-reasoner");
    EXPECT_EQ(c["max_tokens"], 20000);
    EXPECT_EQ(c["messages"][0]["content"], "write a kernel");
}

TEST(Payload, ImagesEncodedForMultimodalRejectedForTextOnly) {
    test::TempDir dir("img");
    write_file(dir / "summary.png", "PNGDATA");
    auto prompt = text_prompt();
    prompt.attachments.push_back({EvidenceKind::image, "summary.png", (dir / "summary.png").string(), "d"});
    prompt.attachments.push_back({EvidenceKind::text_table, "kern", "a,b\n", "d2"});
    const auto b = build_payload(resolve_profile("claude-opus-4"), prompt);
    EXPECT_EQ(b["messages"][0]["content"][1]["source"]["data"], base64_encode("PNGDATA"));
    EXPECT_EQ(b["messages"][0]["content"][2]["text"], "[kern]\na,b\n");
    const auto a = build_payload(resolve_profile("openai-gpt-5"), prompt);
    EXPECT_EQ(a["input"][0]["content"][1]["image_url"], "data:image/png;base64," + base64_encode("PNGDATA"));
    EXPECT_THROW(build_payload(resolve_profile("deepseek-r1"), prompt), CapabilityError);
}

TEST(Request, AuthHeadersPerProvider) {
    const auto b = build_request(resolve_profile("claude-opus-4"), text_prompt(), "k");
    EXPECT_EQ(b.url, "https://api.anthropic.com/v1/messages");
    EXPECT_NE(std::find(b.headers.begin(), b.headers.end(), std::pair<std::string, std::string>{"x-api-key", "k"}),
              b.headers.end());
    const auto a = build_request(resolve_profile("openai-o3"), text_prompt(), "k");
    EXPECT_NE(
        std::find(a.headers.begin(), a.headers.end(), std::pair<std::string, std::string>{"authorization", "Bearer k"}),
        a.headers.end());
}

TEST(ResponseParsing, AllProviders) {
    auto a = parse_provider_response(
        Provider::provider_a,
        R"({"id":"r1","output":[{"type":"reasoning"},{"type":"message","content":[{"type":"output_text","text":"A"}]}],"usage":{"input_tokens":3,"output_tokens":4}})");
    EXPECT_EQ(a.raw_text, "A");
    EXPECT_EQ(a.provider_request_id, "r1");
    ASSERT_TRUE(a.usage);
    EXPECT_EQ(a.usage->output_tokens, 4);
    auto b = parse_provider_response(Provider::provider_b,
                                     R"({"content":[{"type":"thinking","thinking":"x"},{"type":"text","text":"B"}]})");
    EXPECT_EQ(b.raw_text, "B");
    auto c = parse_provider_response(Provider::provider_c, R"({"choices":[{"message":{"content":"C"}}]})");
    EXPECT_EQ(c.raw_text, "C");
    EXPECT_THROW(parse_provider_response(Provider::provider_b, "not json"), TransportError);
}

TEST(HttpClient, RetriesTransientWithExponentialBackoff) {
    auto t = std::make_shared<FakeTransport>();
    t->replies = {{0, ""}, {503, "busy"}, {200, R"({"content":[{"type":"text","text":"done"}]})"}};
    std::vector<std::chrono::milliseconds> sleeps;
    auto client = make_client(t, &sleeps);
    const auto r = client.complete(resolve_profile("claude-opus-4"), text_prompt(), {});
    EXPECT_EQ(r.raw_text, "done");
    EXPECT_EQ(t->seen.size(), 3u);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                                std::chrono::milliseconds(200)}));
}

TEST(HttpClient, GivesUpAfterAttempts) {
    auto t = std::make_shared<FakeTransport>();
    t->replies = {{429, ""}, {429, ""}, {429, ""}, {200, "{}"}};
    auto client = make_client(t, nullptr);
    EXPECT_THROW(client.complete(resolve_profile("claude-opus-4"), text_prompt(), {}), TransportError);
    EXPECT_EQ(t->seen.size(), 3u);
}

TEST(HttpClient, ClientErrorsAreNotRetried) {
    auto t = std::make_shared<FakeTransport>();
    t->replies = {{400, "bad request"}};
    auto client = make_client(t, nullptr);
    EXPECT_THROW(client.complete(resolve_profile("claude-opus-4"), text_prompt(), {}), TransportError);
    EXPECT_EQ(t->seen.size(), 1u);
}

TEST(HttpClient, EmptyCompletionIsReturnedNotRetried) {
    auto t = std::make_shared<FakeTransport>();
    t->replies = {{200, R"({"content":[]})"}};
    auto client = make_client(t, nullptr);
    EXPECT_EQ(client.complete(resolve_profile("claude-opus-4"), text_prompt(), {}).raw_text, "");
    EXPECT_EQ(t->seen.size(), 1u);
}

TEST(HttpClient, MissingKeyIsConfigError) {
    auto t = std::make_shared<FakeTransport>();
    HttpModelClient client(t, {}, 4, [](auto) {}, [](std::string_view) -> std::optional<std::string> { return {}; });
    EXPECT_THROW(client.complete(resolve_profile("claude-opus-4"), text_prompt(), {}), ConfigError);
    EXPECT_TRUE(t->seen.empty());
}

TEST(HttpClient, PerProviderConcurrencyCap) {
    auto t = std::make_shared<FakeTransport>();
    t->hold = std::chrono::milliseconds(20);
    auto client = make_client(t, nullptr, 2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] { client.complete(resolve_profile("claude-opus-4"), text_prompt(), {}); });
    for (auto& th : threads) th.join();
    EXPECT_EQ(t->seen.size(), 8u);
    EXPECT_LE(t->max_in_flight.load(), 2);
}

TEST(MockClient, OrdinalsFingerprintsAndDefaults) {
    const auto p = text_prompt("special");
    MockModelClient mock(json{
        {"generation", {{{"match", {{"ordinal", 0}}}, {"response_text", "first"}},
                        {{"match", {{"fingerprint", p.fingerprint}}}, {"response_text", "by-fp"}}}},
        {"problems", {{"level1/problem2", {{"generation", {{{"match", {{"ordinal", 0}}}, {"response_text", "p2"}}}}}}}},
        {"default_response", {{"generation", "dflt"}, {"analysis", "an"}}}});
    const auto profile = resolve_profile("mock");
    CallContext a{"level1/problem1", AgentRole::generation, 1, 0};
    EXPECT_EQ(mock.complete(profile, text_prompt("x"), a).raw_text, "first");
    EXPECT_EQ(mock.complete(profile, text_prompt("y"), a).raw_text, "dflt");
    EXPECT_EQ(mock.complete(profile, p, a).raw_text, "by-fp");
    CallContext b{"level1/problem2", AgentRole::generation, 1, 0};
    EXPECT_EQ(mock.complete(profile, text_prompt("x"), b).raw_text, "p2");
    CallContext c{"level1/problem1", AgentRole::analysis, 1, 0};
    EXPECT_EQ(mock.complete(profile, text_prompt("x"), c).raw_text, "an");
    EXPECT_EQ(mock.calls(), 5u);
}

TEST(MockClient, ScriptedTransportFailure) {
    MockModelClient mock(json{{"generation", {{{"match", {{"ordinal", 0}}}, {"error", "transport"}}}}});
    EXPECT_THROW(mock.complete(resolve_profile("mock"), text_prompt(), {}), TransportError);
}

TEST(RoutingClient, MockWithoutScriptIsConfigError) {
    RoutingModelClient r(nullptr, nullptr);
    EXPECT_THROW(r.complete(resolve_profile("mock"), text_prompt(), {}), ConfigError);
}
