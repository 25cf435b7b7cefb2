#pragma once

#include "kforge/prompt_engine.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace kforge {

// provider_a: OpenAI-style Responses API; provider_b: Anthropic-style Messages API;
// provider_c: DeepSeek-style chat completions; mock: scripted responses.
enum class Provider { provider_a, provider_b, provider_c, mock };

std::string_view to_string(Provider p) noexcept;
Provider provider_from_string(std::string_view s);

/// API key environment variable for a provider ("" for mock).
std::string_view api_key_env(Provider p) noexcept;

struct ProviderProfile {
    std::string name;  // profile handle, e.g. "claude-opus-4"
    Provider provider = Provider::mock;
    std::string model_name;
    double temperature = 0.0;
    std::optional<std::string> reasoning_effort;
    std::optional<std::int64_t> max_output_tokens;
    std::optional<std::int64_t> max_tokens;
    std::optional<std::int64_t> budget_tokens;
    bool supports_images = false;
    std::string endpoint;     // empty: provider default
    std::string mock_script;  // mock only

    bool operator==(const ProviderProfile&) const = default;
};

/// Profiles for the models used in the published experiments, plus "mock".
const std::map<std::string, ProviderProfile>& builtin_profiles();

/// Builtin name, or a path to a JSON profile document.
ProviderProfile resolve_profile(const std::string& name_or_path);

/// Returns itemized problems; empty when valid.
std::vector<std::string> validate_profile(const ProviderProfile& p);

void to_json(nlohmann::json& j, const ProviderProfile& p);
void from_json(const nlohmann::json& j, ProviderProfile& p);

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

struct ModelResponse {
    std::string raw_text;  // may be empty
    std::optional<TokenUsage> usage;
    std::chrono::milliseconds latency{0};
    std::optional<std::string> provider_request_id;
};

enum class AgentRole { generation, analysis };

/// Identifies a call for scripted providers and log lines.
struct CallContext {
    std::string problem_id;
    AgentRole role = AgentRole::generation;
    int iteration = 0;
    int sample = 0;
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual ModelResponse complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                                   const CallContext& ctx) = 0;
};

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Throws TransportError when no HTTP response could be obtained.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (HTTPS via OpenSSL).
class HttplibTransport : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(600)) : timeout_(timeout) {}
    HttpResponse post(const HttpRequest& request) override;

private:
    std::chrono::seconds timeout_;
};

/// Request body for one provider call. Every Table-style hyperparameter that is
/// set on the profile appears in the payload exactly once.
nlohmann::json build_payload(const ProviderProfile& profile, const RenderedPrompt& prompt);
HttpRequest build_request(const ProviderProfile& profile, const RenderedPrompt& prompt, const std::string& api_key);
ModelResponse parse_provider_response(Provider provider, const std::string& body);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
};

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int count_;
};

/**
 * Talks to the real provider APIs. Transient failures (no response, 408, 429,
 * 5xx) are retried with exponential backoff; other HTTP errors fail at once.
 * An empty completion is returned as-is and never retried.
 */
class HttpModelClient : public ModelClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    using KeyLookup = std::function<std::optional<std::string>(std::string_view env_name)>;

    explicit HttpModelClient(std::shared_ptr<HttpTransport> transport, RetryPolicy retry = {},
                             int max_concurrent_per_provider = 4, Sleeper sleeper = {}, KeyLookup keys = {});

    ModelResponse complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                           const CallContext& ctx) override;

private:
    Semaphore& gate(Provider p);

    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    int cap_;
    Sleeper sleep_;
    KeyLookup keys_;
    std::mutex gates_mu_;
    std::map<Provider, std::unique_ptr<Semaphore>> gates_;
};

/**
 * Scripted provider. Script document:
 *
 *   { "generation": [ {"match": {"ordinal": 0}, "response_text": "..."},
 *                     {"match": {"fingerprint": "<hex>"}, "response_text": "..."} ],
 *     "analysis":   [ ... ],
 *     "problems":   { "<problem id>": { "generation": [...], "analysis": [...] } },
 *     "default_response": { "generation": "...", "analysis": "..." } }
 *
 * Ordinals count calls per (problem, sample, role). Problem-specific records are
 * consulted before global ones and fingerprint matches beat ordinal matches.
 * A record with `"error": "transport"` raises TransportError instead of answering.
 */
class MockModelClient : public ModelClient {
public:
    explicit MockModelClient(nlohmann::json script);
    static std::shared_ptr<MockModelClient> from_file(const fs::path& path);

    ModelResponse complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                           const CallContext& ctx) override;

    std::size_t calls() const;

private:
    nlohmann::json script_;
    mutable std::mutex mu_;
    std::map<std::string, int> ordinals_;
    std::size_t calls_ = 0;
};

/// Dispatches mock profiles to the mock client and everything else to the HTTP client.
class RoutingModelClient : public ModelClient {
public:
    RoutingModelClient(std::shared_ptr<ModelClient> http, std::shared_ptr<ModelClient> mock)
        : http_(std::move(http)), mock_(std::move(mock)) {}
    ModelResponse complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                           const CallContext& ctx) override;

private:
    std::shared_ptr<ModelClient> http_;
    std::shared_ptr<ModelClient> mock_;
};

}  // namespace kforge
