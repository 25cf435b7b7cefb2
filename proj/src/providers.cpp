#include "kforge/providers.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

namespace kforge {

using json = nlohmann::json;

namespace {

constexpr std::string_view kDefaultEndpoint[] = {
    "https://api.openai.com/v1/responses",
    "https://api.anthropic.com/v1/messages",
    "https://api.deepseek.com/chat/completions",
    "",
};

std::string attachment_text(const Attachment& a) { return "[" + a.title + "]\n" + a.content; }

std::string image_base64(const Attachment& a) { return base64_encode(read_file(a.content)); }

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

}  // namespace

std::string_view to_string(Provider p) noexcept {
    switch (p) {
        case Provider::provider_a: return "provider_a";
        case Provider::provider_b: return "provider_b";
        case Provider::provider_c: return "provider_c";
        case Provider::mock: return "mock";
    }
    return "unknown";
}

Provider provider_from_string(std::string_view s) {
    for (auto p : {Provider::provider_a, Provider::provider_b, Provider::provider_c, Provider::mock}) {
        if (to_string(p) == s) return p;
    }
    throw ParseError("provider", "unknown provider '" + std::string(s) + "'");
}

std::string_view api_key_env(Provider p) noexcept {
    switch (p) {
        case Provider::provider_a: return "KFORGE_PROVIDER_A_KEY";
        case Provider::provider_b: return "KFORGE_PROVIDER_B_KEY";
        case Provider::provider_c: return "KFORGE_PROVIDER_C_KEY";
        case Provider::mock: return "";
    }
    return "";
}

const std::map<std::string, ProviderProfile>& builtin_profiles() {
    static const std::map<std::string, ProviderProfile> profiles = [] {
        std::map<std::string, ProviderProfile> m;
        auto add = [&](ProviderProfile p) { m.emplace(p.name, std::move(p)); };
        // Reasoning models on provider A: high effort, no output ceiling.
        add({.name = "openai-gpt-5", .provider = Provider::provider_a, .model_name = "gpt-5-2025-08-07",
             .reasoning_effort = "high", .supports_images = true});
        add({.name = "openai-o3", .provider = Provider::provider_a, .model_name = "o3-2025-04-16",
             .reasoning_effort = "high", .supports_images = true});
        add({.name = "openai-gpt-4o", .provider = Provider::provider_a, .model_name = "gpt-4o-2024-11-20",
             .supports_images = true});
        add({.name = "openai-gpt-4.1", .provider = Provider::provider_a, .model_name = "gpt-4.1-2025-04-14",
             .supports_images = true});
        // Provider B: budget_tokens is half of max_tokens for the reasoning model.
        add({.name = "claude-opus-4", .provider = Provider::provider_b, .model_name = "claude-opus-4-20250514",
             .max_tokens = 16384, .budget_tokens = 8192, .supports_images = true});
        add({.name = "claude-sonnet-4", .provider = Provider::provider_b, .model_name = "claude-sonnet-4-20250514",
             .max_tokens = 16384, .supports_images = true});
        // Provider C models are text-only.
        add({.name = "deepseek-r1", .provider = Provider::provider_c, .model_name = "deepseek-reasoner",
             .max_tokens = 20000, .supports_images = false});
        add({.name = "deepseek-v3", .provider = Provider::provider_c, .model_name = "deepseek-chat",
             .max_tokens = 20000, .supports_images = false});
        add({.name = "mock", .provider = Provider::mock, .model_name = "mock", .supports_images = true});
        add({.name = "mock-text", .provider = Provider::mock, .model_name = "mock-text", .supports_images = false});
        return m;
    }();
    return profiles;
}

ProviderProfile resolve_profile(const std::string& name_or_path) {
    const auto& builtins = builtin_profiles();
    if (auto it = builtins.find(name_or_path); it != builtins.end()) return it->second;
    if (fs::exists(name_or_path)) {
        try {
            return json::parse(read_file(name_or_path)).get<ProviderProfile>();
        } catch (const json::exception& e) {
            throw ParseError(name_or_path, e.what());
        }
    }
    throw ConfigError({"unknown model profile '" + name_or_path + "'"});
}

std::vector<std::string> validate_profile(const ProviderProfile& p) {
    std::vector<std::string> problems;
    const auto label = "profile '" + p.name + "': ";
    if (p.model_name.empty()) problems.push_back(label + "model_name is empty");
    if (p.temperature < 0.0 || p.temperature > 2.0) problems.push_back(label + "temperature out of range");
    if (p.budget_tokens && (!p.max_tokens || *p.budget_tokens > *p.max_tokens))
        problems.push_back(label + "budget_tokens requires max_tokens >= budget_tokens");
    if (p.provider == Provider::provider_b && !p.max_tokens)
        problems.push_back(label + "provider_b requires max_tokens");
    if (p.reasoning_effort && p.provider != Provider::provider_a && p.provider != Provider::mock)
        problems.push_back(label + "reasoning_effort is only meaningful for provider_a");
    if (p.provider == Provider::mock && p.mock_script.empty())
        problems.push_back(label + "mock profile needs a script (--mock-script)");
    return problems;
}

void to_json(json& j, const ProviderProfile& p) {
    j = json{{"name", p.name},
             {"provider", std::string(to_string(p.provider))},
             {"model_name", p.model_name},
             {"temperature", p.temperature},
             {"supports_images", p.supports_images}};
    if (p.reasoning_effort) j["reasoning_effort"] = *p.reasoning_effort;
    if (p.max_output_tokens) j["max_output_tokens"] = *p.max_output_tokens;
    if (p.max_tokens) j["max_tokens"] = *p.max_tokens;
    if (p.budget_tokens) j["budget_tokens"] = *p.budget_tokens;
    if (!p.endpoint.empty()) j["endpoint"] = p.endpoint;
    if (!p.mock_script.empty()) j["mock_script"] = p.mock_script;
}

void from_json(const json& j, ProviderProfile& p) {
    p = ProviderProfile{};
    p.name = j.value("name", "");
    p.provider = provider_from_string(j.at("provider").get<std::string>());
    p.model_name = j.at("model_name").get<std::string>();
    p.temperature = j.value("temperature", 0.0);
    p.supports_images = j.value("supports_images", false);
    if (j.contains("reasoning_effort")) p.reasoning_effort = j["reasoning_effort"].get<std::string>();
    if (j.contains("max_output_tokens")) p.max_output_tokens = j["max_output_tokens"].get<std::int64_t>();
    if (j.contains("max_tokens")) p.max_tokens = j["max_tokens"].get<std::int64_t>();
    if (j.contains("budget_tokens")) p.budget_tokens = j["budget_tokens"].get<std::int64_t>();
    p.endpoint = j.value("endpoint", "");
    p.mock_script = j.value("mock_script", "");
}

json build_payload(const ProviderProfile& profile, const RenderedPrompt& prompt) {
    switch (profile.provider) {
        case Provider::provider_a: {
            json content = json::array({{{"type", "input_text"}, {"text", prompt.text}}});
            for (const auto& a : prompt.attachments) {
                if (a.kind == EvidenceKind::image) {
                    content.push_back({{"type", "input_image"},
                                       {"image_url", "data:image/png;base64," + image_base64(a)}});
                } else {
                    content.push_back({{"type", "input_text"}, {"text", attachment_text(a)}});
                }
            }
            json body{{"model", profile.model_name},
                      {"input", json::array({{{"role", "user"}, {"content", content}}})},
                      {"temperature", profile.temperature}};
            if (profile.reasoning_effort) body["reasoning"] = {{"effort", *profile.reasoning_effort}};
            if (profile.max_output_tokens) body["max_output_tokens"] = *profile.max_output_tokens;
            return body;
        }
        case Provider::provider_b: {
            json content = json::array({{{"type", "text"}, {"text", prompt.text}}});
            for (const auto& a : prompt.attachments) {
                if (a.kind == EvidenceKind::image) {
                    content.push_back({{"type", "image"},
                                       {"source",
                                        {{"type", "base64"}, {"media_type", "image/png"}, {"data", image_base64(a)}}}});
                } else {
                    content.push_back({{"type", "text"}, {"text", attachment_text(a)}});
                }
            }
            json body{{"model", profile.model_name},
                      {"messages", json::array({{{"role", "user"}, {"content", content}}})},
                      {"temperature", profile.temperature}};
            if (profile.max_tokens) body["max_tokens"] = *profile.max_tokens;
            if (profile.budget_tokens)
                body["thinking"] = {{"type", "enabled"}, {"budget_tokens", *profile.budget_tokens}};
            return body;
        }
        case Provider::provider_c: {
            std::string text = prompt.text;
            for (const auto& a : prompt.attachments) {
                if (a.kind == EvidenceKind::image)
                    throw CapabilityError("provider_c accepts text only; got image '" + a.title + "'");
                text += "\n\n" + attachment_text(a);
            }
            json body{{"model", profile.model_name},
                      {"messages", json::array({{{"role", "user"}, {"content", text}}})},
                      {"temperature", profile.temperature}};
            if (profile.max_tokens) body["max_tokens"] = *profile.max_tokens;
            return body;
        }
        case Provider::mock: break;
    }
    throw PreconditionError("mock profiles have no HTTP payload");
}

HttpRequest build_request(const ProviderProfile& profile, const RenderedPrompt& prompt, const std::string& api_key) {
    HttpRequest req;
    req.url = profile.endpoint.empty() ? std::string(kDefaultEndpoint[static_cast<int>(profile.provider)])
                                       : profile.endpoint;
    req.body = build_payload(profile, prompt).dump();
    req.headers.emplace_back("content-type", "application/json");
    if (profile.provider == Provider::provider_b) {
        req.headers.emplace_back("x-api-key", api_key);
        req.headers.emplace_back("anthropic-version", "2023-06-01");
    } else {
        req.headers.emplace_back("authorization", "Bearer " + api_key);
    }
    return req;
}

ModelResponse parse_provider_response(Provider provider, const std::string& body) {
    ModelResponse r;
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("unparseable provider response: ") + e.what());
    }
    if (doc.contains("id") && doc["id"].is_string()) r.provider_request_id = doc["id"].get<std::string>();

    switch (provider) {
        case Provider::provider_a:
            if (doc.contains("output_text") && doc["output_text"].is_string()) {
                r.raw_text = doc["output_text"].get<std::string>();
            } else {
                for (const auto& item : doc.value("output", json::array())) {
                    if (item.value("type", "") != "message") continue;
                    for (const auto& c : item.value("content", json::array())) {
                        if (c.value("type", "") == "output_text") r.raw_text += c.value("text", "");
                    }
                }
            }
            if (doc.contains("usage"))
                r.usage = TokenUsage{doc["usage"].value("input_tokens", 0LL), doc["usage"].value("output_tokens", 0LL)};
            break;
        case Provider::provider_b:
            for (const auto& c : doc.value("content", json::array())) {
                if (c.value("type", "") == "text") r.raw_text += c.value("text", "");
            }
            if (doc.contains("usage"))
                r.usage = TokenUsage{doc["usage"].value("input_tokens", 0LL), doc["usage"].value("output_tokens", 0LL)};
            break;
        case Provider::provider_c:
            if (doc.contains("choices") && !doc["choices"].empty()) {
                const auto& msg = doc["choices"][0].value("message", json::object());
                if (msg.contains("content") && msg["content"].is_string()) r.raw_text = msg["content"].get<std::string>();
            }
            if (doc.contains("usage"))
                r.usage = TokenUsage{doc["usage"].value("prompt_tokens", 0LL),
                                     doc["usage"].value("completion_tokens", 0LL)};
            break;
        case Provider::mock: break;
    }
    return r;
}

HttpResponse HttplibTransport::post(const HttpRequest& request) {
    const auto [base, path] = split_url(request.url);
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(timeout_);
    client.set_write_timeout(std::chrono::seconds(60));
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "content-type") content_type = v;
        else headers.emplace(k, v);
    }
    auto res = client.Post(path, headers, request.body, content_type);
    if (!res) throw TransportError("request to " + base + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

void Semaphore::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
}

void Semaphore::release() {
    {
        std::lock_guard lock(mu_);
        ++count_;
    }
    cv_.notify_one();
}

HttpModelClient::HttpModelClient(std::shared_ptr<HttpTransport> transport, RetryPolicy retry,
                                 int max_concurrent_per_provider, Sleeper sleeper, KeyLookup keys)
    : transport_(std::move(transport)),
      retry_(retry),
      cap_(std::max(1, max_concurrent_per_provider)),
      sleep_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      keys_(keys ? std::move(keys) : KeyLookup([](std::string_view env) -> std::optional<std::string> {
          if (const char* v = std::getenv(std::string(env).c_str()); v && *v) return std::string(v);
          return std::nullopt;
      })) {}

Semaphore& HttpModelClient::gate(Provider p) {
    std::lock_guard lock(gates_mu_);
    auto& g = gates_[p];
    if (!g) g = std::make_unique<Semaphore>(cap_);
    return *g;
}

ModelResponse HttpModelClient::complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                                        const CallContext& ctx) {
    const auto env = api_key_env(profile.provider);
    const auto key = keys_(env);
    if (!key) throw ConfigError({"missing API key: set " + std::string(env)});
    const auto request = build_request(profile, prompt, *key);

    auto& g = gate(profile.provider);
    g.acquire();
    struct Release {
        Semaphore& s;
        ~Release() { s.release(); }
    } release{g};

    auto backoff = retry_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
        const auto start = std::chrono::steady_clock::now();
        std::optional<HttpResponse> res;
        try {
            res = transport_->post(request);
        } catch (const TransportError& e) {
            last_error = e.what();
        }
        if (res) {
            if (res->status >= 200 && res->status < 300) {
                auto out = parse_provider_response(profile.provider, res->body);
                out.latency =
                    std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
                return out;
            }
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
            if (!transient_status(res->status)) throw TransportError(last_error);
        }
        spdlog::warn("event=provider_retry problem={} iter={} attempt={} error=\"{}\"", ctx.problem_id, ctx.iteration,
                     attempt, last_error);
        if (attempt < retry_.attempts) {
            sleep_(backoff);
            backoff *= 2;
        }
    }
    throw TransportError("provider " + std::string(to_string(profile.provider)) + " failed after " +
                         std::to_string(retry_.attempts) + " attempts: " + last_error);
}

MockModelClient::MockModelClient(json script) : script_(std::move(script)) {}

std::shared_ptr<MockModelClient> MockModelClient::from_file(const fs::path& path) {
    try {
        return std::make_shared<MockModelClient>(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), e.what());
    }
}

std::size_t MockModelClient::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

ModelResponse MockModelClient::complete(const ProviderProfile&, const RenderedPrompt& prompt, const CallContext& ctx) {
    const std::string role = ctx.role == AgentRole::generation ? "generation" : "analysis";
    int ordinal = 0;
    {
        std::lock_guard lock(mu_);
        ++calls_;
        ordinal = ordinals_[ctx.problem_id + "#" + std::to_string(ctx.sample) + "#" + role]++;
    }

    auto lookup = [&](const json& records) -> std::optional<json> {
        if (!records.is_array()) return std::nullopt;
        for (const auto& r : records) {
            const auto& m = r.value("match", json::object());
            if (m.contains("fingerprint") && m["fingerprint"] == prompt.fingerprint) return std::optional<json>(std::in_place, r);
        }
        for (const auto& r : records) {
            const auto& m = r.value("match", json::object());
            if (m.contains("ordinal") && m["ordinal"] == ordinal) return std::optional<json>(std::in_place, r);
        }
        return std::nullopt;
    };

    std::optional<json> hit;
    if (script_.contains("problems") && script_.at("problems").contains(ctx.problem_id))
        hit = lookup(script_.at("problems").at(ctx.problem_id).value(role, json()));
    if (!hit) hit = lookup(script_.value(role, json()));

    ModelResponse r;
    r.provider_request_id = "mock-" + role + "-" + std::to_string(ordinal);
    if (hit) {
        if (hit->value("error", "") == "transport") throw TransportError("scripted transport failure");
        r.raw_text = hit->value("response_text", "");
    } else if (script_.contains("default_response")) {
        r.raw_text = script_.at("default_response").value(role, "");
    }
    return r;
}

ModelResponse RoutingModelClient::complete(const ProviderProfile& profile, const RenderedPrompt& prompt,
                                           const CallContext& ctx) {
    if (profile.provider == Provider::mock) {
        if (!mock_) throw ConfigError({"mock profile '" + profile.name + "' used without a mock script"});
        return mock_->complete(profile, prompt, ctx);
    }
    if (!http_) throw ConfigError({"no HTTP client configured"});
    return http_->complete(profile, prompt, ctx);
}

}  // namespace kforge
