#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dexter {

// One chat-completion request, provider-agnostic.
struct LlmRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.2;
    int max_output_tokens = 1024;
};

struct LlmResponse {
    std::string text;
};

// Transport turns a request into a response, throwing Error with kind
// TransportError, AuthError, RateLimited, or EmptyCompletion.
class Transport {
public:
    virtual ~Transport() = default;
    virtual LlmResponse send(const LlmRequest& request) = 0;
};

struct LlmEndpointConfig {
    std::string provider_tag;     // model identifier, e.g. "gemini-2.0-flash-lite"
    std::string base_url;
    std::string api_style;        // "gemini" or "openai"
    std::string api_key_env_var;  // name of the env var holding the key
    int max_retries = 2;
    int backoff_base_ms = 200;
    int max_concurrency = 4;
    int timeout_s = 60;
    double temperature = 0.2;
    int max_output_tokens = 1024;
};

// Scripted stand-in for a real provider. Each rule matches prompts (exact
// text, substring, or anything) and yields a sequence of outcomes consumed
// one per attempt; the last outcome repeats. Prompts with no matching rule
// fail with TransportError, which makes unscripted traffic loud in tests
// and in offline mode.
class MockTransport : public Transport {
public:
    enum class Match { Exact, Substring, Any };
    enum class OutcomeKind { Ok, Transport, Auth, RateLimited, Empty };

    struct Outcome {
        OutcomeKind kind = OutcomeKind::Ok;
        std::string text;
    };

    struct Rule {
        Match match = Match::Any;
        std::string pattern;
        std::vector<Outcome> outcomes;
        size_t consumed = 0;
    };

    void add_rule(Rule rule);
    void reply(Match match, const std::string& pattern, const std::string& text);

    // JSON script: [{"match":"exact|substring|any","pattern":…,
    //               "outcomes":[{"kind":"ok|transport|auth|rate_limited|empty",
    //                            "text":…}, …]}, …]
    // or the shorthand {"match":…, "pattern":…, "text":…} for a single Ok.
    static std::shared_ptr<MockTransport> from_script_file(const std::string& path);

    LlmResponse send(const LlmRequest& request) override;

    // Every prompt seen, in arrival order.
    std::vector<std::string> prompts() const;
    size_t call_count() const;

private:
    mutable std::mutex mutex_;
    std::vector<Rule> rules_;
    std::vector<std::string> prompts_;
};

struct TranscriptEntry {
    std::string provider_tag;
    std::string prompt;
    std::string response;
    double latency_s = 0.0;
    int attempts = 0;
};

// Append-only record of completed transport exchanges. When constructed
// with a path, every entry is also written to that file as JSON Lines.
class Transcript {
public:
    Transcript() = default;
    explicit Transcript(std::string path) : path_(std::move(path)) {}

    void append(TranscriptEntry entry);
    std::vector<TranscriptEntry> entries() const;
    size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
    std::string path_;
};

// Retry/backoff and per-endpoint concurrency limits around a Transport.
// AuthError is never retried; RateLimited and TransportError are retried
// with exponential backoff until max_retries is exhausted.
class LlmGateway {
public:
    using SleepFn = std::function<void(int /*milliseconds*/)>;

    explicit LlmGateway(std::shared_ptr<Transport> transport, Transcript* transcript = nullptr,
                        SleepFn sleep = {});

    std::string complete(const LlmEndpointConfig& cfg, const std::string& prompt);

    Transport& transport() { return *transport_; }

private:
    // Counting permits per endpoint so concurrent workers respect
    // max_concurrency.
    class PermitPool;
    std::shared_ptr<PermitPool> pool_for(const LlmEndpointConfig& cfg);

    std::shared_ptr<Transport> transport_;
    Transcript* transcript_;
    SleepFn sleep_;
    std::mutex pools_mutex_;
    std::map<std::string, std::shared_ptr<PermitPool>> pools_;
};

// HTTP adapter: maps the request onto the configured provider's JSON
// schema. Supported styles: "gemini" (generateContent) and "openai"
// (chat/completions). Requires the api key env var to be set when the
// style needs one.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) {}
    LlmResponse send(const LlmRequest& request) override;

private:
    LlmEndpointConfig cfg_;
};

}  // namespace dexter
