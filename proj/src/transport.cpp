#include "dexter/transport.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"

namespace dexter {

namespace {

using nlohmann::json;

MockTransport::Match match_from_name(const std::string& name) {
    if (name == "exact") return MockTransport::Match::Exact;
    if (name == "substring") return MockTransport::Match::Substring;
    if (name == "any") return MockTransport::Match::Any;
    throw Error(ErrorKind::ConfigError, "unknown mock match kind '" + name + "'");
}

MockTransport::OutcomeKind outcome_from_name(const std::string& name) {
    if (name == "ok") return MockTransport::OutcomeKind::Ok;
    if (name == "transport") return MockTransport::OutcomeKind::Transport;
    if (name == "auth") return MockTransport::OutcomeKind::Auth;
    if (name == "rate_limited") return MockTransport::OutcomeKind::RateLimited;
    if (name == "empty") return MockTransport::OutcomeKind::Empty;
    throw Error(ErrorKind::ConfigError, "unknown mock outcome kind '" + name + "'");
}

}  // namespace

void MockTransport::add_rule(Rule rule) {
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back(std::move(rule));
}

void MockTransport::reply(Match match, const std::string& pattern, const std::string& text) {
    Rule rule;
    rule.match = match;
    rule.pattern = pattern;
    rule.outcomes.push_back({OutcomeKind::Ok, text});
    add_rule(std::move(rule));
}

std::shared_ptr<MockTransport> MockTransport::from_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "cannot open mock script " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw Error(ErrorKind::ConfigError, "mock script must be a JSON array: " + path);
    }
    auto transport = std::make_shared<MockTransport>();
    for (const auto& item : doc) {
        Rule rule;
        rule.match = match_from_name(item.value("match", "any"));
        rule.pattern = item.value("pattern", "");
        if (item.contains("outcomes")) {
            for (const auto& outcome : item["outcomes"]) {
                Outcome parsed;
                parsed.kind = outcome_from_name(outcome.value("kind", "ok"));
                parsed.text = outcome.value("text", "");
                rule.outcomes.push_back(std::move(parsed));
            }
        } else {
            rule.outcomes.push_back({OutcomeKind::Ok, item.value("text", "")});
        }
        if (rule.outcomes.empty()) {
            throw Error(ErrorKind::ConfigError, "mock rule with no outcomes");
        }
        transport->add_rule(std::move(rule));
    }
    return transport;
}

LlmResponse MockTransport::send(const LlmRequest& request) {
    Outcome outcome;
    bool found = false;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        prompts_.push_back(request.prompt);
        for (auto& rule : rules_) {
            bool matches = rule.match == Match::Any ||
                           (rule.match == Match::Exact && request.prompt == rule.pattern) ||
                           (rule.match == Match::Substring &&
                            request.prompt.find(rule.pattern) != std::string::npos);
            if (!matches) continue;
            size_t idx = std::min(rule.consumed, rule.outcomes.size() - 1);
            outcome = rule.outcomes[idx];
            ++rule.consumed;
            found = true;
            break;
        }
    }
    if (!found) {
        throw Error(ErrorKind::TransportError,
                    "unscripted prompt (" + std::to_string(request.prompt.size()) + " chars)");
    }
    switch (outcome.kind) {
        case OutcomeKind::Ok:
            return {outcome.text};
        case OutcomeKind::Transport:
            throw Error(ErrorKind::TransportError, "scripted transport failure");
        case OutcomeKind::Auth:
            throw Error(ErrorKind::AuthError, "scripted auth failure");
        case OutcomeKind::RateLimited:
            throw Error(ErrorKind::RateLimited, "scripted rate limit");
        case OutcomeKind::Empty:
            throw Error(ErrorKind::EmptyCompletion, "scripted empty completion");
    }
    throw Error(ErrorKind::TransportError, "unreachable mock outcome");
}

std::vector<std::string> MockTransport::prompts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompts_;
}

size_t MockTransport::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompts_.size();
}

void Transcript::append(TranscriptEntry entry) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        if (out) {
            json record;
            record["provider_tag"] = entry.provider_tag;
            record["prompt"] = entry.prompt;
            record["response"] = entry.response;
            record["latency_s"] = entry.latency_s;
            record["attempts"] = entry.attempts;
            out << record.dump() << "\n";
        }
    }
    entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_;
}

size_t Transcript::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

// Simple counting-permit pool; acquire blocks while all permits are out.
class LlmGateway::PermitPool {
public:
    explicit PermitPool(int count) : available_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

LlmGateway::LlmGateway(std::shared_ptr<Transport> transport, Transcript* transcript, SleepFn sleep)
    : transport_(std::move(transport)), transcript_(transcript), sleep_(std::move(sleep)) {
    if (!sleep_) {
        sleep_ = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
    }
}

std::shared_ptr<LlmGateway::PermitPool> LlmGateway::pool_for(const LlmEndpointConfig& cfg) {
    std::lock_guard<std::mutex> lock(pools_mutex_);
    std::string key = cfg.provider_tag + "|" + cfg.base_url;
    auto it = pools_.find(key);
    if (it == pools_.end()) {
        it = pools_.emplace(key, std::make_shared<PermitPool>(std::max(1, cfg.max_concurrency)))
                 .first;
    }
    return it->second;
}

std::string LlmGateway::complete(const LlmEndpointConfig& cfg, const std::string& prompt) {
    auto pool = pool_for(cfg);
    pool->acquire();
    struct Releaser {
        PermitPool* pool;
        ~Releaser() { pool->release(); }
    } releaser{pool.get()};

    LlmRequest request;
    request.model = cfg.provider_tag;
    request.prompt = prompt;
    request.temperature = cfg.temperature;
    request.max_output_tokens = cfg.max_output_tokens;

    auto start = std::chrono::steady_clock::now();
    int attempts = 0;
    for (;;) {
        ++attempts;
        try {
            LlmResponse response = transport_->send(request);
            if (response.text.empty()) {
                throw Error(ErrorKind::EmptyCompletion, "provider returned no text");
            }
            if (transcript_) {
                double latency =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                transcript_->append({cfg.provider_tag, prompt, response.text, latency, attempts});
            }
            return response.text;
        } catch (const Error& error) {
            bool retryable = error.kind() == ErrorKind::TransportError ||
                             error.kind() == ErrorKind::RateLimited ||
                             error.kind() == ErrorKind::EmptyCompletion;
            if (!retryable || attempts > cfg.max_retries) {
                if (transcript_) {
                    double latency =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
                    transcript_->append({cfg.provider_tag, prompt,
                                         std::string("<error: ") + error.what() + ">", latency,
                                         attempts});
                }
                if (error.kind() == ErrorKind::RateLimited) {
                    // Retries exhausted on rate limiting surfaces as a
                    // transport failure to the caller.
                    throw Error(ErrorKind::TransportError, error.what());
                }
                throw;
            }
            // Exponential backoff: base, 2*base, 4*base, ...
            sleep_(cfg.backoff_base_ms * (1 << (attempts - 1)));
        }
    }
}

namespace {

std::string require_api_key(const LlmEndpointConfig& cfg) {
    if (cfg.api_key_env_var.empty()) return "";
    const char* key = std::getenv(cfg.api_key_env_var.c_str());
    if (!key || !*key) {
        throw Error(ErrorKind::AuthError,
                    "environment variable " + cfg.api_key_env_var + " is not set");
    }
    return key;
}

void throw_for_status(int status, const std::string& body) {
    if (status == 401 || status == 403) {
        throw Error(ErrorKind::AuthError, "provider returned status " + std::to_string(status));
    }
    if (status == 429) {
        throw Error(ErrorKind::RateLimited, "provider returned status 429");
    }
    throw Error(ErrorKind::TransportError, "provider returned status " + std::to_string(status) +
                                               ": " + body.substr(0, 200));
}

}  // namespace

LlmResponse HttpTransport::send(const LlmRequest& request) {
    std::string api_key = require_api_key(cfg_);

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_s, 0);
    client.set_read_timeout(cfg_.timeout_s, 0);

    std::string path;
    json body;
    httplib::Headers headers;

    if (cfg_.api_style == "gemini") {
        path = "/v1beta/models/" + request.model + ":generateContent";
        if (!api_key.empty()) headers.emplace("x-goog-api-key", api_key);
        body["contents"] = json::array(
            {json{{"parts", json::array({json{{"text", request.prompt}}})}}});
        body["generationConfig"] = {{"temperature", request.temperature},
                                    {"maxOutputTokens", request.max_output_tokens}};
    } else if (cfg_.api_style == "openai") {
        path = "/v1/chat/completions";
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        body["model"] = request.model;
        body["messages"] =
            json::array({json{{"role", "user"}, {"content", request.prompt}}});
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_output_tokens;
    } else {
        throw Error(ErrorKind::ConfigError, "unknown api style '" + cfg_.api_style + "'");
    }

    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
        throw Error(ErrorKind::TransportError,
                    "connection to " + cfg_.base_url + " failed: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw_for_status(result->status, result->body);
    }

    json doc = json::parse(result->body, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorKind::TransportError, "provider returned unparseable JSON");
    }
    try {
        if (cfg_.api_style == "gemini") {
            return {doc.at("candidates").at(0).at("content").at("parts").at(0).at("text")
                        .get<std::string>()};
        }
        return {doc.at("choices").at(0).at("message").at("content").get<std::string>()};
    } catch (const json::exception&) {
        throw Error(ErrorKind::EmptyCompletion, "provider response carried no text");
    }
}

}  // namespace dexter
