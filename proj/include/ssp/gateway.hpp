#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "ssp/corpus.hpp"

namespace ssp {

struct LlmParams {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string endpoint;                     // base URL
    std::string path = "/v1/chat/completions";
    std::string api_key;                      // resolved from the environment by the caller
    int timeout_ms = 60000;
    int max_retries = 3;
    int backoff_ms = 250;
    int max_inflight = 4;

    void validate() const;
};

/// One completed request, as persisted in the cache.
struct PromptRecord {
    std::string cache_key;   // SHA-256 of (model, temperature, max_tokens, prompt bytes)
    std::string prompt;
    std::string response;
    std::string backend;     // "live" or the mock name
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

std::string cache_key(const LlmParams& params, const std::string& prompt);
std::string sha256_hex(const std::string& data);

struct BackendResult {
    std::string content;
    long prompt_tokens = 0;      // 0 when the backend reports no usage
    long completion_tokens = 0;
};

/// A completion backend: mock or live HTTP.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string name() const = 0;
    virtual BackendResult complete(const std::string& prompt, const LlmParams& params) = 0;
};

/// OpenAI-compatible chat completions over HTTP; the whole prompt goes
/// into a single user message. Retries 429/5xx with exponential backoff.
std::shared_ptr<LlmBackend> live_backend();

enum class MockKind { echo_gold, copy_nearest_exemplar, scripted };

MockKind mock_kind_from_string(const std::string& s);

struct MockContext {
    const Dataset* dataset = nullptr;              // labelled data for echo-gold lookups
    std::map<std::string, std::string> scripted;   // prompt hash -> response
};

/// echo-gold answers with the query's gold labels in template format;
/// copy-nearest-exemplar re-tags the query positionally from the first
/// exemplar block; scripted replays a fixture map keyed by prompt hash.
std::shared_ptr<LlmBackend> mock_backend(MockKind kind, MockContext context);

/// Caching, retrying, concurrency-limited client over a backend. With
/// temperature 0 and a warm cache, repeated runs are byte-identical.
class LlmClient {
public:
    LlmClient(LlmParams params, std::shared_ptr<LlmBackend> backend, std::string cache_dir);

    /// Returns the completion text, consulting the cache first.
    std::string complete(const std::string& prompt);

    const LlmParams& params() const { return params_; }
    long cache_hits() const;
    long requests_made() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    LlmParams params_;
};

}  // namespace ssp
