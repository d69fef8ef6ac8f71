#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>

namespace revlens {

enum class OutputFilter { none, final_output };

const char* to_string(OutputFilter filter);

struct ProviderRequest {
    std::string instruction;
    std::string context;
    bool truncated = false;
    int max_output_tokens = 512;
    double temperature = 0.7;
    OutputFilter filter = OutputFilter::none;

    // Digest of instruction and context; sampling settings are not part of it.
    std::string fingerprint() const;

    bool operator==(const ProviderRequest&) const = default;
};

enum class ProviderErrorKind { rejected, auth, timeout, network, server, scripted };

const char* to_string(ProviderErrorKind kind);

struct ProviderError {
    ProviderErrorKind kind = ProviderErrorKind::server;
    std::string message;
    bool retryable = false;
};

enum class StreamEventKind { delta, done, error };

struct StreamEvent {
    StreamEventKind kind = StreamEventKind::delta;
    std::string text;                  // delta chunk, or finish reason for done
    std::optional<ProviderError> error; // set iff kind == error

    static StreamEvent delta(std::string chunk) { return {StreamEventKind::delta, std::move(chunk), {}}; }
    static StreamEvent done(std::string finish_reason = "stop") {
        return {StreamEventKind::done, std::move(finish_reason), {}};
    }
    static StreamEvent failure(ProviderError err) { return {StreamEventKind::error, {}, std::move(err)}; }
};

enum class StreamOutcome { done, error, cancelled };

using EventSink = std::function<void(const StreamEvent&)>;

struct ProviderConfig {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo";
    std::string api_key;
    std::size_t context_budget = 8000; // characters, roughly 2000 tokens
    double timeout_seconds = 60.0;
    int retries = 2;
    double temperature = 0.7;

    // REVLENS_API_KEY (or OPENAI_API_KEY), REVLENS_ENDPOINT, REVLENS_MODEL.
    static ProviderConfig from_env();

    bool has_credential() const { return !api_key.empty(); }
    // Serialized form never includes the credential.
    nlohmann::json to_json() const;
};

class Provider {
public:
    virtual ~Provider() = default;

    virtual std::string name() const = 0;

    // Emits zero or more deltas, then exactly one terminal event, unless the
    // stop token fires, in which case it returns `cancelled` without a
    // terminal event. Checked between chunks.
    virtual StreamOutcome stream(const ProviderRequest& request, std::stop_token stop,
                                 const EventSink& sink) = 0;
};

// Contract layer over Provider::stream: rejects requests that break the
// budget before any call, retries retryable failures that happened before
// the first delta, and guarantees at most one terminal event.
StreamOutcome complete_streaming(Provider& provider, const ProviderRequest& request,
                                 const ProviderConfig& config, std::stop_token stop,
                                 const EventSink& sink);

struct Truncation {
    std::string text;
    bool truncated = false;
};

// Cuts text to at most budget_chars scalars, preferring the last sentence end
// that fits and falling back to a hard cut.
Truncation estimate_and_truncate(std::string_view text, std::size_t budget_chars);

// chars/4 heuristic.
std::size_t estimate_tokens(std::string_view text);

} // namespace revlens
