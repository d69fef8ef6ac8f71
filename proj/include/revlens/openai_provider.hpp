#pragma once

#include "revlens/llm.hpp"

#include <string>

namespace revlens {

// Chat-completions provider speaking the OpenAI-compatible streaming wire
// protocol: one system message (instruction) and one user message (context),
// answered with "data: {...}" server-sent events.
class OpenAIProvider : public Provider {
public:
    // Throws Error(configuration) when the credential is missing or the
    // endpoint is not an http(s) URL.
    explicit OpenAIProvider(ProviderConfig config);

    std::string name() const override { return "openai:" + config_.model; }

    StreamOutcome stream(const ProviderRequest& request, std::stop_token stop,
                         const EventSink& sink) override;

    const ProviderConfig& config() const { return config_; }

private:
    ProviderConfig config_;
    std::string base_url_;    // scheme://host[:port]
    std::string path_prefix_; // e.g. "/v1"
};

// Builds the JSON body sent to /chat/completions.
std::string chat_completion_body(const ProviderRequest& request, const std::string& model);

} // namespace revlens
