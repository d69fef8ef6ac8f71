#include "revlens/llm.hpp"

#include "revlens/error.hpp"
#include "revlens/hash.hpp"
#include "revlens/utf8.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace revlens {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::validation: return "validation";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::empty_document: return "empty_document";
    case ErrorCode::configuration: return "configuration";
    }
    return "unknown";
}

const char* to_string(OutputFilter filter) {
    return filter == OutputFilter::final_output ? "FINAL_OUTPUT" : "none";
}

const char* to_string(ProviderErrorKind kind) {
    switch (kind) {
    case ProviderErrorKind::rejected: return "rejected";
    case ProviderErrorKind::auth: return "auth";
    case ProviderErrorKind::timeout: return "timeout";
    case ProviderErrorKind::network: return "network";
    case ProviderErrorKind::server: return "server";
    case ProviderErrorKind::scripted: return "scripted";
    }
    return "unknown";
}

std::string ProviderRequest::fingerprint() const {
    std::string material = instruction;
    material.push_back('\0');
    material += context;
    return sha256_hex(material);
}

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* value = std::getenv(name);
    return (value != nullptr && *value != '\0') ? std::string(value) : std::move(fallback);
}

} // namespace

ProviderConfig ProviderConfig::from_env() {
    ProviderConfig config;
    config.api_key = env_or("REVLENS_API_KEY", env_or("OPENAI_API_KEY", ""));
    config.endpoint = env_or("REVLENS_ENDPOINT", config.endpoint);
    config.model = env_or("REVLENS_MODEL", config.model);
    return config;
}

nlohmann::json ProviderConfig::to_json() const {
    return {
        {"endpoint", endpoint},
        {"model", model},
        {"credential", has_credential() ? "set" : "missing"},
        {"context_budget", context_budget},
        {"timeout_seconds", timeout_seconds},
        {"retries", retries},
        {"temperature", temperature},
    };
}

StreamOutcome complete_streaming(Provider& provider, const ProviderRequest& request,
                                 const ProviderConfig& config, std::stop_token stop,
                                 const EventSink& sink) {
    if (request.instruction.empty()) {
        sink(StreamEvent::failure({ProviderErrorKind::rejected, "request has an empty instruction", false}));
        return StreamOutcome::error;
    }
    const std::size_t context_chars = utf8::length(request.context);
    if (context_chars > config.context_budget) {
        sink(StreamEvent::failure({ProviderErrorKind::rejected,
                                   "context of " + std::to_string(context_chars) +
                                       " characters exceeds budget of " +
                                       std::to_string(config.context_budget),
                                   false}));
        return StreamOutcome::error;
    }

    for (int attempt = 0;; ++attempt) {
        bool saw_delta = false;
        bool terminal_seen = false;
        std::optional<ProviderError> deferred;
        const bool may_retry = attempt < config.retries;

        auto guarded = [&](const StreamEvent& event) {
            if (terminal_seen) {
                spdlog::warn("{}: dropping event after terminal", provider.name());
                return;
            }
            if (event.kind == StreamEventKind::delta) {
                saw_delta = true;
                sink(event);
                return;
            }
            terminal_seen = true;
            if (event.kind == StreamEventKind::error && event.error && event.error->retryable &&
                !saw_delta && may_retry) {
                deferred = event.error;
                return;
            }
            sink(event);
        };

        const StreamOutcome outcome = provider.stream(request, stop, guarded);
        if (outcome == StreamOutcome::cancelled || stop.stop_requested()) {
            return StreamOutcome::cancelled;
        }
        if (!deferred) {
            if (!terminal_seen) {
                sink(StreamEvent::failure({ProviderErrorKind::server, "provider ended without a terminal event", false}));
                return StreamOutcome::error;
            }
            return outcome;
        }

        spdlog::info("{}: retrying after {} error (attempt {})", provider.name(),
                     to_string(deferred->kind), attempt + 1);
        const auto backoff = std::chrono::milliseconds(100 * (1 << attempt));
        const auto until = std::chrono::steady_clock::now() + backoff;
        while (std::chrono::steady_clock::now() < until) {
            if (stop.stop_requested()) return StreamOutcome::cancelled;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }
}

Truncation estimate_and_truncate(std::string_view text, std::size_t budget_chars) {
    if (budget_chars == 0) throw Error(ErrorCode::invalid_argument, "budget must be positive");
    const std::u32string scalars = utf8::decode(text);
    if (scalars.size() <= budget_chars) return {std::string(text), false};

    auto is_terminal = [](char32_t c) {
        return c == U'.' || c == U'!' || c == U'?' || c == 0x3002 || c == 0xFF01 || c == 0xFF1F;
    };
    std::size_t cut = 0;
    for (std::size_t end = budget_chars; end > 0; --end) {
        if (is_terminal(scalars[end - 1]) && utf8::is_whitespace(scalars[end])) {
            cut = end;
            break;
        }
    }
    if (cut == 0) cut = budget_chars;
    return {utf8::encode(std::u32string_view(scalars).substr(0, cut)), true};
}

std::size_t estimate_tokens(std::string_view text) {
    return (utf8::length(text) + 3) / 4;
}

} // namespace revlens
