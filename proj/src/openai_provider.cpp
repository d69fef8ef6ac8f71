#include "revlens/openai_provider.hpp"

#include "revlens/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace revlens {

OpenAIProvider::OpenAIProvider(ProviderConfig config) : config_(std::move(config)) {
    if (!config_.has_credential()) {
        throw Error(ErrorCode::configuration,
                    "no API credential configured; set REVLENS_API_KEY or OPENAI_API_KEY");
    }
    const std::string& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos ||
        (url.compare(0, scheme_end, "http") != 0 && url.compare(0, scheme_end, "https") != 0)) {
        throw Error(ErrorCode::configuration, "endpoint must be an http(s) URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    base_url_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string chat_completion_body(const ProviderRequest& request, const std::string& model) {
    nlohmann::json body{
        {"model", model},
        {"stream", true},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
        {"messages",
         {{{"role", "system"}, {"content", request.instruction}},
          {{"role", "user"}, {"content", request.context}}}},
    };
    return body.dump();
}

namespace {

ProviderError status_error(int status, const std::string& body) {
    std::string detail = body;
    try {
        auto j = nlohmann::json::parse(body);
        if (j.contains("error") && j["error"].is_object()) detail = j["error"].value("message", body);
    } catch (const nlohmann::json::exception&) {
    }
    if (detail.size() > 300) detail.resize(300);
    const std::string message = "HTTP " + std::to_string(status) + ": " + detail;
    if (status == 401 || status == 403) {
        return {ProviderErrorKind::auth, message + " (check the configured API credential)", false};
    }
    if (status == 408) return {ProviderErrorKind::timeout, message, true};
    if (status == 429 || status >= 500) return {ProviderErrorKind::server, message, true};
    return {ProviderErrorKind::rejected, message, false};
}

} // namespace

StreamOutcome OpenAIProvider::stream(const ProviderRequest& request, std::stop_token stop,
                                     const EventSink& sink) {
    httplib::Client client(base_url_);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(config_.timeout_seconds * 1000));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    httplib::Request req;
    req.method = "POST";
    req.path = path_prefix_ + "/chat/completions";
    req.headers = {
        {"Authorization", "Bearer " + config_.api_key},
        {"Accept", "text/event-stream"},
    };
    req.body = chat_completion_body(request, config_.model);
    req.set_header("Content-Type", "application/json");

    int status = 0;
    std::string error_body;
    std::string buffer;
    bool terminal = false;
    std::optional<ProviderError> parse_failure;

    auto handle_line = [&](std::string_view line) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.rfind("data:", 0) != 0) return;
        line.remove_prefix(5);
        if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line == "[DONE]") {
            if (!terminal) {
                terminal = true;
                sink(StreamEvent::done());
            }
            return;
        }
        try {
            auto chunk = nlohmann::json::parse(line);
            if (chunk.contains("error")) {
                terminal = true;
                sink(StreamEvent::failure({ProviderErrorKind::server, chunk["error"].dump(), false}));
                return;
            }
            const auto& choice = chunk.at("choices").at(0);
            if (choice.contains("delta") && choice["delta"].contains("content") &&
                choice["delta"]["content"].is_string()) {
                auto text = choice["delta"]["content"].get<std::string>();
                if (!text.empty()) sink(StreamEvent::delta(std::move(text)));
            }
        } catch (const nlohmann::json::exception& e) {
            parse_failure = ProviderError{ProviderErrorKind::server,
                                          std::string("malformed stream chunk: ") + e.what(), false};
        }
    };

    req.response_handler = [&](const httplib::Response& res) {
        status = res.status;
        return true;
    };
    req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
        if (stop.stop_requested()) return false;
        if (status != 200) {
            error_body.append(data, len);
            return true;
        }
        buffer.append(data, len);
        std::size_t nl;
        while (!terminal && !parse_failure && (nl = buffer.find('\n')) != std::string::npos) {
            handle_line(std::string_view(buffer).substr(0, nl));
            buffer.erase(0, nl + 1);
        }
        return !terminal && !parse_failure && !stop.stop_requested();
    };

    spdlog::debug("{}: POST {}{}", name(), base_url_, req.path);
    auto result = client.send(req);

    if (stop.stop_requested()) return StreamOutcome::cancelled;
    if (terminal) return StreamOutcome::done;
    if (parse_failure) {
        sink(StreamEvent::failure(*parse_failure));
        return StreamOutcome::error;
    }
    if (status != 0 && status != 200) {
        sink(StreamEvent::failure(status_error(status, error_body)));
        return StreamOutcome::error;
    }
    if (!result) {
        const auto err = result.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                               err == httplib::Error::ConnectionTimeout;
        sink(StreamEvent::failure({timed_out ? ProviderErrorKind::timeout : ProviderErrorKind::network,
                                   "request failed: " + httplib::to_string(err), true}));
        return StreamOutcome::error;
    }
    if (!buffer.empty()) handle_line(buffer);
    if (terminal) return StreamOutcome::done;
    // Some compatible servers close the stream without a [DONE] sentinel.
    sink(StreamEvent::done("eof"));
    return StreamOutcome::done;
}

} // namespace revlens
