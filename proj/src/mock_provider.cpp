#include "revlens/mock_provider.hpp"

#include "revlens/error.hpp"
#include "revlens/utf8.hpp"

#include <chrono>
#include <fstream>
#include <thread>

namespace revlens {

std::string Fixture::text() const {
    std::string out;
    for (const auto& c : chunks) out += c;
    return out;
}

std::vector<Fixture> parse_fixtures(const nlohmann::json& data) {
    if (!data.is_array()) throw Error(ErrorCode::validation, "fixture file must be a JSON array");
    std::vector<Fixture> out;
    for (const auto& item : data) {
        try {
            Fixture f;
            f.fingerprint = item.at("fingerprint").get<std::string>();
            f.chunks = item.at("chunks").get<std::vector<std::string>>();
            const std::string terminal = item.value("terminal", "done");
            if (terminal != "done" && terminal != "error") {
                throw Error(ErrorCode::validation, "fixture terminal must be \"done\" or \"error\"");
            }
            f.terminal_error = terminal == "error";
            f.error_message = item.value("error", f.error_message);
            f.retryable = item.value("retryable", false);
            f.delays_ms = item.value("delays_ms", std::vector<int>{});
            out.push_back(std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::validation, std::string("malformed fixture: ") + e.what());
        }
    }
    return out;
}

nlohmann::json fixtures_to_json(const std::vector<Fixture>& fixtures) {
    auto out = nlohmann::json::array();
    for (const auto& f : fixtures) {
        nlohmann::json j{
            {"fingerprint", f.fingerprint},
            {"chunks", f.chunks},
            {"terminal", f.terminal_error ? "error" : "done"},
            {"delays_ms", f.delays_ms},
        };
        if (f.terminal_error) {
            j["error"] = f.error_message;
            j["retryable"] = f.retryable;
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<Fixture> load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::not_found, "cannot open fixture file " + path.string());
    try {
        return parse_fixtures(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::validation, "fixture file is not valid JSON: " + std::string(e.what()));
    }
}

void save_fixtures(const std::filesystem::path& path, const std::vector<Fixture>& fixtures) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write fixture file " + path.string());
    out << fixtures_to_json(fixtures).dump(2) << "\n";
}

MockProvider::MockProvider(std::vector<Fixture> fixtures, FallbackMode fallback,
                           std::size_t fallback_chunk_chars)
    : fallback_(fallback), chunk_chars_(fallback_chunk_chars == 0 ? 8 : fallback_chunk_chars) {
    for (auto& f : fixtures) fixtures_[f.fingerprint] = std::move(f);
}

void MockProvider::add_fixture(Fixture fixture) {
    std::lock_guard lock(mutex_);
    fixtures_[fixture.fingerprint] = std::move(fixture);
}

void MockProvider::set_fallback_delay(int delay_ms) {
    std::lock_guard lock(mutex_);
    fallback_delay_ms_ = delay_ms;
}

std::vector<MockCall> MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t MockProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return calls_.size();
}

void MockProvider::clear_calls() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

Fixture MockProvider::fallback_for(const ProviderRequest& request) const {
    Fixture f;
    f.fingerprint = request.fingerprint();
    if (fallback_ == FallbackMode::error) {
        f.terminal_error = true;
        f.error_message = "no fixture for request " + f.fingerprint;
        return f;
    }
    const std::u32string text = utf8::decode("OBSERVATION: " + request.context);
    for (std::size_t i = 0; i < text.size(); i += chunk_chars_) {
        f.chunks.push_back(utf8::encode(std::u32string_view(text).substr(i, chunk_chars_)));
    }
    f.delays_ms.assign(f.chunks.size(), fallback_delay_ms_);
    return f;
}

namespace {

// Sleeps in short slices; returns false if stop was requested meanwhile.
bool wait_for(int delay_ms, const std::stop_token& stop) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(delay_ms);
    while (std::chrono::steady_clock::now() < until) {
        if (stop.stop_requested()) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return !stop.stop_requested();
}

} // namespace

StreamOutcome MockProvider::stream(const ProviderRequest& request, std::stop_token stop,
                                   const EventSink& sink) {
    Fixture script;
    {
        std::lock_guard lock(mutex_);
        const std::string fp = request.fingerprint();
        calls_.push_back({fp, request.context, request.instruction});
        auto it = fixtures_.find(fp);
        script = it != fixtures_.end() ? it->second : fallback_for(request);
    }

    for (std::size_t i = 0; i < script.chunks.size(); ++i) {
        const int delay = i < script.delays_ms.size() ? script.delays_ms[i] : 0;
        if (!wait_for(delay, stop)) return StreamOutcome::cancelled;
        sink(StreamEvent::delta(script.chunks[i]));
    }
    if (stop.stop_requested()) return StreamOutcome::cancelled;
    if (script.terminal_error) {
        sink(StreamEvent::failure({ProviderErrorKind::scripted, script.error_message, script.retryable}));
        return StreamOutcome::error;
    }
    sink(StreamEvent::done());
    return StreamOutcome::done;
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}

StreamOutcome RecordingProvider::stream(const ProviderRequest& request, std::stop_token stop,
                                        const EventSink& sink) {
    Fixture capture;
    capture.fingerprint = request.fingerprint();
    auto tap = [&](const StreamEvent& event) {
        if (event.kind == StreamEventKind::delta) {
            capture.chunks.push_back(event.text);
            capture.delays_ms.push_back(0);
        } else if (event.kind == StreamEventKind::error && event.error) {
            capture.terminal_error = true;
            capture.error_message = event.error->message;
            capture.retryable = event.error->retryable;
        }
        sink(event);
    };
    const StreamOutcome outcome = inner_->stream(request, stop, tap);
    if (outcome != StreamOutcome::cancelled) {
        std::lock_guard lock(mutex_);
        recorded_[capture.fingerprint] = std::move(capture);
    }
    return outcome;
}

std::vector<Fixture> RecordingProvider::fixtures() const {
    std::lock_guard lock(mutex_);
    std::vector<Fixture> out;
    for (const auto& [_, f] : recorded_) out.push_back(f);
    return out;
}

} // namespace revlens
