#pragma once

#include "revlens/llm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace revlens {

// Scripted response for one request fingerprint.
struct Fixture {
    std::string fingerprint;
    std::vector<std::string> chunks;
    bool terminal_error = false;
    std::string error_message = "scripted failure";
    bool retryable = false;
    std::vector<int> delays_ms; // delay before chunk i; missing entries mean 0

    std::string text() const;
    bool operator==(const Fixture&) const = default;
};

// File format: JSON array of {fingerprint, chunks, terminal, delays_ms}
// with optional error and retryable fields for terminal == "error".
std::vector<Fixture> parse_fixtures(const nlohmann::json& data);
nlohmann::json fixtures_to_json(const std::vector<Fixture>& fixtures);
std::vector<Fixture> load_fixtures(const std::filesystem::path& path);
void save_fixtures(const std::filesystem::path& path, const std::vector<Fixture>& fixtures);

enum class FallbackMode {
    echo,  // "OBSERVATION: <context>" in fixed-size chunks
    error, // non-retryable error event
};

struct MockCall {
    std::string fingerprint;
    std::string context;
    std::string instruction;
};

// Deterministic provider for tests and offline runs. Identical fingerprints
// always replay identical event sequences.
class MockProvider : public Provider {
public:
    explicit MockProvider(std::vector<Fixture> fixtures = {}, FallbackMode fallback = FallbackMode::echo,
                          std::size_t fallback_chunk_chars = 8);

    std::string name() const override { return "mock"; }

    StreamOutcome stream(const ProviderRequest& request, std::stop_token stop,
                         const EventSink& sink) override;

    void add_fixture(Fixture fixture);
    // Delay applied before every fallback chunk.
    void set_fallback_delay(int delay_ms);

    std::vector<MockCall> calls() const;
    std::size_t call_count() const;
    void clear_calls();

    // Chunks the fallback would produce for this request.
    Fixture fallback_for(const ProviderRequest& request) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Fixture> fixtures_;
    FallbackMode fallback_;
    std::size_t chunk_chars_;
    int fallback_delay_ms_ = 0;
    std::vector<MockCall> calls_;
};

// Passes requests through to a real provider and captures each stream as a
// fixture replayable by MockProvider.
class RecordingProvider : public Provider {
public:
    explicit RecordingProvider(std::shared_ptr<Provider> inner);

    std::string name() const override { return "recording(" + inner_->name() + ")"; }

    StreamOutcome stream(const ProviderRequest& request, std::stop_token stop,
                         const EventSink& sink) override;

    // Completed recordings, sorted by fingerprint.
    std::vector<Fixture> fixtures() const;

private:
    std::shared_ptr<Provider> inner_;
    mutable std::mutex mutex_;
    std::map<std::string, Fixture> recorded_;
};

} // namespace revlens
