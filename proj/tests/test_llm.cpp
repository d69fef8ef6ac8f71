#include "revlens/error.hpp"
#include "revlens/llm.hpp"
#include "revlens/mock_provider.hpp"
#include "revlens/openai_provider.hpp"
#include "revlens/utf8.hpp"

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

using namespace revlens;

namespace {

struct Recorded {
    std::vector<StreamEvent> events;
    StreamOutcome outcome = StreamOutcome::error;

    std::string text() const {
        std::string out;
        for (const auto& e : events)
            if (e.kind == StreamEventKind::delta) out += e.text;
        return out;
    }
    std::size_t terminals() const {
        std::size_t n = 0;
        for (const auto& e : events) n += e.kind != StreamEventKind::delta;
        return n;
    }
};

ProviderRequest make_request(std::string context, std::string instruction = "Summarize.") {
    ProviderRequest req;
    req.instruction = std::move(instruction);
    req.context = std::move(context);
    return req;
}

Recorded run(Provider& provider, const ProviderRequest& req, const ProviderConfig& config = {},
             std::stop_token stop = {}) {
    Recorded r;
    r.outcome = complete_streaming(provider, req, config, stop,
                                   [&](const StreamEvent& e) { r.events.push_back(e); });
    return r;
}

// Minimal OpenAI-compatible server speaking the streaming chat protocol.
class FakeOpenAI {
public:
    FakeOpenAI() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_auth_ = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            const std::string model = body["model"];
            if (req.get_header_value("Authorization") != "Bearer sk-test-secret") {
                res.status = 401;
                res.set_content(R"({"error":{"message":"bad key"}})", "application/json");
                return;
            }
            if (model == "slow") {
                std::this_thread::sleep_for(std::chrono::milliseconds(700));
            }
            if (model == "flaky" && hits_ <= 2) {
                res.status = 503;
                res.set_content("overloaded", "text/plain");
                return;
            }
            if (model == "bad-request") {
                res.status = 400;
                res.set_content(R"({"error":{"message":"nope"}})", "application/json");
                return;
            }
            std::string context = body["messages"][1]["content"];
            std::string stream;
            for (const std::string piece : {std::string("Echo: "), context}) {
                nlohmann::json chunk{{"choices", {{{"delta", {{"content", piece}}}, {"index", 0}}}}};
                stream += "data: " + chunk.dump() + "\n\n";
            }
            if (model != "no-done") stream += "data: [DONE]\n\n";
            res.set_content(stream, "text/event-stream");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeOpenAI() {
        server_.stop();
        thread_.join();
    }

    ProviderConfig config(std::string model) const {
        ProviderConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        c.model = std::move(model);
        c.api_key = "sk-test-secret";
        c.timeout_seconds = 5;
        return c;
    }

    int hits() const { return hits_; }
    std::string last_auth() const { return last_auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string last_auth_;
};

} // namespace

TEST_CASE("complete_streaming: fixture replay", "[llm]") {
    const ProviderRequest req = make_request("hello context");
    MockProvider mock({Fixture{req.fingerprint(), {"hel", "lo"}}});
    const Recorded r = run(mock, req);
    REQUIRE(r.events.size() == 3);
    CHECK(r.events[0].text == "hel");
    CHECK(r.events[1].text == "lo");
    CHECK(r.events[2].kind == StreamEventKind::done);
    CHECK(r.outcome == StreamOutcome::done);
    CHECK(r.text() == "hello");
}

TEST_CASE("complete_streaming: cancellation after the first delta", "[llm]") {
    const ProviderRequest req = make_request("cancel me");
    MockProvider mock({Fixture{req.fingerprint(), {"a", "b", "c"}}});
    std::stop_source source;
    Recorded r;
    r.outcome = complete_streaming(mock, req, {}, source.get_token(), [&](const StreamEvent& e) {
        r.events.push_back(e);
        source.request_stop();
    });
    CHECK(r.outcome == StreamOutcome::cancelled);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == StreamEventKind::delta);
    CHECK(r.terminals() == 0);
}

TEST_CASE("complete_streaming: budget and instruction are checked before any call", "[llm]") {
    MockProvider mock;
    ProviderConfig config;
    config.context_budget = 10;
    const Recorded over = run(mock, make_request("eleven char"), config);
    REQUIRE(over.events.size() == 1);
    CHECK(over.events[0].kind == StreamEventKind::error);
    CHECK(over.events[0].error->kind == ProviderErrorKind::rejected);
    CHECK_FALSE(over.events[0].error->retryable);

    const Recorded empty = run(mock, make_request("ok", ""), config);
    REQUIRE(empty.events.size() == 1);
    CHECK(empty.events[0].kind == StreamEventKind::error);
    CHECK(mock.call_count() == 0);

    // Budget counts scalars, not bytes.
    CHECK(run(mock, make_request("\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9"), config).outcome ==
          StreamOutcome::done);
}

TEST_CASE("complete_streaming: scripted mid-stream error", "[llm]") {
    const ProviderRequest req = make_request("break");
    Fixture f{req.fingerprint(), {"one ", "two "}};
    f.terminal_error = true;
    f.error_message = "boom";
    f.retryable = true;
    MockProvider mock({f});
    const Recorded r = run(mock, req);
    REQUIRE(r.events.size() == 3);
    CHECK(r.events[2].kind == StreamEventKind::error);
    CHECK(r.events[2].error->message == "boom");
    CHECK(r.outcome == StreamOutcome::error);
    // Retryable, but a delta was already delivered: no retry.
    CHECK(mock.call_count() == 1);
}

TEST_CASE("complete_streaming: retryable failures before any delta are retried", "[llm]") {
    const ProviderRequest req = make_request("retry");
    Fixture f{req.fingerprint(), {}};
    f.terminal_error = true;
    f.retryable = true;
    MockProvider mock({f});
    ProviderConfig config;
    config.retries = 2;
    const Recorded r = run(mock, req, config);
    CHECK(mock.call_count() == 3);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == StreamEventKind::error);

    f.retryable = false;
    MockProvider once({f});
    run(once, req, config);
    CHECK(once.call_count() == 1);
}

TEST_CASE("mock provider: fallback and determinism", "[llm][mock]") {
    MockProvider mock;
    const ProviderRequest req = make_request("abc");
    const Recorded first = run(mock, req);
    CHECK(first.text().rfind("OBSERVATION: abc", 0) == 0);
    const Recorded second = run(mock, req);
    REQUIRE(first.events.size() == second.events.size());
    for (std::size_t i = 0; i < first.events.size(); ++i) {
        CHECK(first.events[i].kind == second.events[i].kind);
        CHECK(first.events[i].text == second.events[i].text);
    }
    CHECK(mock.call_count() == 2);
    CHECK(mock.calls()[0].context == "abc");

    MockProvider strict({}, FallbackMode::error);
    const Recorded err = run(strict, req);
    CHECK(err.outcome == StreamOutcome::error);
    CHECK(err.events.back().error->kind == ProviderErrorKind::scripted);
}

TEST_CASE("mock provider: fallback chunks respect scalar boundaries", "[llm][mock]") {
    MockProvider mock;
    const ProviderRequest req = make_request("\xe6\x97\xa5\xe6\x9c\xac\xe8\xaa\x9e\xe3\x81\xae\xe6\x96\x87\xe7\xab\xa0\xe3\x81\xa7\xe3\x81\x99");
    const Recorded r = run(mock, req);
    for (const auto& e : r.events)
        if (e.kind == StreamEventKind::delta) CHECK(utf8::is_valid(e.text));
    CHECK(r.text() == "OBSERVATION: " + req.context);
}

TEST_CASE("fingerprint ignores sampling settings", "[llm]") {
    ProviderRequest a = make_request("x");
    ProviderRequest b = a;
    b.temperature = 1.5;
    b.max_output_tokens = 9;
    CHECK(a.fingerprint() == b.fingerprint());
    b.context = "y";
    CHECK(a.fingerprint() != b.fingerprint());
    ProviderRequest c = make_request("ab", "c");
    ProviderRequest d = make_request("b", "ca");
    CHECK(c.fingerprint() != d.fingerprint());
}

TEST_CASE("fixtures: JSON round trip", "[llm][mock]") {
    Fixture ok{"aa", {"x", "y"}};
    ok.delays_ms = {0, 5};
    Fixture bad{"bb", {"z"}};
    bad.terminal_error = true;
    bad.error_message = "scripted";
    bad.retryable = true;
    const std::vector<Fixture> fixtures{ok, bad};
    CHECK(parse_fixtures(fixtures_to_json(fixtures)) == fixtures);

    const auto path = std::filesystem::temp_directory_path() / "revlens_fixture_roundtrip.json";
    save_fixtures(path, fixtures);
    CHECK(load_fixtures(path) == fixtures);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(parse_fixtures(nlohmann::json::parse(R"([{"chunks":["a"]}])")), Error);
}

TEST_CASE("recording provider captures replayable fixtures", "[llm][mock]") {
    auto inner = std::make_shared<MockProvider>();
    RecordingProvider recorder(inner);
    const ProviderRequest req = make_request("record this paragraph");
    const Recorded live = run(recorder, req);
    const auto fixtures = recorder.fixtures();
    REQUIRE(fixtures.size() == 1);
    MockProvider replay(fixtures, FallbackMode::error);
    const Recorded again = run(replay, req);
    CHECK(again.text() == live.text());
    CHECK(again.outcome == StreamOutcome::done);
}

TEST_CASE("estimate_and_truncate", "[llm][truncate]") {
    CHECK(estimate_and_truncate("short", 10).text == "short");
    CHECK_FALSE(estimate_and_truncate("short", 10).truncated);

    const auto cut = estimate_and_truncate("First sentence. Second sentence is long.", 25);
    CHECK(cut.truncated);
    CHECK(cut.text == "First sentence.");

    const auto hard = estimate_and_truncate("nosentenceboundaryhere", 5);
    CHECK(hard.truncated);
    CHECK(hard.text == "nosen");

    const auto cjk = estimate_and_truncate("\xe4\xb8\x80\xe3\x80\x82 \xe4\xba\x8c\xe4\xb8\x89\xe5\x9b\x9b", 4);
    CHECK(cjk.text == "\xe4\xb8\x80\xe3\x80\x82");
    CHECK_THROWS_AS(estimate_and_truncate("x", 0), Error);
    CHECK(estimate_tokens(std::string(400, 'a')) == 100);
}

TEST_CASE("estimate_and_truncate: bounded and prefix-preserving", "[llm][truncate][property]") {
    std::mt19937 rng(5);
    const std::vector<std::string> atoms{"a", "b ", ". ", "! ", "\xc3\xa9", "\xe3\x80\x82", "? ", "\n"};
    for (int i = 0; i < 500; ++i) {
        std::string text;
        const int n = rng() % 60;
        for (int k = 0; k < n; ++k) text += atoms[rng() % atoms.size()];
        const std::size_t budget = 1 + rng() % 40;
        const auto t = estimate_and_truncate(text, budget);
        CHECK(utf8::length(t.text) <= budget);
        CHECK(text.compare(0, t.text.size(), t.text) == 0);
        CHECK(t.truncated == (utf8::length(text) > budget));
    }
}

TEST_CASE("provider config never serializes the credential", "[llm][config]") {
    ProviderConfig config;
    config.api_key = "sk-test-secret";
    const std::string dumped = config.to_json().dump();
    CHECK(dumped.find("sk-test-secret") == std::string::npos);
    CHECK(config.to_json()["credential"] == "set");
    CHECK(ProviderConfig{}.to_json()["credential"] == "missing");
}

TEST_CASE("openai provider: configuration errors", "[llm][openai]") {
    ProviderConfig config;
    CHECK_THROWS_AS(OpenAIProvider(config), Error);
    config.api_key = "k";
    config.endpoint = "ftp://example.com";
    CHECK_THROWS_AS(OpenAIProvider(config), Error);
}

TEST_CASE("openai provider: streaming against a local server", "[llm][openai]") {
    FakeOpenAI server;

    auto log = std::make_shared<std::ostringstream>();
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(*log);
    auto previous = spdlog::default_logger();
    auto capture = std::make_shared<spdlog::logger>("capture", sink);
    capture->set_level(spdlog::level::trace);
    spdlog::set_default_logger(capture);

    SECTION("happy path") {
        OpenAIProvider provider(server.config("ok"));
        const Recorded r = run(provider, make_request("paragraph text"), provider.config());
        CHECK(r.outcome == StreamOutcome::done);
        CHECK(r.text() == "Echo: paragraph text");
        CHECK(r.terminals() == 1);
        CHECK(server.last_auth() == "Bearer sk-test-secret");
    }
    SECTION("missing [DONE] still terminates") {
        OpenAIProvider provider(server.config("no-done"));
        const Recorded r = run(provider, make_request("p"), provider.config());
        CHECK(r.outcome == StreamOutcome::done);
        CHECK(r.terminals() == 1);
    }
    SECTION("auth failure is not retried") {
        auto config = server.config("ok");
        config.api_key = "sk-wrong";
        OpenAIProvider provider(config);
        const Recorded r = run(provider, make_request("p"), config);
        REQUIRE(r.events.size() == 1);
        CHECK(r.events[0].error->kind == ProviderErrorKind::auth);
        CHECK_FALSE(r.events[0].error->retryable);
        CHECK(server.hits() == 1);
    }
    SECTION("server errors are retried") {
        OpenAIProvider provider(server.config("flaky"));
        const Recorded r = run(provider, make_request("p"), provider.config());
        CHECK(r.outcome == StreamOutcome::done);
        CHECK(server.hits() == 3);
    }
    SECTION("other client errors are rejected") {
        OpenAIProvider provider(server.config("bad-request"));
        const Recorded r = run(provider, make_request("p"), provider.config());
        CHECK(r.events.back().error->kind == ProviderErrorKind::rejected);
        CHECK(server.hits() == 1);
    }
    SECTION("timeouts are retryable errors") {
        auto config = server.config("slow");
        config.timeout_seconds = 0.2;
        config.retries = 0;
        OpenAIProvider provider(config);
        const Recorded r = run(provider, make_request("p"), config);
        REQUIRE(r.events.size() == 1);
        CHECK(r.events[0].error->kind == ProviderErrorKind::timeout);
        CHECK(r.events[0].error->retryable);
    }
    SECTION("context over budget never reaches the network") {
        auto config = server.config("ok");
        config.context_budget = 3;
        OpenAIProvider provider(config);
        run(provider, make_request("too long"), config);
        CHECK(server.hits() == 0);
    }

    spdlog::set_default_logger(previous);
    CHECK(log->str().find("sk-test-secret") == std::string::npos);
}
