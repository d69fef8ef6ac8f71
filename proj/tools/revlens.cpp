// revlens: batch revision reports, fixture recording and the HTTP service.

#include "revlens/api_server.hpp"
#include "revlens/error.hpp"
#include "revlens/mock_provider.hpp"
#include "revlens/openai_provider.hpp"
#include "revlens/report.hpp"
#include "revlens/utf8.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace {

using namespace revlens;

constexpr int exit_ok = 0;
constexpr int exit_view_errors = 1;
constexpr int exit_usage = 2;

struct ProviderFlags {
    bool mock = false;
    std::string fixtures;
    std::size_t budget = 8000;
    int parallelism = 4;
};

void add_provider_flags(CLI::App& cmd, ProviderFlags& flags, bool allow_mock) {
    if (allow_mock) {
        cmd.add_flag("--mock", flags.mock, "Use the deterministic offline mock provider");
        cmd.add_option("--fixtures", flags.fixtures, "Fixture file replayed by the mock provider")
            ->check(CLI::ExistingFile);
    }
    cmd.add_option("--budget", flags.budget, "Context budget in characters")->check(CLI::PositiveNumber);
}

std::vector<std::string> split_ids(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto trimmed = std::string(utf8::trim(item));
        if (!trimmed.empty()) out.push_back(trimmed);
    }
    return out;
}

std::string read_input(const std::string& file) {
    if (file == "-") {
        return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    }
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot read " + file);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ProviderConfig provider_config(const ProviderFlags& flags) {
    ProviderConfig config = ProviderConfig::from_env();
    config.context_budget = flags.budget;
    if (flags.mock) config.temperature = 0.0;
    return config;
}

std::shared_ptr<Provider> make_provider(const ProviderFlags& flags, const ProviderConfig& config) {
    if (flags.mock) {
        std::vector<Fixture> fixtures;
        if (!flags.fixtures.empty()) fixtures = load_fixtures(flags.fixtures);
        return std::make_shared<MockProvider>(std::move(fixtures));
    }
    return std::make_shared<OpenAIProvider>(config);
}

PromptSet load_prompts(const std::string& prompt_file) {
    if (prompt_file.empty()) return builtin_prompts();
    return PromptSet::import_json(nlohmann::json::parse(read_input(prompt_file)));
}

std::vector<std::string> selected_prompts(const std::string& csv, const PromptSet& prompts) {
    std::vector<std::string> ids = split_ids(csv);
    if (ids.empty()) {
        for (const auto& p : prompts.list()) {
            if (p.is_builtin) ids.push_back(p.id);
        }
    }
    for (const auto& id : ids) prompts.get(id); // validates before any provider call
    return ids;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
    out << content;
}

httplib::Server* running_server = nullptr;

void handle_signal(int) {
    if (running_server != nullptr) running_server->stop();
}

} // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("revlens");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"revlens: LLM views for the paragraph you are revising"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    // report
    auto* report_cmd = app.add_subcommand("report", "Run prompts over every paragraph of a file");
    std::string report_file;
    std::string report_prompts;
    std::string report_format = "json";
    std::string report_output;
    std::string report_title;
    std::string report_prompt_file;
    ProviderFlags report_flags;
    report_cmd->add_option("file", report_file, "Plain-text document, or - for stdin")->required();
    report_cmd->add_option("--prompts", report_prompts, "Comma-separated prompt ids (default: all builtins)");
    report_cmd->add_option("--format", report_format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));
    report_cmd->add_option("-o,--output", report_output, "Write the report here instead of stdout");
    report_cmd->add_option("--title", report_title, "Document title sent as context");
    report_cmd->add_option("--prompt-file", report_prompt_file, "Exported custom prompts to load");
    report_cmd->add_option("--parallelism", report_flags.parallelism, "Concurrent requests in real mode")
        ->check(CLI::PositiveNumber);
    add_provider_flags(*report_cmd, report_flags, true);

    // record
    auto* record_cmd = app.add_subcommand("record", "Record real provider responses as mock fixtures");
    std::string record_file;
    std::string record_prompts;
    std::string record_out;
    std::string record_title;
    ProviderFlags record_flags;
    record_cmd->add_option("file", record_file, "Plain-text document, or - for stdin")->required();
    record_cmd->add_option("--prompts", record_prompts, "Comma-separated prompt ids (default: all builtins)");
    record_cmd->add_option("--fixtures", record_out, "Fixture file to write")->required();
    record_cmd->add_option("--title", record_title, "Document title sent as context");
    add_provider_flags(*record_cmd, record_flags, false);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP + server-sent events API");
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::string snapshot_path;
    int coalesce_ms = 300;
    std::size_t max_bytes = 1 << 20;
    std::string static_dir;
    ProviderFlags serve_flags;
    serve_cmd->add_option("--host", listen_host, "Listen address");
    serve_cmd->add_option("--port", listen_port, "Listen port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--snapshot", snapshot_path, "Load sessions from and save them to this JSON file");
    serve_cmd->add_option("--coalesce-ms", coalesce_ms, "Cursor coalescing window")->check(CLI::NonNegativeNumber);
    serve_cmd->add_option("--max-bytes", max_bytes, "Maximum document size");
    serve_cmd->add_option("--static", static_dir, "Directory served at / (web client)")->check(CLI::ExistingDirectory);
    add_provider_flags(*serve_cmd, serve_flags, true);
    serve_cmd->add_option("--workers", serve_flags.parallelism, "Generation workers per session")
        ->check(CLI::PositiveNumber);

    // prompts / schema
    auto* prompts_cmd = app.add_subcommand("prompts", "Print the builtin prompt library as JSON");
    auto* schema_cmd = app.add_subcommand("schema", "Print the JSON schema of the report format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }
    if (verbose) spdlog::set_level(spdlog::level::info);

    try {
        if (*prompts_cmd) {
            auto out = nlohmann::json::array();
            for (const auto& p : builtin_prompts().list()) out.push_back(to_json(p));
            std::cout << out.dump(2) << "\n";
            return exit_ok;
        }
        if (*schema_cmd) {
            std::cout << report_schema().dump(2) << "\n";
            return exit_ok;
        }

        if (*report_cmd) {
            const PromptSet prompts = load_prompts(report_prompt_file);
            ReportOptions options;
            options.prompt_ids = selected_prompts(report_prompts, prompts);
            options.provider = provider_config(report_flags);
            options.parallelism = report_flags.mock ? 1 : static_cast<std::size_t>(report_flags.parallelism);
            options.source_name = report_file == "-" ? "stdin" : std::filesystem::path(report_file).filename().string();
            options.title = report_title;

            const std::string text = read_input(report_file);
            if (!utf8::is_valid(text)) throw Error(ErrorCode::invalid_argument, "input is not valid UTF-8");
            auto provider = make_provider(report_flags, options.provider);
            const Report report = generate_report(Document("report", text), prompts, *provider, options);
            write_output(report_output, report_format == "json" ? report_to_json(report).dump(2) + "\n"
                                                                : report_to_markdown(report));
            return report.error_count() == 0 ? exit_ok : exit_view_errors;
        }

        if (*record_cmd) {
            const PromptSet prompts = builtin_prompts();
            ReportOptions options;
            options.prompt_ids = selected_prompts(record_prompts, prompts);
            options.provider = provider_config(record_flags);
            options.parallelism = 1;
            options.title = record_title;
            const std::string text = read_input(record_file);
            if (!utf8::is_valid(text)) throw Error(ErrorCode::invalid_argument, "input is not valid UTF-8");

            auto recorder = std::make_shared<RecordingProvider>(make_provider(record_flags, options.provider));
            const Report report = generate_report(Document("record", text), prompts, *recorder, options);
            save_fixtures(record_out, recorder->fixtures());
            std::cerr << "recorded " << recorder->fixtures().size() << " fixtures to " << record_out << "\n";
            for (const auto& p : report.paragraphs) {
                for (const auto& v : p.views) {
                    if (v.error) std::cerr << "paragraph " << p.paragraph.index << " / " << v.prompt_id << ": " << *v.error << "\n";
                }
            }
            return report.error_count() == 0 ? exit_ok : exit_view_errors;
        }

        if (*serve_cmd) {
            SessionOptions options;
            options.max_document_bytes = max_bytes;
            options.cursor_coalesce = std::chrono::milliseconds(coalesce_ms);
            options.engine.provider = provider_config(serve_flags);
            options.engine.workers = serve_flags.mock ? 1 : static_cast<std::size_t>(serve_flags.parallelism);
            auto provider = make_provider(serve_flags, options.engine.provider);
            spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
            spdlog::warn("provider {} ({})", provider->name(), options.engine.provider.to_json().dump());

            SessionStore store(provider, options);
            if (!snapshot_path.empty() && std::filesystem::exists(snapshot_path)) {
                spdlog::warn("restored {} sessions from {}", store.load(snapshot_path), snapshot_path);
            }
            httplib::Server server;
            server.set_payload_max_length(max_bytes * 2 + 65536);
            if (!static_dir.empty()) server.set_mount_point("/", static_dir);
            ApiServer api(store);
            api.mount(server);

            running_server = &server;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            int port = listen_port;
            if (port == 0) {
                port = server.bind_to_any_port(listen_host);
            } else if (!server.bind_to_port(listen_host, port)) {
                throw Error(ErrorCode::configuration, "cannot listen on " + listen_host + ":" + std::to_string(port));
            }
            std::cout << "listening on http://" << listen_host << ":" << port << std::endl;
            server.listen_after_bind();
            running_server = nullptr;
            if (!snapshot_path.empty()) store.save(snapshot_path);
            return exit_ok;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::configuration || e.code() == ErrorCode::not_found ||
                       e.code() == ErrorCode::invalid_argument || e.code() == ErrorCode::validation
                   ? exit_usage
                   : exit_view_errors;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_ok;
}
