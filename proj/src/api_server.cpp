#include "revlens/api_server.hpp"

#include "revlens/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <thread>

namespace revlens {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::validation: return 422;
    case ErrorCode::conflict: return 409;
    case ErrorCode::too_large: return 413;
    case ErrorCode::empty_document: return 409;
    case ErrorCode::configuration: return 500;
    }
    return 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object() && !j.is_array()) throw Error(ErrorCode::invalid_argument, "expected a JSON object");
        return j;
    } catch (const json::parse_error&) {
        throw Error(ErrorCode::invalid_argument, "request body is not valid JSON");
    }
}

template <typename T>
T field(const json& body, const char* name) {
    if (!body.is_object() || !body.contains(name)) {
        throw Error(ErrorCode::invalid_argument, std::string("missing field '") + name + "'");
    }
    try {
        return body.at(name).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::invalid_argument, std::string("field '") + name + "' has the wrong type");
    }
}

// Wraps a handler so library errors map onto JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ConflictError& e) {
            send_json(res, 409, {{"error", e.what()}, {"code", "conflict"}, {"current_version", e.current_version()}});
        } catch (const Error& e) {
            send_json(res, http_status(e.code()), {{"error", e.what()}, {"code", to_string(e.code())}});
        } catch (const std::exception& e) {
            spdlog::error("unhandled error on {} {}: {}", req.method, req.path, e.what());
            send_json(res, 500, {{"error", "internal error"}, {"code", "internal"}});
        }
    };
}

std::size_t parse_offset(const json& value) {
    if (value.is_number_unsigned()) return value.get<std::size_t>();
    if (value.is_number_integer() && value.get<long long>() >= 0) return value.get<std::size_t>();
    throw Error(ErrorCode::invalid_argument, "offset must be a non-negative integer");
}

struct CursorStream {
    std::shared_ptr<Session> session;
    std::size_t offset = 0;
    std::string prompt_id;
    std::uint64_t ticket = 0;
    std::chrono::milliseconds keepalive{15000};
};

// Streams the neighborhood as view_pending (view_delta)* (view_done | view_error)
// per view, framed by a leading scope event and a trailing end event.
void run_cursor_stream(const CursorStream& cs, httplib::DataSink& sink) {
    auto write = [&](const std::string& chunk) { return sink.is_writable() && sink.write(chunk.data(), chunk.size()); };

    if (cs.session->cursor_coalesce().count() > 0) {
        std::this_thread::sleep_for(cs.session->cursor_coalesce());
        if (cs.session->cursor_superseded(cs.ticket)) {
            write(sse_event("superseded", {{"reason", "a newer cursor position arrived"}}));
            sink.done();
            return;
        }
    }

    ActiveScope active;
    try {
        active = cs.session->set_cursor(cs.offset, cs.prompt_id);
    } catch (const Error& e) {
        write(sse_event("error", {{"error", e.what()}, {"code", to_string(e.code())}}));
        sink.done();
        return;
    }
    const Document doc = cs.session->document();
    const auto& para = doc.paragraphs().at(active.scope.paragraph_index);
    if (!write(sse_event("scope", {{"paragraph_index", active.scope.paragraph_index},
                                   {"neighborhood", active.scope.neighborhood},
                                   {"range", {{"start", para.range.start}, {"end", para.range.end}}},
                                   {"prompt_id", active.prompt_id}}))) {
        return;
    }

    struct Tracked {
        std::string id;
        std::size_t sent = 0;
        bool finished = false;
    };
    std::vector<Tracked> tracked;
    for (const auto& id : active.neighborhood.view_ids()) tracked.push_back({id, 0, false});

    ViewEngine& engine = cs.session->engine();
    std::uint64_t seen = engine.change_count();

    for (auto& t : tracked) {
        auto v = engine.view(t.id);
        if (!v) continue;
        json pending = cs.session->wire_view(*v);
        pending["status"] = "pending";
        pending.erase("display_text");
        pending.erase("display_blocks");
        pending.erase("error");
        if (!write(sse_event("view_pending", pending))) return;
        // Views already finished (cache hits) are reported without deltas.
        if (is_terminal(v->status)) {
            t.finished = true;
            const bool ok = v->status == ViewStatus::complete;
            if (!write(sse_event(ok ? "view_done" : "view_error", cs.session->wire_view(*v)))) return;
        }
    }

    while (true) {
        bool all_done = true;
        for (auto& t : tracked) {
            if (t.finished) continue;
            auto v = engine.view(t.id);
            if (!v) {
                t.finished = true;
                continue;
            }
            if (v->raw_text.size() > t.sent) {
                json delta{{"view_id", v->id},
                           {"delta", v->raw_text.substr(t.sent)},
                           {"display_text", v->display_text}};
                t.sent = v->raw_text.size();
                if (!write(sse_event("view_delta", delta))) return;
            }
            if (is_terminal(v->status)) {
                t.finished = true;
                const bool ok = v->status == ViewStatus::complete;
                if (!write(sse_event(ok ? "view_done" : "view_error", cs.session->wire_view(*v)))) return;
            } else {
                all_done = false;
            }
        }
        if (all_done) break;
        const std::uint64_t now = engine.wait_for_change(seen, cs.keepalive);
        if (now == seen && !write(": keepalive\n\n")) return;
        seen = now;
    }
    write(sse_event("end", {{"view_ids", active.neighborhood.view_ids()}}));
    sink.done();
}

void start_cursor_stream(SessionStore& store, const ApiOptions& options, const std::string& session_id,
                         const json& offset_value, std::string prompt_id, httplib::Response& res) {
    auto session = store.get(session_id);
    const std::size_t offset = parse_offset(offset_value);
    const Document doc = session->document();
    if (doc.empty()) throw Error(ErrorCode::empty_document, "document is empty");
    if (offset > doc.length()) throw Error(ErrorCode::invalid_argument, "offset beyond end of text");

    auto cs = std::make_shared<CursorStream>();
    cs->session = std::move(session);
    cs->offset = offset;
    cs->prompt_id = std::move(prompt_id);
    cs->ticket = cs->session->take_cursor_ticket();
    cs->keepalive = options.keepalive;

    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [cs](size_t, httplib::DataSink& sink) {
        run_cursor_stream(*cs, sink);
        return true;
    });
}

const char* session_pattern = R"(/sessions/([0-9a-f]+))";

std::string route(const char* suffix) {
    return std::string(session_pattern) + suffix;
}

} // namespace

std::string sse_event(std::string_view event, const nlohmann::json& data) {
    std::string out = "event: ";
    out += event;
    out += "\ndata: ";
    out += data.dump();
    out += "\n\n";
    return out;
}

ApiServer::ApiServer(SessionStore& store, ApiOptions options) : store_(store), options_(options) {}

void ApiServer::mount(httplib::Server& server) {
    SessionStore& store = store_;
    const ApiOptions options = options_;

    server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        // Size check first so oversized bodies do not pay for a JSON parse.
        if (req.body.size() > store.options().max_document_bytes + 4096) {
            throw Error(ErrorCode::too_large, "document exceeds the configured size limit");
        }
        const json body = parse_body(req);
        const std::string text = body.value("text", "");
        auto session = store.create(text, body.value("title", ""));
        json out = session->summary();
        if (auto active = session->active_scope()) out["bootstrap_view_ids"] = active->neighborhood.view_ids();
        send_json(res, 201, out);
    }));

    server.Get(route(""), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, store.get(req.matches[1].str())->summary());
    }));

    server.Delete(route(""), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        if (!store.erase(req.matches[1].str())) throw Error(ErrorCode::not_found, "unknown session");
        res.status = 204;
    }));

    server.Get(route("/document"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const Document doc = store.get(req.matches[1].str())->document();
        send_json(res, 200, {{"text", doc.text()}, {"version", doc.version()}, {"paragraphs", paragraphs_json(doc)}});
    }));

    server.Put(route("/document"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto session = store.get(req.matches[1].str());
        const json body = parse_body(req);
        auto result = session->update_document(field<std::string>(body, "text"),
                                               field<std::uint64_t>(body, "base_version"));
        const Document doc = session->document();
        send_json(res, 200, {
            {"version", result.version},
            {"changed", result.diff.changed()},
            {"modified", result.diff.modified},
            {"inserted", result.diff.inserted},
            {"deleted", result.diff.deleted},
            {"paragraphs", paragraphs_json(doc)},
        });
    }));

    server.Get(route("/prompts"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto out = json::array();
        for (const auto& p : store.get(req.matches[1].str())->list_prompts()) out.push_back(to_json(p));
        send_json(res, 200, out);
    }));

    server.Post(route("/prompts"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto session = store.get(req.matches[1].str());
        const json body = parse_body(req);
        const auto category = parse_category(body.value("category", "custom"));
        if (!category) throw Error(ErrorCode::validation, "unknown prompt category");
        send_json(res, 201, to_json(session->create_prompt(body.value("label", ""), body.value("body", ""), *category)));
    }));

    server.Get(route("/prompts/export"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, store.get(req.matches[1].str())->export_prompts());
    }));

    server.Post(route("/prompts/import"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        auto session = store.get(req.matches[1].str());
        session->import_prompts(parse_body(req));
        auto out = json::array();
        for (const auto& p : session->list_prompts()) out.push_back(to_json(p));
        send_json(res, 200, out);
    }));

    server.Put(route("/prompts/([A-Za-z0-9_.-]+)"),
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   auto session = store.get(req.matches[1].str());
                   const json body = parse_body(req);
                   auto edited = session->edit_prompt(req.matches[2].str(), body.value("body", ""),
                                                      body.value("preserve_category", false));
                   send_json(res, 200, to_json(edited));
               }));

    server.Post(route("/cursor"), guarded([&store, options](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        start_cursor_stream(store, options, req.matches[1].str(), body.contains("offset") ? body["offset"] : json(),
                            body.value("prompt_id", std::string(builtin_ids::thesis)), res);
    }));

    server.Get(route("/cursor"), guarded([&store, options](const httplib::Request& req, httplib::Response& res) {
        json offset;
        if (req.has_param("offset")) {
            try {
                offset = std::stoull(req.get_param_value("offset"));
            } catch (const std::exception&) {
                throw Error(ErrorCode::invalid_argument, "offset must be a non-negative integer");
            }
        }
        const std::string prompt =
            req.has_param("prompt_id") ? req.get_param_value("prompt_id") : std::string(builtin_ids::thesis);
        start_cursor_stream(store, options, req.matches[1].str(), offset, prompt, res);
    }));

    server.Get(route("/views"), guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, store.get(req.matches[1].str())->views_snapshot());
    }));
}

} // namespace revlens
