#pragma once

#include "revlens/session.hpp"

#include <chrono>
#include <string>

namespace httplib {
class Server;
}

namespace revlens {

struct ApiOptions {
    std::chrono::milliseconds keepalive{15000};
};

// HTTP+JSON routes:
//   POST   /sessions                          create {text, title?}
//   GET    /sessions/{id}                     summary
//   DELETE /sessions/{id}
//   GET    /sessions/{id}/document            text, version, paragraphs
//   PUT    /sessions/{id}/document            {text, base_version}
//   GET    /sessions/{id}/prompts             list
//   POST   /sessions/{id}/prompts             create {label, body, category?}
//   PUT    /sessions/{id}/prompts/{pid}       edit {body, preserve_category?}
//   GET    /sessions/{id}/prompts/export
//   POST   /sessions/{id}/prompts/import
//   POST   /sessions/{id}/cursor              {offset, prompt_id} -> SSE
//   GET    /sessions/{id}/cursor?offset=&prompt_id=  -> SSE (EventSource)
//   GET    /sessions/{id}/views               snapshot of the active neighborhood
class ApiServer {
public:
    explicit ApiServer(SessionStore& store, ApiOptions options = {});

    void mount(httplib::Server& server);

private:
    SessionStore& store_;
    ApiOptions options_;
};

// Serialization of one server-sent event.
std::string sse_event(std::string_view event, const nlohmann::json& data);

} // namespace revlens
