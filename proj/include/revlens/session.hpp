#pragma once

#include "revlens/document.hpp"
#include "revlens/prompts.hpp"
#include "revlens/view_engine.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace revlens {

struct SessionOptions {
    std::size_t max_document_bytes = 1 << 20;
    EngineOptions engine;
    // Cursor requests arriving within this window of a newer one are dropped.
    std::chrono::milliseconds cursor_coalesce{300};
};

struct UpdateResult {
    std::uint64_t version = 0;
    ParagraphDiff diff;
};

struct ActiveScope {
    CursorScope scope;
    std::string prompt_id;
    Neighborhood neighborhood;
};

// One document with its prompt library, view engine and active cursor scope.
// All mutation goes through the session's mutex; getters return copies.
class Session {
public:
    Session(std::string id, std::string text, std::string title, std::shared_ptr<Provider> provider,
            SessionOptions options);

    const std::string& id() const { return id_; }
    std::string title() const;
    Document document() const;
    bool onboarding() const;

    // Throws ConflictError on a stale base version.
    UpdateResult update_document(std::string text, std::uint64_t base_version);

    std::vector<PromptTemplate> list_prompts() const;
    PromptTemplate create_prompt(std::string label, std::string body, PromptCategory category);
    PromptTemplate edit_prompt(std::string_view id, std::string body, bool preserve_category);
    nlohmann::json export_prompts() const;
    void import_prompts(const nlohmann::json& data);
    PromptTemplate prompt(std::string_view id) const;

    // Coalescing: take a ticket when a cursor request arrives, and skip the
    // request if a newer ticket exists once the window has passed.
    std::uint64_t take_cursor_ticket();
    bool cursor_superseded(std::uint64_t ticket) const;
    std::chrono::milliseconds cursor_coalesce() const { return options_.cursor_coalesce; }

    // Snaps and schedules the neighborhood with the given prompt.
    ActiveScope set_cursor(std::size_t offset, std::string_view prompt_id);
    std::optional<ActiveScope> active_scope() const;

    ViewEngine& engine() { return *engine_; }
    const ViewEngine& engine() const { return *engine_; }

    // Wire projection of a view against the current document.
    nlohmann::json wire_view(const View& view) const;
    // {scope, prompt_id, neighborhood:[{paragraph_index, views:[...]}]} or onboarding state.
    nlohmann::json views_snapshot() const;
    nlohmann::json summary() const;

    nlohmann::json persist_json() const;

    void close();

private:
    friend class SessionStore;

    nlohmann::json wire_view_locked(const View& view) const;
    void bootstrap_locked();

    std::string id_;
    SessionOptions options_;
    mutable std::mutex mutex_;
    std::string title_;
    Document document_;
    PromptSet prompts_;
    std::optional<ActiveScope> active_;
    std::uint64_t cursor_tickets_ = 0;
    std::unique_ptr<ViewEngine> engine_;
};

nlohmann::json paragraphs_json(const Document& doc);

class SessionStore {
public:
    SessionStore(std::shared_ptr<Provider> provider, SessionOptions options = {});
    ~SessionStore();

    // Throws Error(too_large) past the size limit, Error(invalid_argument) for invalid UTF-8.
    std::shared_ptr<Session> create(std::string text, std::string title = {});
    // Throws Error(not_found).
    std::shared_ptr<Session> get(std::string_view id) const;
    bool erase(std::string_view id);
    std::size_t size() const;

    const SessionOptions& options() const { return options_; }

    // Documents, titles and custom prompts; caches are not persisted.
    void save(const std::filesystem::path& path) const;
    std::size_t load(const std::filesystem::path& path);

private:
    std::shared_ptr<Provider> provider_;
    SessionOptions options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
};

} // namespace revlens
