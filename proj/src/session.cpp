#include "revlens/session.hpp"

#include "revlens/error.hpp"
#include "revlens/hash.hpp"
#include "revlens/markdown.hpp"
#include "revlens/utf8.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace revlens {

nlohmann::json paragraphs_json(const Document& doc) {
    auto out = nlohmann::json::array();
    for (const auto& p : doc.paragraphs()) {
        out.push_back({
            {"index", p.index},
            {"range", {{"start", p.range.start}, {"end", p.range.end}}},
            {"content_hash", p.content_hash},
        });
    }
    return out;
}

namespace {

nlohmann::json scope_json(const CursorScope& scope, const Document& doc) {
    const auto& p = doc.paragraphs().at(scope.paragraph_index);
    return {
        {"paragraph_index", scope.paragraph_index},
        {"neighborhood", scope.neighborhood},
        {"range", {{"start", p.range.start}, {"end", p.range.end}}},
    };
}

} // namespace

Session::Session(std::string id, std::string text, std::string title, std::shared_ptr<Provider> provider,
                 SessionOptions options)
    : id_(std::move(id)), options_(std::move(options)), title_(std::move(title)),
      document_(id_, std::move(text)),
      engine_(std::make_unique<ViewEngine>(std::move(provider), options_.engine)) {
    std::lock_guard lock(mutex_);
    bootstrap_locked();
}

void Session::bootstrap_locked() {
    if (document_.empty()) return;
    Neighborhood hood = engine_->bootstrap(document_, title_);
    active_ = ActiveScope{CursorScope{0, neighborhood_of(0, document_.paragraphs().size())},
                          std::string(builtin_ids::thesis), std::move(hood)};
}

std::string Session::title() const {
    std::lock_guard lock(mutex_);
    return title_;
}

Document Session::document() const {
    std::lock_guard lock(mutex_);
    return document_;
}

bool Session::onboarding() const {
    std::lock_guard lock(mutex_);
    return document_.empty();
}

UpdateResult Session::update_document(std::string text, std::uint64_t base_version) {
    if (text.size() > options_.max_document_bytes) {
        throw Error(ErrorCode::too_large, "document exceeds " + std::to_string(options_.max_document_bytes) + " bytes");
    }
    if (!utf8::is_valid(text)) throw Error(ErrorCode::invalid_argument, "document text is not valid UTF-8");

    std::lock_guard lock(mutex_);
    if (base_version != document_.version()) {
        throw ConflictError(document_.version(), "base version " + std::to_string(base_version) +
                                                     " does not match current version " +
                                                     std::to_string(document_.version()));
    }
    Document next = document_.with_text(std::move(text));
    UpdateResult result;
    result.diff = diff_paragraphs(document_, next);
    result.version = next.version();
    const bool was_empty = document_.empty();
    document_ = std::move(next);

    const std::set<std::string> stale(result.diff.stale_hashes.begin(), result.diff.stale_hashes.end());
    if (!stale.empty()) engine_->invalidate(stale);

    if (document_.empty()) {
        active_.reset();
    } else if (was_empty) {
        bootstrap_locked();
    }
    return result;
}

std::vector<PromptTemplate> Session::list_prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_.list();
}

PromptTemplate Session::prompt(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return prompts_.get(id);
}

PromptTemplate Session::create_prompt(std::string label, std::string body, PromptCategory category) {
    std::lock_guard lock(mutex_);
    const std::string id = prompts_.create(std::move(label), std::move(body), category);
    return prompts_.get(id);
}

PromptTemplate Session::edit_prompt(std::string_view id, std::string body, bool preserve_category) {
    std::lock_guard lock(mutex_);
    const std::string active = prompts_.edit(id, std::move(body), preserve_category);
    return prompts_.get(active);
}

nlohmann::json Session::export_prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_.export_json();
}

void Session::import_prompts(const nlohmann::json& data) {
    PromptSet imported = PromptSet::import_json(data);
    std::lock_guard lock(mutex_);
    prompts_ = std::move(imported);
}

std::uint64_t Session::take_cursor_ticket() {
    std::lock_guard lock(mutex_);
    return ++cursor_tickets_;
}

bool Session::cursor_superseded(std::uint64_t ticket) const {
    std::lock_guard lock(mutex_);
    return ticket != cursor_tickets_;
}

ActiveScope Session::set_cursor(std::size_t offset, std::string_view prompt_id) {
    std::lock_guard lock(mutex_);
    const PromptTemplate& prompt = prompts_.get(prompt_id);
    const CursorScope scope = snap(document_, offset);
    Neighborhood hood = engine_->request_views(scope, prompt, document_, title_);
    active_ = ActiveScope{scope, prompt.id, std::move(hood)};
    return *active_;
}

std::optional<ActiveScope> Session::active_scope() const {
    std::lock_guard lock(mutex_);
    return active_;
}

nlohmann::json Session::wire_view(const View& view) const {
    std::lock_guard lock(mutex_);
    return wire_view_locked(view);
}

nlohmann::json Session::wire_view_locked(const View& view) const {
    // Follow the bound text if it moved; otherwise the card is stale and keeps
    // the range it was generated for.
    const Paragraph* bound = nullptr;
    std::size_t best = 0;
    for (const auto& p : document_.paragraphs()) {
        if (p.content_hash != view.content_hash) continue;
        const std::size_t distance =
            p.index > view.paragraph_index ? p.index - view.paragraph_index : view.paragraph_index - p.index;
        if (bound == nullptr || distance < best) {
            bound = &p;
            best = distance;
        }
    }
    const std::size_t index = bound ? bound->index : view.paragraph_index;
    const TextRange range = bound ? bound->range : view.range;

    nlohmann::json j{
        {"view_id", view.id},
        {"paragraph_index", index},
        {"range", {{"start", range.start}, {"end", range.end}}},
        {"prompt_id", view.prompt_id},
        {"status", to_string(view.status)},
        {"display_text", view.display_text},
        {"display_blocks", to_json(parse_display(view.display_text))},
        {"stale", bound == nullptr},
        {"truncated", view.truncated},
    };
    if (view.error_detail) j["error"] = *view.error_detail;
    return j;
}

nlohmann::json Session::views_snapshot() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out{{"session_id", id_}, {"version", document_.version()}};
    if (!active_) {
        out["onboarding"] = document_.empty();
        out["scope"] = nullptr;
        out["prompt_id"] = nullptr;
        out["neighborhood"] = nlohmann::json::array();
        return out;
    }
    out["onboarding"] = false;
    out["prompt_id"] = active_->prompt_id;
    out["scope"] = active_->scope.paragraph_index < document_.paragraphs().size()
                       ? scope_json(active_->scope, document_)
                       : nlohmann::json(nullptr);
    auto hood = nlohmann::json::array();
    for (const auto& entry : active_->neighborhood.entries) {
        auto views = nlohmann::json::array();
        std::vector<std::string> ids;
        for (const auto& v : entry.views) ids.push_back(v.id);
        for (const auto& v : engine_->views(ids)) views.push_back(wire_view_locked(v));
        hood.push_back({{"paragraph_index", entry.paragraph_index}, {"views", std::move(views)}});
    }
    out["neighborhood"] = std::move(hood);
    return out;
}

nlohmann::json Session::summary() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out{
        {"session_id", id_},
        {"title", title_},
        {"version", document_.version()},
        {"onboarding", document_.empty()},
        {"length", document_.length()},
        {"paragraphs", paragraphs_json(document_)},
    };
    if (active_) {
        std::vector<std::string> ids = active_->neighborhood.view_ids();
        out["active_view_ids"] = ids;
    }
    return out;
}

nlohmann::json Session::persist_json() const {
    std::lock_guard lock(mutex_);
    return {
        {"session_id", id_},
        {"title", title_},
        {"text", document_.text()},
        {"version", document_.version()},
        {"prompts", prompts_.export_json()},
    };
}

void Session::close() {
    engine_->shutdown();
}

SessionStore::SessionStore(std::shared_ptr<Provider> provider, SessionOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {}

SessionStore::~SessionStore() {
    std::unique_lock lock(mutex_);
    for (auto& [_, s] : sessions_) s->close();
}

std::shared_ptr<Session> SessionStore::create(std::string text, std::string title) {
    if (text.size() > options_.max_document_bytes) {
        throw Error(ErrorCode::too_large, "document exceeds " + std::to_string(options_.max_document_bytes) + " bytes");
    }
    if (!utf8::is_valid(text) || !utf8::is_valid(title)) {
        throw Error(ErrorCode::invalid_argument, "document text is not valid UTF-8");
    }
    auto session = std::make_shared<Session>(random_token(16), std::move(text), std::move(title), provider_, options_);
    std::unique_lock lock(mutex_);
    sessions_.emplace(session->id(), session);
    spdlog::info("session {} created ({} paragraphs)", session->id().substr(0, 8),
                 session->document().paragraphs().size());
    return session;
}

std::shared_ptr<Session> SessionStore::get(std::string_view id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session");
    return it->second;
}

bool SessionStore::erase(std::string_view id) {
    std::shared_ptr<Session> victim;
    {
        std::unique_lock lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return false;
        victim = std::move(it->second);
        sessions_.erase(it);
    }
    victim->close();
    return true;
}

std::size_t SessionStore::size() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
}

void SessionStore::save(const std::filesystem::path& path) const {
    auto out = nlohmann::json::array();
    {
        std::shared_lock lock(mutex_);
        for (const auto& [_, s] : sessions_) out.push_back(s->persist_json());
    }
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::invalid_argument, "cannot write snapshot " + path.string());
    file << nlohmann::json{{"snapshot_version", 1}, {"sessions", out}}.dump(2) << "\n";
}

std::size_t SessionStore::load(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorCode::not_found, "cannot open snapshot " + path.string());
    nlohmann::json data;
    try {
        data = nlohmann::json::parse(file);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::validation, std::string("snapshot is not valid JSON: ") + e.what());
    }
    std::size_t loaded = 0;
    for (const auto& item : data.value("sessions", nlohmann::json::array())) {
        auto session = std::make_shared<Session>(item.at("session_id").get<std::string>(), "",
                                                 item.value("title", ""), provider_, options_);
        {
            std::lock_guard lock(session->mutex_);
            session->document_ = Document(session->id(), item.value("text", ""), item.value("version", std::uint64_t{1}));
            session->prompts_ = PromptSet::import_json(item.value("prompts", nlohmann::json::array()));
            session->bootstrap_locked();
        }
        std::unique_lock lock(mutex_);
        sessions_[session->id()] = std::move(session);
        ++loaded;
    }
    return loaded;
}

} // namespace revlens
