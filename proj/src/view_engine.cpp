#include "revlens/view_engine.hpp"

#include "revlens/error.hpp"
#include "revlens/filter.hpp"
#include "revlens/hash.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace revlens {

const char* to_string(ViewStatus status) {
    switch (status) {
    case ViewStatus::pending: return "pending";
    case ViewStatus::streaming: return "streaming";
    case ViewStatus::complete: return "complete";
    case ViewStatus::error: return "error";
    case ViewStatus::cancelled: return "cancelled";
    }
    return "pending";
}

const View* ViewCache::find(const CacheKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void ViewCache::insert(const CacheKey& key, View view) {
    if (view.status != ViewStatus::complete) {
        throw Error(ErrorCode::invalid_argument, "only complete views may be cached");
    }
    entries_.insert_or_assign(key, std::move(view));
}

std::size_t ViewCache::erase_hashes(const std::set<std::string>& hashes) {
    return std::erase_if(entries_, [&](const auto& entry) { return hashes.contains(entry.first.content_hash); });
}

std::vector<CacheKey> ViewCache::keys() const {
    std::vector<CacheKey> out;
    out.reserve(entries_.size());
    for (const auto& [key, _] : entries_) out.push_back(key);
    return out;
}

ViewCache invalidate(const std::set<std::string>& stale_hashes, ViewCache cache) {
    cache.erase_hashes(stale_hashes);
    return cache;
}

std::vector<std::string> Neighborhood::view_ids() const {
    std::vector<std::string> ids;
    for (const auto& e : entries) {
        for (const auto& v : e.views) {
            // Paragraphs with identical text share one view.
            if (std::find(ids.begin(), ids.end(), v.id) == ids.end()) ids.push_back(v.id);
        }
    }
    return ids;
}

ViewEngine::ViewEngine(std::shared_ptr<Provider> provider, EngineOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
    if (!provider_) throw Error(ErrorCode::configuration, "view engine needs a provider");
    const std::size_t count = std::max<std::size_t>(1, options_.workers);
    workers_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
    }
}

ViewEngine::~ViewEngine() {
    shutdown();
}

void ViewEngine::shutdown() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_) return;
        stopping_ = true;
        for (auto& [_, flight] : in_flight_) flight.stop.request_stop();
        while (!queue_.empty()) {
            auto& v = views_[queue_.top().view_id];
            if (!is_terminal(v.status)) v.status = ViewStatus::cancelled;
            queue_.pop();
        }
        in_flight_.clear();
        bump_locked();
    }
    for (auto& w : workers_) w.request_stop();
    work_available_.notify_all();
    workers_.clear(); // joins
}

void ViewEngine::bump_locked() {
    ++changes_;
    changed_.notify_all();
}

Neighborhood ViewEngine::bootstrap(const Document& doc, std::string_view title) {
    if (doc.empty()) throw Error(ErrorCode::empty_document, "cannot bootstrap an empty document");
    const PromptSet builtins;
    const CursorScope scope{0, neighborhood_of(0, doc.paragraphs().size())};
    return schedule(doc, scope, builtins.get(builtin_ids::thesis), title, {0});
}

Neighborhood ViewEngine::request_views(const CursorScope& scope, const PromptTemplate& prompt,
                                       const Document& doc, std::string_view title) {
    const std::size_t count = doc.paragraphs().size();
    if (scope.paragraph_index >= count) {
        throw Error(ErrorCode::invalid_argument, "cursor scope does not match the document");
    }
    for (std::size_t i : scope.neighborhood) {
        if (i >= count) throw Error(ErrorCode::invalid_argument, "cursor scope does not match the document");
    }
    // Priority order: current, succeeding, preceding.
    std::vector<std::size_t> order{scope.paragraph_index};
    for (std::size_t i : scope.neighborhood) {
        if (i == scope.paragraph_index + 1) order.push_back(i);
    }
    for (std::size_t i : scope.neighborhood) {
        if (i + 1 == scope.paragraph_index) order.push_back(i);
    }
    return schedule(doc, scope, prompt, title, order);
}

Neighborhood ViewEngine::schedule(const Document& doc, const CursorScope& scope,
                                  const PromptTemplate& prompt, std::string_view title,
                                  const std::vector<std::size_t>& generate) {
    RenderOptions render_options;
    render_options.context_budget = options_.provider.context_budget;
    render_options.temperature = options_.provider.temperature;
    render_options.max_output_tokens = options_.max_output_tokens;
    const std::string body_hash = sha256_hex(prompt.body);

    Neighborhood hood;
    hood.current = scope.paragraph_index;
    hood.prompt_id = prompt.id;
    std::map<std::size_t, View> produced;

    {
        std::lock_guard lock(mutex_);
        if (stopping_) throw Error(ErrorCode::configuration, "view engine is shut down");
        const std::uint64_t batch = ++next_batch_;
        int rank = 0;
        for (std::size_t index : generate) {
            const Paragraph& para = doc.paragraphs()[index];
            CacheKey key{para.content_hash, prompt.id, body_hash};

            if (const View* hit = cache_.find(key)) {
                View& stored = views_[hit->id];
                stored = *hit;
                stored.paragraph_index = index;
                stored.range = para.range;
                produced[index] = stored;
                continue;
            }
            if (auto it = in_flight_.find(key); it != in_flight_.end()) {
                produced[index] = views_.at(it->second.view_id);
                continue;
            }

            View v;
            v.id = "v" + std::to_string(next_view_++);
            v.paragraph_index = index;
            v.range = para.range;
            v.content_hash = para.content_hash;
            v.prompt_id = prompt.id;
            v.body_hash = body_hash;
            v.filter = prompt.uses_final_output_filter;
            v.created_at = std::chrono::system_clock::now();

            Job job;
            job.batch = batch;
            job.rank = rank++;
            job.view_id = v.id;
            job.key = key;
            job.request = render(prompt, para.text, title, render_options);
            v.truncated = job.request.truncated;

            Flight flight;
            flight.view_id = v.id;
            job.stop = flight.stop.get_token();
            in_flight_.emplace(key, std::move(flight));
            views_[v.id] = v;
            produced[index] = std::move(v);
            queue_.push(std::move(job));
        }
        bump_locked();
    }
    work_available_.notify_all();

    for (std::size_t index : scope.neighborhood) {
        NeighborhoodEntry entry{index, {}};
        if (auto it = produced.find(index); it != produced.end()) entry.views.push_back(it->second);
        hood.entries.push_back(std::move(entry));
    }
    return hood;
}

void ViewEngine::worker_loop(std::stop_token stop) {
    while (true) {
        Job job;
        {
            std::unique_lock lock(mutex_);
            if (!work_available_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
            job = queue_.top();
            queue_.pop();
            ++running_;
        }
        run(std::move(job));
        {
            std::lock_guard lock(mutex_);
            --running_;
            bump_locked();
        }
    }
}

void ViewEngine::run(Job job) {
    {
        std::lock_guard lock(mutex_);
        View& v = views_.at(job.view_id);
        if (v.status != ViewStatus::pending) return;
        if (job.stop.stop_requested()) {
            v.status = ViewStatus::cancelled;
            bump_locked();
            return;
        }
        v.status = ViewStatus::streaming;
        bump_locked();
    }

    auto sink = [&](const StreamEvent& event) {
        std::lock_guard lock(mutex_);
        View& v = views_.at(job.view_id);
        if (is_terminal(v.status) || job.stop.stop_requested()) return;
        if (event.kind == StreamEventKind::delta) {
            v.raw_text += event.text;
            v.display_text = filter_final_output(v.raw_text, v.filter);
            bump_locked();
        } else if (event.kind == StreamEventKind::error && event.error) {
            v.error_detail = std::string(to_string(event.error->kind)) + ": " + event.error->message;
        }
    };

    const StreamOutcome outcome =
        complete_streaming(*provider_, job.request, options_.provider, job.stop, sink);

    std::lock_guard lock(mutex_);
    View& v = views_.at(job.view_id);
    if (outcome == StreamOutcome::cancelled || job.stop.stop_requested()) {
        v.status = ViewStatus::cancelled;
    } else if (outcome == StreamOutcome::error) {
        v.status = ViewStatus::error;
        if (!v.error_detail) v.error_detail = "generation failed";
        spdlog::warn("view {} failed: {}", v.id, *v.error_detail);
    } else {
        v.status = ViewStatus::complete;
        v.display_text = filter_final_output(v.raw_text, v.filter);
        cache_.insert(job.key, v);
    }
    if (auto it = in_flight_.find(job.key); it != in_flight_.end() && it->second.view_id == job.view_id) {
        in_flight_.erase(it);
    }
    bump_locked();
}

std::size_t ViewEngine::invalidate(const std::set<std::string>& stale_hashes) {
    std::lock_guard lock(mutex_);
    const std::size_t dropped = cache_.erase_hashes(stale_hashes);
    for (auto it = in_flight_.begin(); it != in_flight_.end();) {
        if (!stale_hashes.contains(it->first.content_hash)) {
            ++it;
            continue;
        }
        it->second.stop.request_stop();
        View& v = views_.at(it->second.view_id);
        // Queued jobs never reach the provider; streaming ones stop at the next chunk.
        if (v.status == ViewStatus::pending) v.status = ViewStatus::cancelled;
        it = in_flight_.erase(it);
    }
    bump_locked();
    return dropped;
}

std::optional<View> ViewEngine::view(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = views_.find(id);
    if (it == views_.end()) return std::nullopt;
    return it->second;
}

std::vector<View> ViewEngine::views(const std::vector<std::string>& ids) const {
    std::lock_guard lock(mutex_);
    std::vector<View> out;
    for (const auto& id : ids) {
        if (auto it = views_.find(id); it != views_.end()) out.push_back(it->second);
    }
    return out;
}

std::size_t ViewEngine::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<CacheKey> ViewEngine::cache_keys() const {
    std::lock_guard lock(mutex_);
    return cache_.keys();
}

std::uint64_t ViewEngine::change_count() const {
    std::lock_guard lock(mutex_);
    return changes_;
}

std::uint64_t ViewEngine::wait_for_change(std::uint64_t seen, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, timeout, [&] { return changes_ != seen; });
    return changes_;
}

void ViewEngine::wait_idle() const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return queue_.empty() && running_ == 0; });
}

} // namespace revlens
