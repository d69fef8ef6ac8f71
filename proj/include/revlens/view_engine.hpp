#pragma once

#include "revlens/document.hpp"
#include "revlens/llm.hpp"
#include "revlens/prompts.hpp"

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace revlens {

enum class ViewStatus { pending, streaming, complete, error, cancelled };

const char* to_string(ViewStatus status);
inline bool is_terminal(ViewStatus s) {
    return s == ViewStatus::complete || s == ViewStatus::error || s == ViewStatus::cancelled;
}

// The data behind one sidebar card.
struct View {
    std::string id;
    std::size_t paragraph_index = 0;
    TextRange range;
    std::string content_hash; // hash of the paragraph text that was sent
    std::string prompt_id;
    std::string body_hash;
    bool filter = false;
    bool truncated = false;
    ViewStatus status = ViewStatus::pending;
    std::string raw_text;
    std::string display_text; // always filter_final_output(raw_text, filter)
    std::optional<std::string> error_detail;
    std::chrono::system_clock::time_point created_at;
};

struct CacheKey {
    std::string content_hash;
    std::string prompt_id;
    std::string body_hash;

    auto operator<=>(const CacheKey&) const = default;
};

// Holds complete views only.
class ViewCache {
public:
    const View* find(const CacheKey& key) const;
    // Throws Error(invalid_argument) for views that are not complete.
    void insert(const CacheKey& key, View view);
    // Drops every entry bound to one of the hashes; returns how many went.
    std::size_t erase_hashes(const std::set<std::string>& hashes);
    std::size_t size() const { return entries_.size(); }
    std::vector<CacheKey> keys() const;

private:
    std::map<CacheKey, View> entries_;
};

// Pure form of invalidation over a cache value.
ViewCache invalidate(const std::set<std::string>& stale_hashes, ViewCache cache);

struct NeighborhoodEntry {
    std::size_t paragraph_index = 0;
    std::vector<View> views;
};

struct Neighborhood {
    std::size_t current = 0;
    std::string prompt_id;
    std::vector<NeighborhoodEntry> entries; // document order

    std::vector<std::string> view_ids() const;
};

struct EngineOptions {
    std::size_t workers = 4;
    ProviderConfig provider;
    int max_output_tokens = 512;
};

// Schedules and tracks view generation for one session. Per (content hash,
// prompt, body) key there is at most one generation in flight, and complete
// results are cached. Newer requests run before older queued ones; within a
// request the current paragraph runs first, then succeeding, then preceding.
class ViewEngine {
public:
    ViewEngine(std::shared_ptr<Provider> provider, EngineOptions options = {});
    ~ViewEngine();

    ViewEngine(const ViewEngine&) = delete;
    ViewEngine& operator=(const ViewEngine&) = delete;

    // One thesis view for paragraph 0. Throws Error(empty_document).
    Neighborhood bootstrap(const Document& doc, std::string_view title = {});

    Neighborhood request_views(const CursorScope& scope, const PromptTemplate& prompt,
                               const Document& doc, std::string_view title = {});

    // Drops cached views for the hashes and cancels generations bound to them.
    std::size_t invalidate(const std::set<std::string>& stale_hashes);

    std::optional<View> view(const std::string& id) const;
    std::vector<View> views(const std::vector<std::string>& ids) const;

    std::size_t cache_size() const;
    std::vector<CacheKey> cache_keys() const;

    // Monotonic counter bumped on every state change.
    std::uint64_t change_count() const;
    std::uint64_t wait_for_change(std::uint64_t seen, std::chrono::milliseconds timeout) const;

    void wait_idle() const;
    // Cancels everything and joins the workers; further requests are rejected.
    void shutdown();

private:
    struct Job {
        std::uint64_t batch = 0;
        int rank = 0;
        std::string view_id;
        CacheKey key;
        ProviderRequest request;
        std::stop_token stop;
    };
    struct JobOrder {
        bool operator()(const Job& a, const Job& b) const {
            if (a.batch != b.batch) return a.batch < b.batch;
            return a.rank > b.rank;
        }
    };
    struct Flight {
        std::string view_id;
        std::stop_source stop;
    };

    Neighborhood schedule(const Document& doc, const CursorScope& scope, const PromptTemplate& prompt,
                          std::string_view title, const std::vector<std::size_t>& generate);
    void worker_loop(std::stop_token stop);
    void run(Job job);
    void bump_locked();

    std::shared_ptr<Provider> provider_;
    EngineOptions options_;

    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::condition_variable_any work_available_;
    std::priority_queue<Job, std::vector<Job>, JobOrder> queue_;
    std::map<std::string, View> views_;
    std::map<CacheKey, Flight> in_flight_;
    ViewCache cache_;
    std::uint64_t next_view_ = 1;
    std::uint64_t next_batch_ = 0;
    std::uint64_t changes_ = 0;
    std::size_t running_ = 0;
    bool stopping_ = false;
    std::vector<std::jthread> workers_;
};

} // namespace revlens
