#include "revlens/prompts.hpp"

#include "revlens/error.hpp"
#include "revlens/utf8.hpp"

#include <algorithm>

namespace revlens {

namespace {

PromptTemplate builtin(std::string_view id, std::string label, PromptCategory category,
                       std::string body, bool filter) {
    PromptTemplate t;
    t.id = std::string(id);
    t.label = std::move(label);
    t.category = category;
    t.body = std::move(body);
    t.is_builtin = true;
    t.uses_final_output_filter = filter;
    return t;
}

int category_rank(PromptCategory c) {
    return static_cast<int>(c);
}

bool body_requests_marker(std::string_view body) {
    return body.find(final_output_marker) != std::string_view::npos;
}

void require_body(std::string_view body) {
    if (utf8::trim(body).empty()) throw Error(ErrorCode::validation, "prompt body must not be empty");
}

} // namespace

const char* to_string(PromptCategory category) {
    switch (category) {
    case PromptCategory::summary: return "summary";
    case PromptCategory::inquisitive: return "inquisitive";
    case PromptCategory::advisory: return "advisory";
    case PromptCategory::custom: return "custom";
    }
    return "custom";
}

std::optional<PromptCategory> parse_category(std::string_view name) {
    for (auto c : {PromptCategory::summary, PromptCategory::inquisitive, PromptCategory::advisory,
                   PromptCategory::custom}) {
        if (name == to_string(c)) return c;
    }
    return std::nullopt;
}

PromptSet::PromptSet() {
    templates_ = {
        builtin(builtin_ids::thesis, "Thesis Statement", PromptCategory::summary,
                "Step 1: Write a sentence stating what seems to be the thesis of the paragraph. "
                "Step 2: Say FINAL OUTPUT. Step 3: Say the thesis again, but even more concisely "
                "with no filler words like `the thesis is.'",
                true),
        builtin(builtin_ids::concepts, "Important Concepts", PromptCategory::summary,
                "Step 1: List 10 important concepts in this paragraph, in the format 1. Concept: "
                "[concept as a complete sentence] Relevance: [relevance score, 10 best]. Step 2: "
                "Output FINAL OUTPUT, then a new line, then a Markdown unordered list with the 3 "
                "concepts with highest relevance, in short phrases of 2 or 3 words.",
                true),
        builtin(builtin_ids::writer_questions, "Questions the Writer Was Attempting to Answer",
                PromptCategory::inquisitive,
                "List 2 or 3 questions that the writer was attempting to answer in this paragraph.",
                false),
        builtin(builtin_ids::reader_questions, "Questions a Reader Might Have",
                PromptCategory::inquisitive,
                "As a reader, ask the writer 2 or 3 questions about definitions, logical "
                "connections, or some needed background information.",
                false),
        builtin(builtin_ids::advice, "Advice", PromptCategory::advisory,
                "What advice would you give the writer to improve this paragraph? Respond in a "
                "bulleted list.",
                false),
    };
}

PromptSet builtin_prompts() {
    return PromptSet();
}

const PromptTemplate* PromptSet::find(std::string_view id) const {
    auto it = std::find_if(templates_.begin(), templates_.end(),
                           [&](const PromptTemplate& t) { return t.id == id; });
    return it == templates_.end() ? nullptr : &*it;
}

const PromptTemplate& PromptSet::get(std::string_view id) const {
    if (const auto* t = find(id)) return *t;
    throw Error(ErrorCode::not_found, "unknown prompt id '" + std::string(id) + "'");
}

std::vector<PromptTemplate> PromptSet::list() const {
    std::vector<PromptTemplate> out(templates_);
    std::stable_sort(out.begin(), out.end(), [](const PromptTemplate& a, const PromptTemplate& b) {
        if (a.is_builtin != b.is_builtin) return a.is_builtin;
        if (a.is_builtin) return category_rank(a.category) < category_rank(b.category);
        return a.created_seq < b.created_seq;
    });
    return out;
}

std::string PromptSet::next_custom_id() {
    std::string id;
    do {
        id = "custom-" + std::to_string(next_seq_++);
    } while (find(id) != nullptr);
    return id;
}

std::string PromptSet::edit(std::string_view id, std::string body, bool preserve_category) {
    const PromptTemplate& original = get(id);
    require_body(body);

    if (!original.is_builtin) {
        auto& target = *std::find_if(templates_.begin(), templates_.end(),
                                     [&](const PromptTemplate& t) { return t.id == id; });
        target.uses_final_output_filter = body_requests_marker(body);
        target.body = std::move(body);
        return target.id;
    }

    PromptTemplate fork;
    fork.label = original.label + " (edited)";
    fork.category = preserve_category ? original.category : PromptCategory::custom;
    fork.uses_final_output_filter = body_requests_marker(body);
    fork.body = std::move(body);
    fork.is_builtin = false;
    fork.id = next_custom_id();
    fork.created_seq = next_seq_ - 1;
    templates_.push_back(fork);
    return fork.id;
}

std::string PromptSet::create(std::string label, std::string body, PromptCategory category) {
    require_body(body);
    if (utf8::trim(label).empty()) throw Error(ErrorCode::validation, "prompt label must not be empty");
    PromptTemplate t;
    t.id = next_custom_id();
    t.created_seq = next_seq_ - 1;
    t.label = std::move(label);
    t.category = category;
    t.uses_final_output_filter = body_requests_marker(body);
    t.body = std::move(body);
    templates_.push_back(t);
    return t.id;
}

nlohmann::json to_json(const PromptTemplate& prompt) {
    return {
        {"id", prompt.id},
        {"label", prompt.label},
        {"category", to_string(prompt.category)},
        {"body", prompt.body},
        {"is_builtin", prompt.is_builtin},
        {"uses_final_output_filter", prompt.uses_final_output_filter},
    };
}

nlohmann::json PromptSet::export_json() const {
    auto out = nlohmann::json::array();
    for (const auto& t : list()) {
        if (t.is_builtin) continue;
        out.push_back({{"id", t.id}, {"label", t.label}, {"category", to_string(t.category)}, {"body", t.body}});
    }
    return out;
}

PromptSet PromptSet::import_json(const nlohmann::json& data) {
    if (!data.is_array()) throw Error(ErrorCode::validation, "prompt file must be a JSON array");
    PromptSet set;
    for (const auto& item : data) {
        if (!item.is_object() || !item.contains("id") || !item.contains("body") ||
            !item["id"].is_string() || !item["body"].is_string()) {
            throw Error(ErrorCode::validation, "prompt entries need string id and body");
        }
        const std::string id = item["id"].get<std::string>();
        if (const auto* existing = set.find(id); existing != nullptr) {
            if (existing->is_builtin) continue; // builtins come from code, never from files
            throw Error(ErrorCode::validation, "duplicate prompt id '" + id + "'");
        }
        std::string body = item["body"].get<std::string>();
        require_body(body);
        PromptTemplate t;
        t.id = id;
        t.label = item.value("label", id);
        t.category = parse_category(item.value("category", "custom")).value_or(PromptCategory::custom);
        t.uses_final_output_filter = body_requests_marker(body);
        t.body = std::move(body);
        t.created_seq = set.next_seq_++;
        set.templates_.push_back(std::move(t));
    }
    return set;
}

ProviderRequest render(const PromptTemplate& prompt, std::string_view paragraph_text,
                       std::string_view document_title, const RenderOptions& options) {
    if (utf8::trim(paragraph_text).empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot render a prompt for an empty paragraph");
    }
    ProviderRequest req;
    req.instruction = std::string(observation_framing) + "\n\n" + prompt.body;
    req.max_output_tokens = options.max_output_tokens;
    req.temperature = options.temperature;
    req.filter = prompt.uses_final_output_filter ? OutputFilter::final_output : OutputFilter::none;

    std::string prefix;
    if (!utf8::trim(document_title).empty()) {
        prefix = "Document title: " + std::string(utf8::trim(document_title)) + "\n\n";
        if (utf8::length(prefix) >= options.context_budget) prefix.clear();
    }
    auto cut = estimate_and_truncate(paragraph_text, options.context_budget - utf8::length(prefix));
    req.context = prefix + cut.text;
    req.truncated = cut.truncated;
    return req;
}

} // namespace revlens
