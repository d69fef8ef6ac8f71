#pragma once

#include "revlens/llm.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revlens {

enum class PromptCategory { summary, inquisitive, advisory, custom };

const char* to_string(PromptCategory category);
std::optional<PromptCategory> parse_category(std::string_view name);

struct PromptTemplate {
    std::string id;
    std::string label;
    PromptCategory category = PromptCategory::custom;
    std::string body;
    bool is_builtin = false;
    bool uses_final_output_filter = false;
    std::uint64_t created_seq = 0; // creation order among customs

    bool operator==(const PromptTemplate&) const = default;
};

namespace builtin_ids {
inline constexpr std::string_view thesis = "thesis";
inline constexpr std::string_view concepts = "concepts";
inline constexpr std::string_view writer_questions = "writer-questions";
inline constexpr std::string_view reader_questions = "reader-questions";
inline constexpr std::string_view advice = "advice";
} // namespace builtin_ids

inline constexpr std::string_view final_output_marker = "FINAL OUTPUT";

// A value type: copying a set yields an independent prompt library.
class PromptSet {
public:
    PromptSet(); // the five builtins

    const PromptTemplate* find(std::string_view id) const;
    // Throws Error(not_found).
    const PromptTemplate& get(std::string_view id) const;

    // Builtins grouped by category, then customs by creation order.
    std::vector<PromptTemplate> list() const;
    std::size_t size() const { return templates_.size(); }

    // Editing a builtin forks it into a new custom template and returns the
    // fork's id; editing a custom replaces its body in place.
    std::string edit(std::string_view id, std::string body, bool preserve_category = false);

    std::string create(std::string label, std::string body,
                       PromptCategory category = PromptCategory::custom);

    // Custom templates only, as [{id, label, category, body}].
    nlohmann::json export_json() const;
    // Builtins are re-materialized; customs replace any existing customs.
    static PromptSet import_json(const nlohmann::json& data);

private:
    std::string next_custom_id();

    std::vector<PromptTemplate> templates_;
    std::uint64_t next_seq_ = 1;
};

PromptSet builtin_prompts();

nlohmann::json to_json(const PromptTemplate& prompt);

struct RenderOptions {
    std::size_t context_budget = 8000;
    int max_output_tokens = 512;
    double temperature = 0.7;
};

inline constexpr std::string_view observation_framing =
    "You are giving observations about the writer's paragraph; do not rewrite it.";

// Instruction = framing + template body; context = optional title line plus
// the paragraph, cut to the context budget.
ProviderRequest render(const PromptTemplate& prompt, std::string_view paragraph_text,
                       std::string_view document_title = {}, const RenderOptions& options = {});

} // namespace revlens
