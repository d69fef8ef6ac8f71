#pragma once

#include "revlens/document.hpp"
#include "revlens/llm.hpp"
#include "revlens/markdown.hpp"
#include "revlens/prompts.hpp"
#include "revlens/view_engine.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace revlens {

inline constexpr int report_version = 1;

struct ReportOptions {
    std::vector<std::string> prompt_ids;
    std::size_t parallelism = 1;
    ProviderConfig provider;
    int max_output_tokens = 512;
    std::string source_name;
    std::string title;
};

struct ReportCell {
    std::string prompt_id;
    std::string prompt_label;
    ViewStatus status = ViewStatus::pending; // complete or error once generated
    std::string display_text;
    std::vector<Block> blocks;
    bool truncated = false;
    std::optional<std::string> error;
};

struct ReportParagraph {
    Paragraph paragraph;
    std::vector<ReportCell> views; // in prompt order
};

struct Report {
    std::string source;
    std::vector<std::string> prompt_ids;
    std::vector<ReportParagraph> paragraphs;

    std::size_t error_count() const;
};

// Runs every prompt over every paragraph. Unknown prompt ids throw
// Error(not_found) before the provider sees any request.
Report generate_report(const Document& doc, const PromptSet& prompts, Provider& provider,
                       const ReportOptions& options);

nlohmann::json report_to_json(const Report& report);
std::string report_to_markdown(const Report& report);

// JSON schema for report_to_json output.
nlohmann::json report_schema();

} // namespace revlens
