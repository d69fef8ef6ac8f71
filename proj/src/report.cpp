#include "revlens/report.hpp"

#include "revlens/error.hpp"
#include "revlens/filter.hpp"

#include <atomic>
#include <thread>

namespace revlens {

std::size_t Report::error_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) {
        for (const auto& v : p.views) n += v.status == ViewStatus::complete ? 0 : 1;
    }
    return n;
}

namespace {

ReportCell generate_cell(const Paragraph& para, const PromptTemplate& prompt, Provider& provider,
                         const ReportOptions& options) {
    RenderOptions render_options;
    render_options.context_budget = options.provider.context_budget;
    render_options.temperature = options.provider.temperature;
    render_options.max_output_tokens = options.max_output_tokens;
    const ProviderRequest request = render(prompt, para.text, options.title, render_options);

    ReportCell cell;
    cell.prompt_id = prompt.id;
    cell.prompt_label = prompt.label;
    cell.truncated = request.truncated;

    std::string raw;
    const auto outcome = complete_streaming(provider, request, options.provider, std::stop_token{},
                                            [&](const StreamEvent& event) {
                                                if (event.kind == StreamEventKind::delta) raw += event.text;
                                                if (event.kind == StreamEventKind::error && event.error) {
                                                    cell.error = std::string(to_string(event.error->kind)) +
                                                                 ": " + event.error->message;
                                                }
                                            });
    if (outcome == StreamOutcome::done) {
        cell.status = ViewStatus::complete;
        cell.display_text = filter_final_output(raw, prompt.uses_final_output_filter);
        cell.blocks = parse_display(cell.display_text);
    } else {
        cell.status = ViewStatus::error;
        if (!cell.error) cell.error = "generation failed";
    }
    return cell;
}

} // namespace

Report generate_report(const Document& doc, const PromptSet& prompts, Provider& provider,
                       const ReportOptions& options) {
    std::vector<PromptTemplate> selected;
    for (const auto& id : options.prompt_ids) selected.push_back(prompts.get(id));
    if (selected.empty()) throw Error(ErrorCode::invalid_argument, "no prompts selected");

    Report report;
    report.source = options.source_name;
    report.prompt_ids = options.prompt_ids;
    for (const auto& p : doc.paragraphs()) {
        report.paragraphs.push_back({p, std::vector<ReportCell>(selected.size())});
    }

    const std::size_t cells = report.paragraphs.size() * selected.size();
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < cells; i = next++) {
            auto& para = report.paragraphs[i / selected.size()];
            para.views[i % selected.size()] = generate_cell(para.paragraph, selected[i % selected.size()], provider, options);
        }
    };

    const std::size_t threads = std::min(std::max<std::size_t>(1, options.parallelism), std::max<std::size_t>(1, cells));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    return report;
}

nlohmann::json report_to_json(const Report& report) {
    auto paragraphs = nlohmann::json::array();
    for (const auto& p : report.paragraphs) {
        auto views = nlohmann::json::array();
        for (const auto& v : p.views) {
            nlohmann::json j{
                {"prompt_id", v.prompt_id},
                {"prompt_label", v.prompt_label},
                {"status", to_string(v.status)},
                {"display_text", v.display_text},
                {"display_blocks", to_json(v.blocks)},
                {"truncated", v.truncated},
            };
            if (v.error) j["error"] = *v.error;
            views.push_back(std::move(j));
        }
        paragraphs.push_back({
            {"index", p.paragraph.index},
            {"range", {{"start", p.paragraph.range.start}, {"end", p.paragraph.range.end}}},
            {"content_hash", p.paragraph.content_hash},
            {"text", p.paragraph.text},
            {"views", std::move(views)},
        });
    }
    return {
        {"report_version", report_version},
        {"source", report.source},
        {"prompts", report.prompt_ids},
        {"error_count", report.error_count()},
        {"paragraphs", std::move(paragraphs)},
    };
}

std::string report_to_markdown(const Report& report) {
    std::string out = "# Revision report";
    if (!report.source.empty()) out += ": " + report.source;
    out += "\n";
    for (const auto& p : report.paragraphs) {
        out += "\n## Paragraph " + std::to_string(p.paragraph.index + 1) + " [" +
               std::to_string(p.paragraph.range.start) + ", " + std::to_string(p.paragraph.range.end) + ")\n\n";
        out += "> " + p.paragraph.text + "\n";
        for (const auto& v : p.views) {
            out += "\n### " + v.prompt_label + "\n\n";
            if (v.status != ViewStatus::complete) {
                out += "**Error:** " + v.error.value_or("generation failed") + "\n";
                continue;
            }
            if (v.truncated) out += "*(paragraph truncated to the context budget)*\n\n";
            out += v.blocks.empty() ? std::string("*(empty view)*\n") : to_markdown(v.blocks);
        }
    }
    return out;
}

nlohmann::json report_schema() {
    using nlohmann::json;
    const json spans = {{"type", "array"},
                        {"items",
                         {{"type", "object"},
                          {"required", {"type", "text"}},
                          {"properties",
                           {{"type", {{"enum", {"text", "bold", "emphasis"}}}}, {"text", {{"type", "string"}}}}},
                          {"additionalProperties", false}}}};
    const json block = {
        {"type", "object"},
        {"required", {"type"}},
        {"properties",
         {{"type", {{"enum", {"paragraph", "unordered_list", "ordered_list"}}}},
          {"spans", spans},
          {"items", {{"type", "array"}, {"items", spans}}},
          {"start", {{"type", "integer"}}}}},
        {"additionalProperties", false},
    };
    const json range = {{"type", "object"},
                        {"required", {"start", "end"}},
                        {"properties", {{"start", {{"type", "integer"}, {"minimum", 0}}},
                                        {"end", {{"type", "integer"}, {"minimum", 0}}}}},
                        {"additionalProperties", false}};
    const json view = {
        {"type", "object"},
        {"required", {"prompt_id", "prompt_label", "status", "display_text", "display_blocks", "truncated"}},
        {"properties",
         {{"prompt_id", {{"type", "string"}}},
          {"prompt_label", {{"type", "string"}}},
          {"status", {{"enum", {"complete", "error"}}}},
          {"display_text", {{"type", "string"}}},
          {"display_blocks", {{"type", "array"}, {"items", block}}},
          {"truncated", {{"type", "boolean"}}},
          {"error", {{"type", "string"}}}}},
        {"additionalProperties", false},
    };
    const json paragraph = {
        {"type", "object"},
        {"required", {"index", "range", "content_hash", "text", "views"}},
        {"properties",
         {{"index", {{"type", "integer"}, {"minimum", 0}}},
          {"range", range},
          {"content_hash", {{"type", "string"}, {"pattern", "^[0-9a-f]{64}$"}}},
          {"text", {{"type", "string"}}},
          {"views", {{"type", "array"}, {"items", view}}}}},
        {"additionalProperties", false},
    };
    return {
        {"$schema", "https://json-schema.org/draft/2020-12/schema"},
        {"$id", "https://revlens.invalid/schemas/report-v1.json"},
        {"title", "revlens revision report"},
        {"type", "object"},
        {"required", {"report_version", "source", "prompts", "error_count", "paragraphs"}},
        {"properties",
         {{"report_version", {{"const", report_version}}},
          {"source", {{"type", "string"}}},
          {"prompts", {{"type", "array"}, {"items", {{"type", "string"}}}}},
          {"error_count", {{"type", "integer"}, {"minimum", 0}}},
          {"paragraphs", {{"type", "array"}, {"items", paragraph}}}}},
        {"additionalProperties", false},
    };
}

} // namespace revlens
