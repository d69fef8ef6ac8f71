#include "revlens/markdown.hpp"

#include <cctype>
#include <optional>

namespace revlens {

namespace {

struct ListMarker {
    BlockKind kind;
    int number = 0;
    std::string_view content;
};

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_blank(std::string_view line) {
    for (char c : line) {
        if (c != ' ' && c != '\t') return false;
    }
    return true;
}

std::optional<ListMarker> list_marker(std::string_view line) {
    std::size_t indent = 0;
    while (indent < line.size() && indent < 3 && line[indent] == ' ') ++indent;
    std::string_view rest = line.substr(indent);
    if (rest.size() >= 2 && (rest[0] == '-' || rest[0] == '*') && rest[1] == ' ') {
        return ListMarker{BlockKind::unordered_list, 0, rest.substr(2)};
    }
    std::size_t digits = 0;
    while (digits < rest.size() && digits < 9 && std::isdigit(static_cast<unsigned char>(rest[digits]))) {
        ++digits;
    }
    if (digits > 0 && rest.size() >= digits + 2 && rest[digits] == '.' && rest[digits + 1] == ' ') {
        return ListMarker{BlockKind::ordered_list, std::stoi(std::string(rest.substr(0, digits))),
                          rest.substr(digits + 2)};
    }
    return std::nullopt;
}

std::string_view trim_spaces(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

void push_text(Spans& spans, std::string_view text) {
    if (text.empty()) return;
    if (!spans.empty() && spans.back().kind == SpanKind::text) {
        spans.back().text += text;
    } else {
        spans.push_back({SpanKind::text, std::string(text)});
    }
}

} // namespace

Spans parse_inline(std::string_view text) {
    Spans spans;
    std::size_t plain_start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '*') {
            ++i;
            continue;
        }
        const bool strong = text.substr(i, 2) == "**";
        const std::size_t width = strong ? 2 : 1;
        const std::size_t open_end = i + width;
        std::size_t close = std::string_view::npos;
        if (open_end < text.size() && text[open_end] != ' ' && text[open_end] != '*') {
            std::size_t search = open_end;
            while ((search = text.find(strong ? "**" : "*", search)) != std::string_view::npos) {
                const bool doubled = !strong && search + 1 < text.size() && text[search + 1] == '*';
                if (text[search - 1] != ' ' && !doubled) {
                    close = search;
                    break;
                }
                search += doubled ? 2 : 1;
            }
        }
        if (close == std::string_view::npos) {
            i = open_end;
            continue;
        }
        push_text(spans, text.substr(plain_start, i - plain_start));
        spans.push_back({strong ? SpanKind::bold : SpanKind::emphasis,
                         std::string(text.substr(open_end, close - open_end))});
        i = close + width;
        plain_start = i;
    }
    push_text(spans, text.substr(plain_start));
    return spans;
}

std::vector<Block> parse_display(std::string_view display) {
    std::vector<Block> blocks;
    std::string paragraph;
    bool in_paragraph = false;
    std::optional<Block> list;

    auto close_paragraph = [&] {
        if (!in_paragraph) return;
        blocks.push_back({BlockKind::paragraph, parse_inline(paragraph), {}, 1});
        paragraph.clear();
        in_paragraph = false;
    };
    auto close_list = [&] {
        if (!list) return;
        blocks.push_back(std::move(*list));
        list.reset();
    };

    std::size_t pos = 0;
    while (pos <= display.size()) {
        std::size_t nl = display.find('\n', pos);
        if (nl == std::string_view::npos) nl = display.size();
        const std::string_view line = strip_cr(display.substr(pos, nl - pos));
        pos = nl + 1;

        if (is_blank(line)) {
            close_paragraph();
            close_list();
            continue;
        }
        if (auto marker = list_marker(line)) {
            close_paragraph();
            if (list && list->kind != marker->kind) close_list();
            if (!list) {
                list = Block{marker->kind, {}, {}, marker->kind == BlockKind::ordered_list ? marker->number : 1};
            }
            list->items.push_back(parse_inline(trim_spaces(marker->content)));
            continue;
        }
        close_list();
        if (in_paragraph) paragraph.push_back('\n');
        paragraph += trim_spaces(line);
        in_paragraph = true;
    }
    close_paragraph();
    close_list();
    return blocks;
}

const char* to_string(BlockKind kind) {
    switch (kind) {
    case BlockKind::paragraph: return "paragraph";
    case BlockKind::unordered_list: return "unordered_list";
    case BlockKind::ordered_list: return "ordered_list";
    }
    return "paragraph";
}

const char* to_string(SpanKind kind) {
    switch (kind) {
    case SpanKind::text: return "text";
    case SpanKind::bold: return "bold";
    case SpanKind::emphasis: return "emphasis";
    }
    return "text";
}

namespace {

nlohmann::json spans_json(const Spans& spans) {
    auto out = nlohmann::json::array();
    for (const auto& s : spans) out.push_back({{"type", to_string(s.kind)}, {"text", s.text}});
    return out;
}

std::string spans_markdown(const Spans& spans) {
    std::string out;
    for (const auto& s : spans) {
        switch (s.kind) {
        case SpanKind::text: out += s.text; break;
        case SpanKind::bold: out += "**" + s.text + "**"; break;
        case SpanKind::emphasis: out += "*" + s.text + "*"; break;
        }
    }
    return out;
}

} // namespace

nlohmann::json to_json(const std::vector<Block>& blocks) {
    auto out = nlohmann::json::array();
    for (const auto& b : blocks) {
        nlohmann::json j{{"type", to_string(b.kind)}};
        if (b.kind == BlockKind::paragraph) {
            j["spans"] = spans_json(b.spans);
        } else {
            auto items = nlohmann::json::array();
            for (const auto& item : b.items) items.push_back(spans_json(item));
            j["items"] = std::move(items);
            if (b.kind == BlockKind::ordered_list) j["start"] = b.start;
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::string to_markdown(const std::vector<Block>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (i > 0) out += "\n";
        if (b.kind == BlockKind::paragraph) {
            out += spans_markdown(b.spans) + "\n";
            continue;
        }
        int n = b.start;
        for (const auto& item : b.items) {
            if (b.kind == BlockKind::unordered_list) {
                out += "- ";
            } else {
                out += std::to_string(n++) + ". ";
            }
            out += spans_markdown(item) + "\n";
        }
    }
    return out;
}

} // namespace revlens
