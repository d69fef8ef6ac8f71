#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace revlens {

enum class SpanKind { text, bold, emphasis };

struct Span {
    SpanKind kind = SpanKind::text;
    std::string text;

    bool operator==(const Span&) const = default;
};

using Spans = std::vector<Span>;

enum class BlockKind { paragraph, unordered_list, ordered_list };

struct Block {
    BlockKind kind = BlockKind::paragraph;
    Spans spans;              // paragraph content
    std::vector<Spans> items; // list items
    int start = 1;            // first number of an ordered list

    bool operator==(const Block&) const = default;
};

// Minimal Markdown subset used for view cards: "- "/"* " bullets, "N. "
// ordered items, **bold**, *emphasis*. Everything else is paragraph text.
// Consecutive plain lines form one paragraph (joined by '\n'); a plain line
// ends a list. Unmatched markers stay literal. Never fails.
std::vector<Block> parse_display(std::string_view display);

Spans parse_inline(std::string_view text);

const char* to_string(BlockKind kind);
const char* to_string(SpanKind kind);

nlohmann::json to_json(const std::vector<Block>& blocks);

// Renders blocks back into the same Markdown subset.
std::string to_markdown(const std::vector<Block>& blocks);

} // namespace revlens
