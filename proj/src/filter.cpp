#include "revlens/filter.hpp"

#include "revlens/prompts.hpp"
#include "revlens/utf8.hpp"

namespace revlens {

namespace {

bool is_strippable(char32_t cp) {
    switch (cp) {
    case U'.': case U',': case U':': case U';': case U'!': case U'?':
    case 0x3001: case 0x3002: case 0xFF0C: case 0xFF1A: case 0xFF1B: case 0xFF01: case 0xFF1F:
        return true;
    default:
        return utf8::is_whitespace(cp);
    }
}

} // namespace

std::string filter_final_output(std::string_view raw, bool enabled) {
    if (!enabled) return std::string(raw);
    const std::size_t at = raw.rfind(final_output_marker);
    if (at == std::string_view::npos) return std::string(raw);

    std::string_view rest = raw.substr(at + final_output_marker.size());
    // "**FINAL OUTPUT**" style emphasis around the marker.
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '_') &&
           (rest.size() == 1 || rest[1] == '*' || rest[1] == '_' || rest[1] == ':' ||
            rest[1] == ' ' || (rest[1] >= '\t' && rest[1] <= '\r'))) {
        rest.remove_prefix(1);
    }

    std::u32string tail = utf8::decode(rest);
    std::size_t skip = 0;
    while (skip < tail.size() && is_strippable(tail[skip])) ++skip;
    return utf8::encode(std::u32string_view(tail).substr(skip));
}

} // namespace revlens
