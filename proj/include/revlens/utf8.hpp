#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Offsets exchanged with clients count Unicode scalar values, not bytes.
namespace revlens::utf8 {

constexpr char32_t replacement_char = 0xFFFD;

// Malformed sequences decode to one U+FFFD per offending byte.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

bool is_valid(std::string_view text);
std::size_t length(std::string_view text);

// Substring by scalar-value offsets; clamps to the end of text.
std::string substr(std::string_view text, std::size_t start, std::size_t count);

bool is_line_break(char32_t cp);
bool is_whitespace(char32_t cp);

// Strips leading/trailing whitespace (including line breaks).
std::string_view trim(std::string_view text);

} // namespace revlens::utf8
