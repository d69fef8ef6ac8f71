#include "revlens/utf8.hpp"

namespace revlens::utf8 {

namespace {

// Decodes one scalar at text[pos]; returns bytes consumed (0 on malformed input).
std::size_t decode_one(std::string_view text, std::size_t pos, char32_t& out) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) {
        out = lead;
        return 1;
    }
    std::size_t extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) {
        extra = 1; cp = lead & 0x1F; min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
        extra = 2; cp = lead & 0x0F; min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
        extra = 3; cp = lead & 0x07; min = 0x10000;
    } else {
        return 0;
    }
    if (pos + extra >= text.size()) return 0;
    for (std::size_t i = 1; i <= extra; ++i) {
        const unsigned char c = byte(pos + i);
        if ((c & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (c & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    out = cp;
    return extra + 1;
}

template <typename Fn>
void for_each_scalar(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = 0;
        std::size_t n = decode_one(text, pos, cp);
        if (n == 0) {
            cp = replacement_char;
            n = 1;
        }
        if (!fn(cp, pos, n)) return;
        pos += n;
    }
}

} // namespace

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::u32string decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    for_each_scalar(text, [&](char32_t cp, std::size_t, std::size_t) {
        out.push_back(cp);
        return true;
    });
    return out;
}

std::string encode(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) append(out, cp);
    return out;
}

bool is_valid(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = 0;
        const std::size_t n = decode_one(text, pos, cp);
        if (n == 0) return false;
        pos += n;
    }
    return true;
}

std::size_t length(std::string_view text) {
    std::size_t count = 0;
    for_each_scalar(text, [&](char32_t, std::size_t, std::size_t) {
        ++count;
        return true;
    });
    return count;
}

std::string substr(std::string_view text, std::size_t start, std::size_t count) {
    std::size_t index = 0;
    std::size_t begin = text.size();
    std::size_t end = text.size();
    for_each_scalar(text, [&](char32_t, std::size_t pos, std::size_t) {
        if (index == start) begin = pos;
        if (index == start + count) {
            end = pos;
            return false;
        }
        ++index;
        return true;
    });
    if (begin > end) return {};
    // Malformed bytes count as one scalar each, so byte slicing stays consistent.
    return std::string(text.substr(begin, end - begin));
}

bool is_line_break(char32_t cp) {
    switch (cp) {
    case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0x2028: case 0x2029:
        return true;
    default:
        return false;
    }
}

bool is_whitespace(char32_t cp) {
    if (is_line_break(cp)) return true;
    switch (cp) {
    case U' ': case U'\t': case 0xA0: case 0x1680: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::string_view trim(std::string_view text) {
    std::size_t first = text.size();
    std::size_t last_end = 0;
    for_each_scalar(text, [&](char32_t cp, std::size_t pos, std::size_t n) {
        if (!is_whitespace(cp)) {
            if (first == text.size()) first = pos;
            last_end = pos + n;
        }
        return true;
    });
    if (first == text.size()) return text.substr(text.size());
    return text.substr(first, last_end - first);
}

} // namespace revlens::utf8
