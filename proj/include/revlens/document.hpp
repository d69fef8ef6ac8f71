#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace revlens {

// Half-open interval of Unicode scalar offsets.
struct TextRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool contains(std::size_t offset) const { return start <= offset && offset < end; }
    bool operator==(const TextRange&) const = default;
};

struct Paragraph {
    std::size_t index = 0;
    TextRange range;
    std::string text;
    std::string content_hash;

    bool operator==(const Paragraph&) const = default;
};

// Edge-whitespace trim; the only normalization applied before hashing.
std::string normalize_paragraph(std::string_view text);
std::string content_hash(std::string_view paragraph_text);

// Every line break ends a paragraph; whitespace-only lines are separators.
std::vector<Paragraph> segment(std::string_view text);

class Document {
public:
    Document() = default;
    Document(std::string id, std::string text, std::uint64_t version = 1);

    const std::string& id() const { return id_; }
    const std::string& text() const { return text_; }
    std::uint64_t version() const { return version_; }
    const std::vector<Paragraph>& paragraphs() const { return paragraphs_; }
    std::size_t length() const { return length_; }
    bool empty() const { return paragraphs_.empty(); }

    // Successor snapshot with the next version; the receiver is untouched.
    Document with_text(std::string text) const;

private:
    std::string id_;
    std::string text_;
    std::uint64_t version_ = 1;
    std::size_t length_ = 0;
    std::vector<Paragraph> paragraphs_;
};

struct CursorScope {
    std::size_t paragraph_index = 0;
    // Preceding, current and succeeding indices, clipped at the document edges.
    std::vector<std::size_t> neighborhood;

    bool operator==(const CursorScope&) const = default;
};

std::vector<std::size_t> neighborhood_of(std::size_t index, std::size_t paragraph_count);

// Maps a caret offset to the paragraph under revision. A caret touching a
// paragraph (start <= offset <= end) belongs to it; otherwise the nearest
// paragraph by scalar distance wins, ties going to the preceding one.
// Throws Error(empty_document) when there are no paragraphs and
// Error(invalid_argument) when offset > length.
CursorScope snap(const Document& doc, std::size_t offset);

struct ParagraphDiff {
    std::vector<std::size_t> modified; // indices into the new document
    std::vector<std::size_t> inserted; // indices into the new document
    std::vector<std::size_t> deleted;  // indices into the old document
    // Hashes that were present in the old document and are gone from the new one.
    std::vector<std::string> stale_hashes;

    bool empty() const { return modified.empty() && inserted.empty() && deleted.empty(); }
    // Sorted union of modified and inserted.
    std::vector<std::size_t> changed() const;
};

ParagraphDiff diff_paragraphs(const Document& before, const Document& after);

} // namespace revlens
