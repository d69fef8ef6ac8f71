#include "revlens/document.hpp"

#include "revlens/error.hpp"
#include "revlens/hash.hpp"
#include "revlens/utf8.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace revlens {

std::string normalize_paragraph(std::string_view text) {
    return std::string(utf8::trim(text));
}

std::string content_hash(std::string_view paragraph_text) {
    return sha256_hex(normalize_paragraph(paragraph_text));
}

std::vector<Paragraph> segment(std::string_view text) {
    const std::u32string scalars = utf8::decode(text);
    std::vector<Paragraph> out;

    auto flush = [&](std::size_t start, std::size_t end) {
        bool blank = true;
        for (std::size_t i = start; i < end; ++i) {
            if (!utf8::is_whitespace(scalars[i])) {
                blank = false;
                break;
            }
        }
        if (blank) return;
        Paragraph p;
        p.index = out.size();
        p.range = {start, end};
        p.text = utf8::encode(std::u32string_view(scalars).substr(start, end - start));
        p.content_hash = content_hash(p.text);
        out.push_back(std::move(p));
    };

    std::size_t line_start = 0;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (utf8::is_line_break(scalars[i])) {
            flush(line_start, i);
            line_start = i + 1;
        }
    }
    flush(line_start, scalars.size());
    return out;
}

Document::Document(std::string id, std::string text, std::uint64_t version)
    : id_(std::move(id)), text_(std::move(text)), version_(version),
      length_(utf8::length(text_)), paragraphs_(segment(text_)) {}

Document Document::with_text(std::string text) const {
    return Document(id_, std::move(text), version_ + 1);
}

std::vector<std::size_t> neighborhood_of(std::size_t index, std::size_t paragraph_count) {
    std::vector<std::size_t> out;
    if (index >= paragraph_count) return out;
    if (index > 0) out.push_back(index - 1);
    out.push_back(index);
    if (index + 1 < paragraph_count) out.push_back(index + 1);
    return out;
}

CursorScope snap(const Document& doc, std::size_t offset) {
    const auto& paras = doc.paragraphs();
    if (paras.empty()) throw Error(ErrorCode::empty_document, "document has no paragraphs");
    if (offset > doc.length()) {
        throw Error(ErrorCode::invalid_argument, "cursor offset beyond end of text");
    }

    // First paragraph whose end is at or after the caret.
    auto it = std::lower_bound(paras.begin(), paras.end(), offset,
                               [](const Paragraph& p, std::size_t o) { return p.range.end < o; });
    std::size_t index = 0;
    if (it == paras.end()) {
        index = paras.size() - 1;
    } else if (it->range.start <= offset || it == paras.begin()) {
        index = static_cast<std::size_t>(it - paras.begin());
    } else {
        const auto& next = *it;
        const auto& prev = *(it - 1);
        const std::size_t to_prev = offset - prev.range.end;
        const std::size_t to_next = next.range.start - offset;
        index = static_cast<std::size_t>(it - paras.begin());
        if (to_prev <= to_next) --index;
    }
    return CursorScope{index, neighborhood_of(index, paras.size())};
}

std::vector<std::size_t> ParagraphDiff::changed() const {
    std::vector<std::size_t> out(modified);
    out.insert(out.end(), inserted.begin(), inserted.end());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Index pairs (old, new) of a longest common subsequence of the hash lists.
std::vector<std::pair<std::size_t, std::size_t>> align(const std::vector<Paragraph>& a,
                                                       const std::vector<Paragraph>& b) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t head = 0;
    while (head < a.size() && head < b.size() && a[head].content_hash == b[head].content_hash) {
        pairs.emplace_back(head, head);
        ++head;
    }
    std::size_t tail = 0;
    while (tail < a.size() - head && tail < b.size() - head &&
           a[a.size() - 1 - tail].content_hash == b[b.size() - 1 - tail].content_hash) {
        ++tail;
    }

    const std::size_t n = a.size() - head - tail;
    const std::size_t m = b.size() - head - tail;
    constexpr std::size_t max_cells = std::size_t{4} << 20;
    if (n > 0 && m > 0 && (n + 1) * (m + 1) <= max_cells) {
        std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
        auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return lcs[i * (m + 1) + j]; };
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = m; j-- > 0;) {
                if (a[head + i].content_hash == b[head + j].content_hash) {
                    at(i, j) = at(i + 1, j + 1) + 1;
                } else {
                    at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
                }
            }
        }
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < n && j < m) {
            if (a[head + i].content_hash == b[head + j].content_hash) {
                pairs.emplace_back(head + i, head + j);
                ++i;
                ++j;
            } else if (at(i + 1, j) >= at(i, j + 1)) {
                ++i;
            } else {
                ++j;
            }
        }
    }
    // Oversized middles fall back to treating the whole middle as one gap.

    for (std::size_t k = tail; k > 0; --k) {
        pairs.emplace_back(a.size() - k, b.size() - k);
    }
    return pairs;
}

} // namespace

ParagraphDiff diff_paragraphs(const Document& before, const Document& after) {
    const auto& a = before.paragraphs();
    const auto& b = after.paragraphs();
    ParagraphDiff diff;

    auto pairs = align(a, b);
    pairs.emplace_back(a.size(), b.size()); // sentinel closes the last gap

    std::size_t old_pos = 0;
    std::size_t new_pos = 0;
    for (const auto& [old_match, new_match] : pairs) {
        const std::size_t old_gap = old_match - old_pos;
        const std::size_t new_gap = new_match - new_pos;
        const std::size_t paired = std::min(old_gap, new_gap);
        for (std::size_t k = 0; k < paired; ++k) diff.modified.push_back(new_pos + k);
        for (std::size_t k = paired; k < new_gap; ++k) diff.inserted.push_back(new_pos + k);
        for (std::size_t k = 0; k < old_gap; ++k) {
            if (k >= paired) diff.deleted.push_back(old_pos + k);
        }
        old_pos = old_match + 1;
        new_pos = new_match + 1;
    }

    std::unordered_set<std::string> surviving;
    for (const auto& p : b) surviving.insert(p.content_hash);
    std::set<std::string> stale;
    for (const auto& p : a) {
        if (!surviving.contains(p.content_hash)) stale.insert(p.content_hash);
    }
    diff.stale_hashes.assign(stale.begin(), stale.end());
    return diff;
}

} // namespace revlens
