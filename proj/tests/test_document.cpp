#include "revlens/document.hpp"
#include "revlens/error.hpp"
#include "revlens/utf8.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <random>

using namespace revlens;
using revlens::testing::nearest_paragraph_oracle;
using revlens::testing::random_document;

namespace {

std::vector<std::string> texts(const std::vector<Paragraph>& paras) {
    std::vector<std::string> out;
    for (const auto& p : paras) out.push_back(p.text);
    return out;
}

} // namespace

TEST_CASE("segment: blank-line separated paragraphs", "[document][segment]") {
    auto paras = segment("A.\n\nB.");
    REQUIRE(paras.size() == 2);
    CHECK(paras[0].text == "A.");
    CHECK(paras[0].range == TextRange{0, 2});
    CHECK(paras[1].text == "B.");
    CHECK(paras[1].range == TextRange{4, 6});
    CHECK(paras[1].index == 1);
}

TEST_CASE("segment: empty and single-line input", "[document][segment]") {
    CHECK(segment("").empty());
    CHECK(segment("\n \n\t\n").empty());

    auto one = segment("one paragraph only");
    REQUIRE(one.size() == 1);
    CHECK(one[0].range == TextRange{0, 18});
}

TEST_CASE("segment: every line break ends a paragraph", "[document][segment]") {
    auto paras = segment("first\nsecond\r\nthird fourth");
    CHECK(texts(paras) == std::vector<std::string>{"first", "second", "third", "fourth"});
    CHECK(paras[2].range == TextRange{14, 19});
}

TEST_CASE("segment: ranges count scalar values, not bytes", "[document][segment]") {
    auto paras = segment("café ☕\n\n段落です");
    REQUIRE(paras.size() == 2);
    CHECK(paras[0].range == TextRange{0, 6});
    CHECK(paras[1].range == TextRange{8, 12});
    CHECK(paras[1].text == "段落です");
}

TEST_CASE("content_hash: edge whitespace is the only normalization", "[document][hash]") {
    CHECK(content_hash("  Claim here. ") == content_hash("Claim here."));
    CHECK(content_hash("Claim\there.") != content_hash("Claim here."));
    CHECK(content_hash("Claim  here.") != content_hash("Claim here."));
    CHECK(content_hash("claim here.") != content_hash("Claim here."));

    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        const std::string body = random_document(rng, 1, 60);
        if (utf8::trim(body).empty()) continue;
        CHECK(content_hash(" \t" + body + "　 ") == content_hash(body));
    }
}

TEST_CASE("segment: round trip through single separators", "[document][segment][property]") {
    std::mt19937 rng(20240601);
    for (int i = 0; i < 300; ++i) {
        const std::string text = random_document(rng, 12, 800);
        const auto paras = segment(text);
        std::string joined;
        for (std::size_t k = 0; k < paras.size(); ++k) {
            if (k > 0) joined += "\n";
            joined += paras[k].text;
        }
        const auto again = segment(joined);
        REQUIRE(texts(again) == texts(paras));
        for (std::size_t k = 0; k < paras.size(); ++k) {
            CHECK(again[k].content_hash == paras[k].content_hash);
        }
    }
}

TEST_CASE("segment: non-separator characters belong to exactly one paragraph", "[document][segment][property]") {
    std::mt19937 rng(99);
    for (int i = 0; i < 200; ++i) {
        const std::string text = random_document(rng, 10, 500);
        const std::u32string scalars = utf8::decode(text);
        const auto paras = segment(text);

        // Lines that carry any non-whitespace are exactly the non-separator material.
        std::vector<int> owner_count(scalars.size(), 0);
        for (const auto& p : paras) {
            REQUIRE(p.range.start < p.range.end);
            REQUIRE(p.range.end <= scalars.size());
            REQUIRE_FALSE(utf8::trim(p.text).empty());
            for (std::size_t k = p.range.start; k < p.range.end; ++k) ++owner_count[k];
        }
        std::size_t line_start = 0;
        for (std::size_t k = 0; k <= scalars.size(); ++k) {
            if (k < scalars.size() && !utf8::is_line_break(scalars[k])) continue;
            bool blank = true;
            for (std::size_t j = line_start; j < k; ++j) blank = blank && utf8::is_whitespace(scalars[j]);
            for (std::size_t j = line_start; j < k; ++j) CHECK(owner_count[j] == (blank ? 0 : 1));
            if (k < scalars.size()) CHECK(owner_count[k] == 0);
            line_start = k + 1;
        }
        for (std::size_t k = 1; k < paras.size(); ++k) CHECK(paras[k - 1].range.end < paras[k].range.start);
    }
}

TEST_CASE("snap: offsets inside, between and after paragraphs", "[document][snap]") {
    const Document doc("d", "A.\n\nB.");
    CHECK(snap(doc, 1) == CursorScope{0, {0, 1}});
    CHECK(snap(doc, 3) == CursorScope{0, {0, 1}}); // separator, tie goes to the preceding
    CHECK(snap(doc, 4).paragraph_index == 1);
    CHECK(snap(doc, 6).paragraph_index == 1);      // end of text

    // Exhaustive check of the small document against the oracle.
    for (std::size_t offset = 0; offset <= doc.length(); ++offset) {
        CHECK(snap(doc, offset).paragraph_index == nearest_paragraph_oracle(doc.paragraphs(), offset));
    }
}

TEST_CASE("snap: neighborhood clips at document edges", "[document][snap]") {
    const Document doc("d", "p0\np1\np2\np3\np4");
    CHECK(snap(doc, 7).neighborhood == std::vector<std::size_t>{1, 2, 3});
    CHECK(snap(doc, 0).neighborhood == std::vector<std::size_t>{0, 1});
    CHECK(snap(doc, doc.length()).neighborhood == std::vector<std::size_t>{3, 4});

    const Document single("s", "only");
    CHECK(snap(single, 2).neighborhood == std::vector<std::size_t>{0});
}

TEST_CASE("snap: errors", "[document][snap]") {
    const Document empty("e", "  \n\n");
    try {
        snap(empty, 0);
        FAIL("expected empty_document");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_document);
    }
    const Document doc("d", "abc");
    CHECK_THROWS_AS(snap(doc, 4), Error);
}

TEST_CASE("snap: idempotent within a paragraph and total on random documents", "[document][snap][property]") {
    std::mt19937 rng(5);
    for (int i = 0; i < 150; ++i) {
        const Document doc("d", random_document(rng, 8, 300));
        if (doc.empty()) continue;
        std::map<std::size_t, CursorScope> by_paragraph;
        for (std::size_t offset = 0; offset <= doc.length(); ++offset) {
            const CursorScope scope = snap(doc, offset);
            REQUIRE(scope.paragraph_index < doc.paragraphs().size());
            REQUIRE(std::find(scope.neighborhood.begin(), scope.neighborhood.end(), scope.paragraph_index) !=
                    scope.neighborhood.end());
            for (std::size_t k = 1; k < scope.neighborhood.size(); ++k) {
                REQUIRE(scope.neighborhood[k] == scope.neighborhood[k - 1] + 1);
            }
            REQUIRE(scope.paragraph_index == nearest_paragraph_oracle(doc.paragraphs(), offset));
            const auto& p = doc.paragraphs()[scope.paragraph_index];
            if (p.range.contains(offset)) {
                auto [it, inserted] = by_paragraph.emplace(scope.paragraph_index, scope);
                if (!inserted) REQUIRE(it->second == scope);
            }
        }
    }
}

TEST_CASE("document: versions increase on every update", "[document]") {
    const Document v1("d", "a\nb");
    const Document v2 = v1.with_text("a\nb");
    const Document v3 = v2.with_text("c");
    CHECK(v1.version() == 1);
    CHECK(v2.version() == 2);
    CHECK(v3.version() == 3);
    CHECK(v3.id() == "d");
    CHECK(v1.paragraphs().size() == 2);
}

namespace {

// Multiset of hashes in `after` that are missing from `before`, as counts.
std::map<std::string, int> added_hashes(const Document& before, const Document& after) {
    std::map<std::string, int> counts;
    for (const auto& p : after.paragraphs()) ++counts[p.content_hash];
    for (const auto& p : before.paragraphs()) --counts[p.content_hash];
    std::erase_if(counts, [](const auto& kv) { return kv.second <= 0; });
    return counts;
}

} // namespace

TEST_CASE("diff_paragraphs: identity, edit, insertion, deletion", "[document][diff]") {
    const Document base("d", "Zero.\n\nOne.\n\nTwo.");
    SECTION("identical texts") {
        CHECK(diff_paragraphs(base, base.with_text(base.text())).empty());
        CHECK(diff_paragraphs(base, base.with_text("  Zero.  \nOne.\n\n\nTwo.")).empty());
    }
    SECTION("one character edited") {
        auto diff = diff_paragraphs(base, base.with_text("Zero.\n\nOnce.\n\nTwo."));
        CHECK(diff.modified == std::vector<std::size_t>{1});
        CHECK(diff.inserted.empty());
        CHECK(diff.deleted.empty());
        CHECK(diff.stale_hashes == std::vector<std::string>{content_hash("One.")});
    }
    SECTION("paragraph inserted between 0 and 1") {
        const Document after = base.with_text("Zero.\n\nNew.\n\nOne.\n\nTwo.");
        auto diff = diff_paragraphs(base, after);
        CHECK(diff.modified.empty());
        CHECK(diff.inserted == std::vector<std::size_t>{1});
        CHECK(diff.stale_hashes.empty());
        CHECK(after.paragraphs()[0].content_hash == base.paragraphs()[0].content_hash);
        CHECK(after.paragraphs()[2].content_hash == base.paragraphs()[1].content_hash);
        // Oracle: the only hash not accounted for by the old document is the new paragraph's.
        CHECK(added_hashes(base, after) == std::map<std::string, int>{{content_hash("New."), 1}});
    }
    SECTION("paragraph deleted") {
        auto diff = diff_paragraphs(base, base.with_text("Zero.\nTwo."));
        CHECK(diff.deleted == std::vector<std::size_t>{1});
        CHECK(diff.changed().empty());
    }
}

TEST_CASE("diff_paragraphs: changed set matches a hash-alignment oracle", "[document][diff][property]") {
    std::mt19937 rng(31337);
    std::uniform_int_distribution<int> op(0, 2);
    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> lines;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) lines.push_back("para " + std::to_string(round) + "-" + std::to_string(i));
        const std::vector<std::string> original = lines;

        // Apply one edit and remember what the oracle expects.
        const std::size_t at = rng() % lines.size();
        std::vector<std::size_t> expect_modified, expect_inserted, expect_deleted;
        switch (op(rng)) {
        case 0: lines[at] += " edited"; expect_modified = {at}; break;
        case 1: lines.insert(lines.begin() + at, "inserted " + std::to_string(round)); expect_inserted = {at}; break;
        default: lines.erase(lines.begin() + at); expect_deleted = {at}; break;
        }
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& l : v) s += l + "\n\n";
            return s;
        };
        const Document before("d", join(original));
        const Document after = before.with_text(join(lines));
        auto diff = diff_paragraphs(before, after);
        CHECK(diff.modified == expect_modified);
        CHECK(diff.inserted == expect_inserted);
        CHECK(diff.deleted == expect_deleted);

        // Every new paragraph not reported as changed has a hash present in the old document.
        const auto changed = diff.changed();
        for (const auto& p : after.paragraphs()) {
            const bool reported = std::find(changed.begin(), changed.end(), p.index) != changed.end();
            const bool known = std::any_of(before.paragraphs().begin(), before.paragraphs().end(),
                                           [&](const Paragraph& q) { return q.content_hash == p.content_hash; });
            CHECK(reported != known);
        }
    }
}
