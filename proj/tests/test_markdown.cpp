#include "revlens/markdown.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace revlens;

namespace {

Spans text(const std::string& s) {
    return {{SpanKind::text, s}};
}

} // namespace

TEST_CASE("parse_display: unordered list", "[markdown]") {
    auto blocks = parse_display("- a\n- b");
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].kind == BlockKind::unordered_list);
    CHECK(blocks[0].items == std::vector<Spans>{text("a"), text("b")});

    auto stars = parse_display("* x\n* y");
    REQUIRE(stars.size() == 1);
    CHECK(stars[0].kind == BlockKind::unordered_list);
}

TEST_CASE("parse_display: plain text is one paragraph", "[markdown]") {
    auto blocks = parse_display("plain");
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].kind == BlockKind::paragraph);
    CHECK(blocks[0].spans == text("plain"));
    CHECK(parse_display("").empty());
}

TEST_CASE("parse_display: ordered list followed by a paragraph", "[markdown]") {
    // Golden: a plain line ends the list (no lazy continuation).
    auto blocks = parse_display("1. x\n2. y\ntail");
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].kind == BlockKind::ordered_list);
    CHECK(blocks[0].start == 1);
    CHECK(blocks[0].items == std::vector<Spans>{text("x"), text("y")});
    CHECK(blocks[1].kind == BlockKind::paragraph);
    CHECK(blocks[1].spans == text("tail"));
}

TEST_CASE("parse_display: golden block structures", "[markdown]") {
    const std::vector<std::pair<std::string, std::string>> golden = {
        {"Intro line\ncontinues\n\n- one\n- two\n\n3. third\n4. fourth",
         R"([{"spans":[{"text":"Intro line\ncontinues","type":"text"}],"type":"paragraph"},)"
         R"({"items":[[{"text":"one","type":"text"}],[{"text":"two","type":"text"}]],"type":"unordered_list"},)"
         R"({"items":[[{"text":"third","type":"text"}],[{"text":"fourth","type":"text"}]],"start":3,"type":"ordered_list"}])"},
        {"- a\n1. b",
         R"([{"items":[[{"text":"a","type":"text"}]],"type":"unordered_list"},)"
         R"({"items":[[{"text":"b","type":"text"}]],"start":1,"type":"ordered_list"}])"},
        {"The **main** claim is *narrow*.",
         R"([{"spans":[{"text":"The ","type":"text"},{"text":"main","type":"bold"},{"text":" claim is ","type":"text"},)"
         R"({"text":"narrow","type":"emphasis"},{"text":".","type":"text"}],"type":"paragraph"}])"},
        {"- **Clarity**: define terms",
         R"([{"items":[[{"text":"Clarity","type":"bold"},{"text":": define terms","type":"text"}]],"type":"unordered_list"}])"},
        {"2 * 3 * 4 and **unclosed",
         R"([{"spans":[{"text":"2 * 3 * 4 and **unclosed","type":"text"}],"type":"paragraph"}])"},
        {"-not a list\n1.nor this",
         R"([{"spans":[{"text":"-not a list\n1.nor this","type":"text"}],"type":"paragraph"}])"},
        {"1. Concept: X Relevance: 9\r\n2. Concept: Y Relevance: 7\r\n",
         R"([{"items":[[{"text":"Concept: X Relevance: 9","type":"text"}],[{"text":"Concept: Y Relevance: 7","type":"text"}]],"start":1,"type":"ordered_list"}])"},
    };
    for (const auto& [input, expected] : golden) {
        INFO(input);
        CHECK(to_json(parse_display(input)).dump() == expected);
    }
}

TEST_CASE("parse_display: total on arbitrary input and stable through re-rendering", "[markdown][property]") {
    const std::string alphabet = "ab *-1.\n\n**_ 9";
    std::mt19937 rng(42);
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const std::size_t len = rng() % 40;
        for (std::size_t k = 0; k < len; ++k) s.push_back(alphabet[rng() % alphabet.size()]);
        const auto blocks = parse_display(s);
        for (const auto& b : blocks) {
            if (b.kind == BlockKind::paragraph) CHECK_FALSE(b.spans.empty());
            else CHECK_FALSE(b.items.empty());
        }
        // Rendering and re-parsing preserves the block kinds.
        const auto again = parse_display(to_markdown(blocks));
        REQUIRE(again.size() == blocks.size());
        for (std::size_t k = 0; k < blocks.size(); ++k) CHECK(again[k].kind == blocks[k].kind);
    }
}
