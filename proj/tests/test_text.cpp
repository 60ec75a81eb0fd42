#include <set>
#include <sstream>

#include "charmend/text/batch.hpp"
#include "charmend/text/corpus.hpp"
#include "charmend/text/m2.hpp"
#include "charmend/text/vocab.hpp"
#include "doctest.h"

using namespace charmend;

TEST_CASE("character vocabulary") {
    CHECK(CharVocab::size() == 98);
    CHECK(CharVocab::encode("Hi", false) == std::vector<int>{40, 73});
    CHECK(CharVocab::encode("Hi", true) == std::vector<int>{40, 73, 96});
    CHECK(CharVocab::encode("", true) == std::vector<int>{96});
    CHECK(CharVocab::encode("\xc3\xa9", false) == std::vector<int>{97});  // one code point, one unk
    CHECK(CharVocab::encode_char(' ') == 0);
    CHECK(CharVocab::encode_char('~') == 94);
    CHECK(CharVocab::encode_char('\t') == CharVocab::kUnk);
}

TEST_CASE("encode/decode round trip on printable ASCII") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const size_t len = rng.uniform_index(30);
        for (size_t i = 0; i < len; ++i)
            s.push_back(static_cast<char>(0x20 + rng.uniform_index(95)));
        CHECK(CharVocab::decode(CharVocab::encode(s, false)) == s);
    }
    for (int id = 0; id < 98; ++id) {
        const std::string sym = CharVocab::decode_symbol(id);
        if (id <= 94) CHECK(CharVocab::encode_char(sym[0]) == id);
    }
}

TEST_CASE("tsv corpus parsing") {
    std::istringstream in("bad sentence\tgood sentence\nno tab line\n\tempty source\na\tb\n");
    ParallelCorpus corpus = parse_tsv_corpus(in);
    CHECK(corpus.size() == 2);
    CHECK(corpus.pairs[0].first == "bad sentence");
    CHECK(corpus.pairs[0].second == "good sentence");
    CHECK(corpus.pairs[1].first == "a");
    CHECK(corpus.skipped_lines == 2);
}

TEST_CASE("m2 parsing") {
    SUBCASE("single edit") {
        auto sents = parse_m2_text(
            "S The cat sit .\n"
            "A 2 3|||Vform|||sits|||REQUIRED|||-NONE-|||0\n");
        REQUIRE(sents.size() == 1);
        CHECK(sents[0].tokens == Tokens{"The", "cat", "sit", "."});
        auto edits = sents[0].gold_edits(0);
        REQUIRE(edits.size() == 1);
        CHECK(edits[0].start == 2);
        CHECK(edits[0].end == 3);
        CHECK(edits[0].type == "Vform");
        CHECK(edits[0].replacement == Tokens{"sits"});
        CHECK(edits[0].source == Tokens{"sit"});
    }

    SUBCASE("sentence with no annotations") {
        auto sents = parse_m2_text("S Nothing wrong here .\n");
        REQUIRE(sents.size() == 1);
        CHECK(sents[0].annotators.empty());
    }

    SUBCASE("insertion edit") {
        auto sents = parse_m2_text("S want apple\nA 1 1|||ArtOrDet|||an|||REQUIRED|||-NONE-|||0\n");
        auto edits = sents[0].gold_edits(0);
        REQUIRE(edits.size() == 1);
        CHECK(edits[0].is_insertion());
        CHECK(edits[0].start == 1);
        CHECK(edits[0].replacement == Tokens{"an"});
    }

    SUBCASE("deletion via -NONE-") {
        auto sents = parse_m2_text("S the the cat\nA 0 1|||ArtOrDet|||-NONE-|||REQUIRED|||-NONE-|||0\n");
        auto edits = sents[0].gold_edits(0);
        REQUIRE(edits.size() == 1);
        CHECK(edits[0].is_deletion());
    }

    SUBCASE("noop annotator registers with empty set") {
        auto sents = parse_m2_text("S fine\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n");
        REQUIRE(sents[0].annotators.count(1) == 1);
        CHECK(sents[0].gold_edits(1).empty());
    }

    SUBCASE("multiple annotators") {
        auto sents = parse_m2_text(
            "S a b c\n"
            "A 0 1|||X|||q|||REQUIRED|||-NONE-|||0\n"
            "A 1 2|||Y|||r|||REQUIRED|||-NONE-|||1\n");
        CHECK(sents[0].gold_edits(0).size() == 1);
        CHECK(sents[0].gold_edits(1).size() == 1);
    }

    SUBCASE("errors carry line numbers") {
        CHECK_THROWS_AS(parse_m2_text("A 0 1|||X|||y|||a|||b|||0\n"), ParseError);
        CHECK_THROWS_AS(parse_m2_text("S a b\nA 2 1|||X|||y|||a|||b|||0\n"), ParseError);
        CHECK_THROWS_AS(parse_m2_text("S a b\nA 0 9|||X|||y|||a|||b|||0\n"), ParseError);
        CHECK_THROWS_AS(parse_m2_text("S a b\nbogus\n"), ParseError);
        CHECK_THROWS_AS(parse_m2_text("S a b\nA x y|||X|||y|||a|||b|||0\n"), ParseError);
        try {
            parse_m2_text("S a b\nA 2 1|||X|||y|||a|||b|||0\n");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }

    SUBCASE("overlapping edits rejected") {
        CHECK_THROWS_AS(parse_m2_text("S a b c d\n"
                                      "A 0 2|||X|||q|||REQUIRED|||-NONE-|||0\n"
                                      "A 1 3|||Y|||r|||REQUIRED|||-NONE-|||0\n"),
                        ParseError);
    }
}

TEST_CASE("m2 serialization is a fixed point of parsing") {
    const std::string text =
        "S The cat sit on mat .\n"
        "A 2 3|||Vform|||sits|||REQUIRED|||-NONE-|||0\n"
        "A 4 4|||ArtOrDet|||the|||REQUIRED|||-NONE-|||0\n"
        "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n"
        "\n"
        "S this one fine\n";
    auto first = parse_m2_text(text);
    const std::string canon = serialize_m2(first);
    auto second = parse_m2_text(canon);
    CHECK(serialize_m2(second) == canon);
    REQUIRE(second.size() == first.size());
    for (size_t i = 0; i < first.size(); ++i) {
        CHECK(second[i].tokens == first[i].tokens);
        REQUIRE(second[i].annotators.size() == first[i].annotators.size());
        for (const auto& [id, edits] : first[i].annotators) {
            auto gold_a = first[i].gold_edits(id);
            auto gold_b = second[i].gold_edits(id);
            REQUIRE(gold_a.size() == gold_b.size());
            for (size_t e = 0; e < gold_a.size(); ++e) {
                CHECK(gold_a[e].same_span_and_replacement(gold_b[e]));
                CHECK(gold_a[e].type == gold_b[e].type);
            }
        }
    }
}

TEST_CASE("apply_edits") {
    Tokens tokens{"The", "cat", "sit", "."};
    std::vector<Edit> edits;
    edits.push_back({2, 3, {"sit"}, {"sits"}, "Vform"});
    CHECK(apply_edits(tokens, edits) == Tokens{"The", "cat", "sits", "."});

    std::vector<Edit> ins;
    ins.push_back({1, 1, {}, {"big"}, ""});
    CHECK(apply_edits(tokens, ins) == Tokens{"The", "big", "cat", "sit", "."});
}

TEST_CASE("batching") {
    ParallelCorpus corpus;
    corpus.pairs = {{"ab", "abc"}, {"x", "y"}, {"hello", "hallo"}};

    SUBCASE("batch sizes partition the corpus") {
        Rng rng(5);
        auto batches = make_batches(corpus, 2, rng);
        REQUIRE(batches.size() == 2);
        CHECK(batches[0].size() + batches[1].size() == 3);
    }

    SUBCASE("identical seed gives identical batches") {
        Rng r1(9), r2(9);
        auto b1 = make_batches(corpus, 2, r1);
        auto b2 = make_batches(corpus, 2, r2);
        REQUIRE(b1.size() == b2.size());
        for (size_t i = 0; i < b1.size(); ++i) {
            CHECK(b1[i].source == b2[i].source);
            CHECK(b1[i].target == b2[i].target);
        }
    }

    SUBCASE("target rows wrap with sos and eos") {
        ParallelCorpus one;
        one.pairs = {{"ab", "abc"}};
        Rng rng(1);
        auto batches = make_batches(one, 1, rng);
        REQUIRE(batches.size() == 1);
        const int a = CharVocab::encode_char('a');
        const int b = CharVocab::encode_char('b');
        const int c = CharVocab::encode_char('c');
        CHECK(batches[0].target[0] ==
              std::vector<int>{CharVocab::kSos, a, b, c, CharVocab::kEos});
        CHECK(batches[0].target_len[0] == 5);
        CHECK(batches[0].source[0] == std::vector<int>{a, b, CharVocab::kEos});
    }

    SUBCASE("every pair appears exactly once per epoch") {
        ParallelCorpus big;
        for (int i = 0; i < 23; ++i)
            big.pairs.emplace_back("src" + std::to_string(i), "tgt" + std::to_string(i));
        Rng rng(3);
        auto batches = make_batches(big, 4, rng);
        size_t total = 0;
        std::set<std::string> seen;
        for (const auto& b : batches) {
            total += b.size();
            for (size_t i = 0; i < b.size(); ++i) seen.insert(CharVocab::decode(b.source_row(i)));
        }
        CHECK(total == 23);
        CHECK(seen.size() == 23);  // each source distinct and present
    }

    SUBCASE("empty corpus rejected") {
        ParallelCorpus empty;
        Rng rng(0);
        CHECK_THROWS_AS(make_batches(empty, 2, rng), ArgumentError);
    }
}

TEST_CASE("pyramid padding rule") {
    CHECK(pad_for_pyramid({1, 2, 3}, 1).size() == 3);
    CHECK(pad_for_pyramid({1, 2, 3}, 2).size() == 4);
    CHECK(pad_for_pyramid({1, 2, 3}, 3).size() == 4);
    CHECK(pad_for_pyramid(std::vector<int>(17, 1), 3).size() == 20);
    auto padded = pad_for_pyramid({1}, 3);
    CHECK(padded == std::vector<int>{1, CharVocab::kEos, CharVocab::kEos, CharVocab::kEos});
}
