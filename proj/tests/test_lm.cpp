#include <cmath>
#include <sstream>

#include "charmend/lm/arpa.hpp"
#include "charmend/lm/ngram.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace charmend;
using charmend::testing::KnOracle;
using charmend::testing::toy_grammar_sentences;

namespace {

std::vector<Tokens> tokenize_all(const std::vector<std::string>& lines) {
    std::vector<Tokens> out;
    for (const auto& l : lines) out.push_back(split_whitespace(l));
    return out;
}

/// Sum of P(w | context) over the model's whole vocabulary via the
/// backoff query path.
double conditional_mass(const NGramModel& model, const Tokens& context) {
    double sum = 0.0;
    for (const auto& w : model.vocabulary) sum += std::pow(10.0, model.logprob(w, context));
    return sum;
}

}  // namespace

TEST_CASE("n-gram counting") {
    SUBCASE("bigram enumeration") {
        CountTable t = count_ngrams({{"a", "a"}}, 2);
        CHECK(t.counts[1].at({kBos, "a"}) == 1);
        CHECK(t.counts[1].at({"a", "a"}) == 1);
        CHECK(t.counts[1].at({"a", kEosWord}) == 1);
        CHECK(t.counts[1].size() == 3);
        CHECK(t.counts[0].at({"a"}) == 2);
        CHECK(t.counts[0].count({kBos}) == 0);  // windows never end in padding
    }

    SUBCASE("empty corpus") {
        CountTable t = count_ngrams({}, 3);
        for (size_t k = 0; k < 3; ++k) CHECK(t.counts[k].empty());
    }

    SUBCASE("continuation counts") {
        CountTable t = count_ngrams({{"a", "b"}, {"c", "b"}}, 2);
        CHECK(t.continuation[0].at({"b"}) == 2);  // preceded by a and c
        CHECK(t.continuation[0].at({"a"}) == 1);  // preceded by <s> only
    }

    SUBCASE("order must be positive") { CHECK_THROWS_AS(count_ngrams({}, 0), ArgumentError); }
}

TEST_CASE("hand-computed interpolated KN value") {
    // corpus ["a"], order 2, D = 0.75, vocab {a, </s>, <s>, <unk>}:
    //   P1(a)      = (1 - D)/2 + D * (2/2) * 1/4            = 0.3125
    //   P(a | <s>) = (1 - D)/1 + D * (1/1) * P1(a)          = 0.484375
    NGramModel model = estimate_kn(count_ngrams({{"a"}}, 2), 0.75);
    CHECK(std::pow(10.0, model.logprob("a", {kBos})) == doctest::Approx(0.484375).epsilon(1e-12));
    CHECK(std::pow(10.0, model.logprob("a", {})) == doctest::Approx(0.3125).epsilon(1e-12));
}

TEST_CASE("continuation ordering: burstier words get less unigram mass") {
    NGramModel model = estimate_kn(count_ngrams({{"a", "b"}, {"c", "b"}}, 2), 0.75);
    CHECK(model.logprob("b", {}) > model.logprob("a", {}));
}

TEST_CASE("discount range enforced") {
    CountTable t = count_ngrams({{"a"}}, 2);
    CHECK_THROWS_AS(estimate_kn(t, 0.0), ArgumentError);
    CHECK_THROWS_AS(estimate_kn(t, 1.0), ArgumentError);
    CHECK_THROWS_AS(estimate_kn(t, -0.5), ArgumentError);
}

TEST_CASE("conditional distributions sum to one through backoff") {
    Rng rng(100);
    auto lines = toy_grammar_sentences(60, rng);
    NGramModel model = build_lm(lines, 5, 0.75);

    // contexts of every length, including unseen words
    std::vector<Tokens> contexts = {
        {},
        {kBos},
        {kBos, kBos, kBos, kBos},
        {"the"},
        {"the", "cat"},
        {"a", "small", "dog"},
        {"robot", "sees", "the", "bird"},
        {"zzz"},
        {"the", "zzz"},
        {"cat", "cat", "cat", "cat"},
    };
    Rng pick(7);
    auto sentences = tokenize_all(lines);
    for (int i = 0; i < 60; ++i) {
        const Tokens& s = sentences[pick.uniform_index(sentences.size())];
        size_t start = pick.uniform_index(s.size());
        size_t len = 1 + pick.uniform_index(4);
        Tokens ctx;
        for (size_t j = start; j < std::min(s.size(), start + len); ++j) ctx.push_back(s[j]);
        contexts.push_back(ctx);
    }
    for (const auto& ctx : contexts) {
        CHECK(conditional_mass(model, ctx) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("backoff queries match the independent recursive oracle") {
    Rng rng(200);
    auto lines = toy_grammar_sentences(20, rng);
    CountTable counts = count_ngrams(tokenize_all(lines), 5);
    NGramModel model = estimate_kn(counts, 0.75);
    KnOracle oracle(counts, 0.75);

    Rng pick(3);
    auto sentences = tokenize_all(lines);
    for (int trial = 0; trial < 300; ++trial) {
        Tokens ctx;
        const size_t ctx_len = pick.uniform_index(5);
        for (size_t i = 0; i < ctx_len; ++i) {
            const Tokens& s = sentences[pick.uniform_index(sentences.size())];
            ctx.push_back(s[pick.uniform_index(s.size())]);
        }
        const Tokens& s = sentences[pick.uniform_index(sentences.size())];
        std::string word = trial % 7 == 0 ? "unseenword" : s[pick.uniform_index(s.size())];
        const double via_tables = std::pow(10.0, model.logprob(word, ctx));
        const double via_counts = oracle.prob(word, ctx);
        CHECK(via_tables == doctest::Approx(via_counts).epsilon(1e-9));
    }

    SUBCASE("sentence-initial contexts too") {
        for (const auto& s : sentences) {
            Tokens ctx{kBos, kBos, kBos, kBos};
            CHECK(std::pow(10.0, model.logprob(s[0], ctx)) ==
                  doctest::Approx(oracle.prob(s[0], ctx)).epsilon(1e-9));
        }
    }
}

TEST_CASE("oov words take the unk path and stay finite") {
    NGramModel model = build_lm({"a b c", "b c d"}, 3, 0.75);
    const double lp = model.logprob("qqq", {"a"});
    CHECK(std::isfinite(lp));
    CHECK(lp == model.logprob(kUnkWord, {"a"}));
    CHECK(model.logprob("b", {}) ==
          doctest::Approx(model.tables[0].at({"b"}).logprob));
}

TEST_CASE("model beats the uniform baseline on its training corpus") {
    Rng rng(300);
    auto lines = toy_grammar_sentences(100, rng);
    NGramModel model = build_lm(lines, 5, 0.75);
    const double ppl = lm_perplexity(model, tokenize_all(lines));
    CHECK(ppl < static_cast<double>(model.vocabulary.size()));
    CHECK(ppl > 1.0);
}

TEST_CASE("arpa round trip is a fixed point") {
    Rng rng(400);
    auto lines = toy_grammar_sentences(20, rng);
    NGramModel model = build_lm(lines, 5, 0.75);

    std::ostringstream first;
    write_arpa(model, first);
    std::istringstream in(first.str());
    NGramModel re = read_arpa(in);
    std::ostringstream second;
    write_arpa(re, second);
    CHECK(first.str() == second.str());

    // count headers match section contents by construction; spot check
    std::istringstream lines_in(first.str());
    std::string line;
    std::getline(lines_in, line);
    REQUIRE(line == "\\data\\");
    std::getline(lines_in, line);
    CHECK(line == "ngram 1=" + std::to_string(model.tables[0].size()));

    // queries through the reloaded model agree to the 6 decimals written
    Rng pick(5);
    auto sentences = tokenize_all(lines);
    for (int trial = 0; trial < 50; ++trial) {
        const Tokens& s = sentences[pick.uniform_index(sentences.size())];
        Tokens ctx{s[0]};
        const double a = model.logprob(s.back(), ctx);
        const double b = re.logprob(s.back(), ctx);
        CHECK(std::fabs(a - b) < 1e-5);
    }
}

TEST_CASE("arpa format errors") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_arpa(in);
    };
    CHECK_THROWS_AS(parse("not arpa\n"), FormatError);
    CHECK_THROWS_AS(parse("\\data\\\nngram 1=2\n\n\\1-grams:\n-0.5\ta\n\n\\end\\\n"), FormatError);
    CHECK_THROWS_AS(parse("\\data\\\nngram 1=1\n\n\\2-grams:\n-0.5\ta b\n\n\\end\\\n"), FormatError);
    CHECK_THROWS_AS(parse("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\ta\n"), FormatError);
    CHECK_THROWS_AS(parse("\\data\\\nngram 1=1\n\n\\1-grams:\nbogus\ta\n\n\\end\\\n"), FormatError);
}

TEST_CASE("natural-log conversion for the fusion path") {
    NGramModel model = build_lm({"a b", "a c"}, 2, 0.75);
    const double l10 = model.logprob("b", {"a"});
    CHECK(model.logprob_ln("b", {"a"}) == doctest::Approx(l10 * std::log(10.0)));
}

TEST_CASE("modified-KN discounts keep distributions normalized") {
    Rng rng(500);
    auto lines = charmend::testing::toy_grammar_sentences(80, rng);
    std::vector<Tokens> sentences;
    for (const auto& l : lines) sentences.push_back(split_whitespace(l));
    NGramModel model = estimate_kn_modified(count_ngrams(sentences, 4));

    std::vector<Tokens> contexts = {{}, {kBos}, {"the"}, {"the", "cat"}, {"zzz", "the"}};
    for (const auto& ctx : contexts) {
        double mass = 0.0;
        for (const auto& w : model.vocabulary) mass += std::pow(10.0, model.logprob(w, ctx));
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }

    // it is a genuinely different estimate from the fixed-discount model
    NGramModel fixed = estimate_kn(count_ngrams(sentences, 4), 0.75);
    CHECK(model.logprob("cat", {"the"}) != fixed.logprob("cat", {"the"}));

    // and it still beats the uniform baseline on its training data
    CHECK(lm_perplexity(model, sentences) < static_cast<double>(model.vocabulary.size()));
}
