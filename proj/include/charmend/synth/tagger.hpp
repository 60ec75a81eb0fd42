#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

/// Per-token flags from the heuristic tagger. A token is at most one noun
/// number; NP-start marks a determiner or a noun not preceded by one.
struct TaggedSentence {
    Tokens tokens;
    std::vector<bool> is_determiner;
    std::vector<bool> is_noun_singular;
    std::vector<bool> is_noun_plural;
    std::vector<bool> is_np_start;

    size_t size() const { return tokens.size(); }
};

namespace tagger_detail {

inline std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline const std::unordered_set<std::string>& determiner_lexicon() {
    static const std::unordered_set<std::string> lex{
        "a", "an", "the", "this", "that", "these", "those",
        "my", "your", "his", "her", "its", "our", "their"};
    return lex;
}

/// Function words that should never be tagged as nouns. Verbs outside this
/// list may still be mis-tagged; that is the accepted cost of running
/// without a parser.
inline const std::unordered_set<std::string>& stopword_lexicon() {
    static const std::unordered_set<std::string> lex{
        "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them",
        "am", "is", "are", "was", "were", "be", "been", "being",
        "do", "does", "did", "have", "has", "had", "having",
        "will", "would", "can", "could", "shall", "should", "may", "might", "must",
        "not", "no", "nor", "and", "or", "but", "if", "because", "while", "though",
        "of", "in", "on", "at", "by", "for", "with", "about", "against", "to", "from",
        "up", "down", "out", "off", "over", "under", "again", "then", "once",
        "here", "there", "when", "where", "why", "how", "who", "whom", "whose",
        "which", "what", "all", "any", "both", "each", "few", "more", "most",
        "other", "some", "such", "only", "own", "same", "so", "than", "too",
        "very", "just", "also", "now", "as", "until", "during", "before", "after",
        "above", "below", "between", "into", "through", "yes"};
    return lex;
}

inline const std::unordered_map<std::string, std::string>& irregular_plurals() {
    static const std::unordered_map<std::string, std::string> map{
        {"child", "children"}, {"man", "men"},   {"woman", "women"},
        {"person", "people"},  {"foot", "feet"}, {"tooth", "teeth"},
        {"mouse", "mice"}};
    return map;
}

inline const std::unordered_map<std::string, std::string>& irregular_singulars() {
    static const std::unordered_map<std::string, std::string> map = [] {
        std::unordered_map<std::string, std::string> inv;
        for (const auto& [s, p] : irregular_plurals()) inv[p] = s;
        return inv;
    }();
    return map;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline bool all_alpha(const std::string& s) {
    if (s.empty()) return false;
    for (unsigned char c : s)
        if (!std::isalpha(c)) return false;
    return true;
}

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace tagger_detail

/// Looks plural under the suffix rules or the irregular table. "-ss",
/// "-us" and "-is" endings are treated as singular (class, bus, basis).
inline bool looks_plural(const std::string& token) {
    using namespace tagger_detail;
    const std::string w = lower(token);
    if (irregular_singulars().count(w)) return true;
    if (irregular_plurals().count(w)) return false;
    if (w.size() < 2 || w.back() != 's') return false;
    if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return false;
    return true;
}

/// singular -> plural: irregular table, -s/-es/-ies suffix transforms.
inline std::string pluralize(const std::string& token) {
    using namespace tagger_detail;
    const std::string w = lower(token);
    auto it = irregular_plurals().find(w);
    if (it != irregular_plurals().end()) return it->second;
    if (w.empty() || looks_plural(w)) return token;
    if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") ||
        ends_with(w, "sh"))
        return token + "es";
    if (w.size() >= 2 && w.back() == 'y' && !is_vowel(w[w.size() - 2]))
        return token.substr(0, token.size() - 1) + "ies";
    return token + "s";
}

/// plural -> singular, the inverse transforms. Unknown irregulars pass
/// through unchanged.
inline std::string singularize(const std::string& token) {
    using namespace tagger_detail;
    const std::string w = lower(token);
    auto it = irregular_singulars().find(w);
    if (it != irregular_singulars().end()) return it->second;
    if (!looks_plural(w)) return token;
    if (ends_with(w, "ies") && w.size() > 4) return token.substr(0, token.size() - 3) + "y";
    if (ends_with(w, "es")) {
        const std::string stem = w.substr(0, w.size() - 2);
        if (ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") ||
            ends_with(stem, "ch") || ends_with(stem, "sh"))
            return token.substr(0, token.size() - 2);
    }
    return token.substr(0, token.size() - 1);
}

/// Pre-tagged input: one "token<TAB>flags" line per token, flags a
/// comma-separated subset of {DET, NS, NP, NPS} (determiner, singular
/// noun, plural noun, NP start), blank line between sentences. Lets users
/// with a real parser bypass the heuristic tagger.
inline std::vector<TaggedSentence> parse_tagged_sentences(std::istream& in) {
    std::vector<TaggedSentence> out;
    TaggedSentence current;
    std::string line;
    size_t line_no = 0;
    auto flush = [&]() {
        if (!current.tokens.empty()) out.push_back(std::move(current));
        current = TaggedSentence{};
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        const size_t tab = line.find('\t');
        const std::string token = tab == std::string::npos ? line : line.substr(0, tab);
        if (token.empty()) throw ParseError("pre-tagged line has no token", line_no);
        bool det = false, ns = false, np = false, nps = false;
        if (tab != std::string::npos) {
            std::string flags = line.substr(tab + 1);
            size_t pos = 0;
            while (pos <= flags.size()) {
                size_t comma = flags.find(',', pos);
                std::string flag = flags.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos);
                if (flag == "DET") det = true;
                else if (flag == "NS") ns = true;
                else if (flag == "NP") np = true;
                else if (flag == "NPS") nps = true;
                else if (!flag.empty()) throw ParseError("unknown tag flag '" + flag + "'", line_no);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        }
        if (ns && np) throw ParseError("token tagged both singular and plural", line_no);
        current.tokens.push_back(token);
        current.is_determiner.push_back(det);
        current.is_noun_singular.push_back(ns);
        current.is_noun_plural.push_back(np);
        current.is_np_start.push_back(nps);
    }
    flush();
    return out;
}

/// Deterministic heuristic tagger standing in for a constituency parser:
/// determiners from a fixed lexicon, nouns as alphabetic non-stopwords
/// with number from suffix rules, NP starts at determiners and at nouns
/// not preceded by a determiner. Verbs can be mis-tagged as nouns.
inline TaggedSentence tag_heuristic(const Tokens& tokens) {
    using namespace tagger_detail;
    TaggedSentence out;
    out.tokens = tokens;
    const size_t n = tokens.size();
    out.is_determiner.assign(n, false);
    out.is_noun_singular.assign(n, false);
    out.is_noun_plural.assign(n, false);
    out.is_np_start.assign(n, false);

    for (size_t i = 0; i < n; ++i) {
        const std::string w = lower(tokens[i]);
        if (determiner_lexicon().count(w)) {
            out.is_determiner[i] = true;
            continue;
        }
        if (!all_alpha(w) || stopword_lexicon().count(w)) continue;
        if (looks_plural(w))
            out.is_noun_plural[i] = true;
        else
            out.is_noun_singular[i] = true;
    }
    for (size_t i = 0; i < n; ++i) {
        if (out.is_determiner[i]) {
            out.is_np_start[i] = true;
        } else if (out.is_noun_singular[i] || out.is_noun_plural[i]) {
            if (i == 0 || !out.is_determiner[i - 1]) out.is_np_start[i] = true;
        }
    }
    return out;
}

}  // namespace charmend
