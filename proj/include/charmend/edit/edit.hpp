#pragma once

#include <string>
#include <vector>

namespace charmend {

using Tokens = std::vector<std::string>;

/// A word-span replacement: source tokens in [start, end) become the
/// replacement tokens. start == end is an insertion before token `start`.
/// The unit of edit extraction, classification, gold annotation, and
/// MaxMatch scoring.
struct Edit {
    size_t start = 0;
    size_t end = 0;
    Tokens source;       // tokens currently occupying [start, end)
    Tokens replacement;  // tokens that should replace them
    std::string type;    // error-type label; empty when unlabeled

    bool is_insertion() const { return start == end; }
    bool is_deletion() const { return replacement.empty(); }

    bool same_span_and_replacement(const Edit& o) const {
        return start == o.start && end == o.end && replacement == o.replacement;
    }
};

inline std::string join_tokens(const Tokens& toks, const std::string& sep = " ") {
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out += sep;
        out += toks[i];
    }
    return out;
}

inline Tokens split_whitespace(const std::string& s) {
    Tokens out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace charmend
