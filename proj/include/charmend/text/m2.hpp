#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

/// A gold edit as read from an annotation file: the edit itself plus the
/// columns between the replacement and the annotator id, which we preserve
/// verbatim on re-serialization but do not interpret.
struct M2Edit {
    Edit edit;
    std::vector<std::string> extras;  // defaults to {"REQUIRED", "-NONE-"}
};

/// A tokenized sentence with per-annotator gold edit sets. An annotator
/// that supplied an explicit no-op annotation is present with an empty set.
struct AnnotatedSentence {
    Tokens tokens;
    std::map<int, std::vector<M2Edit>> annotators;

    const std::vector<M2Edit>* edits_for(int annotator) const {
        auto it = annotators.find(annotator);
        return it == annotators.end() ? nullptr : &it->second;
    }

    /// Plain edit list for one annotator (empty when absent).
    std::vector<Edit> gold_edits(int annotator) const {
        std::vector<Edit> out;
        if (const auto* m2 = edits_for(annotator))
            for (const auto& e : *m2) out.push_back(e.edit);
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            parts.push_back(s.substr(pos));
            break;
        }
        parts.push_back(s.substr(pos, next - pos));
        pos = next + sep.size();
    }
    return parts;
}

inline long parse_long(const std::string& s, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " '" + s + "'", line_no);
    }
}

}  // namespace detail

/// Parses the annotation format used by GEC scorers: sentence lines
/// "S w1 w2 ..." followed by zero or more annotation lines
/// "A i j|||TYPE|||replacement|||...|||annotator". A replacement of
/// "-NONE-" means deletion; type "noop" registers the annotator with an
/// empty edit set. Edits are sorted by span and must not overlap.
inline std::vector<AnnotatedSentence> parse_m2(std::istream& in) {
    std::vector<AnnotatedSentence> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("S ", 0) == 0 || line == "S") {
            AnnotatedSentence s;
            s.tokens = split_whitespace(line.substr(1));
            out.push_back(std::move(s));
            continue;
        }
        if (line.rfind("A ", 0) == 0) {
            if (out.empty()) throw ParseError("annotation before any sentence", line_no);
            AnnotatedSentence& sent = out.back();
            auto fields = detail::split_on(line.substr(2), "|||");
            if (fields.size() < 3) throw ParseError("annotation needs span, type, replacement and annotator fields", line_no);
            auto span = split_whitespace(fields[0]);
            if (span.size() != 2) throw ParseError("span must be two integers", line_no);
            long start = detail::parse_long(span[0], line_no, "span start");
            long end = detail::parse_long(span[1], line_no, "span end");
            const std::string& type = fields[1];
            int annotator = static_cast<int>(detail::parse_long(fields.back(), line_no, "annotator id"));

            if (type == "noop") {
                sent.annotators.try_emplace(annotator);
                continue;
            }
            if (start > end) throw ParseError("span start exceeds end", line_no);
            if (start < 0 || static_cast<size_t>(end) > sent.tokens.size())
                throw ParseError("span outside sentence", line_no);

            M2Edit m2;
            m2.edit.start = static_cast<size_t>(start);
            m2.edit.end = static_cast<size_t>(end);
            m2.edit.type = type;
            if (fields.size() >= 3 && fields[2] != "-NONE-")
                m2.edit.replacement = split_whitespace(fields[2]);
            for (size_t t = m2.edit.start; t < m2.edit.end; ++t) m2.edit.source.push_back(sent.tokens[t]);
            if (fields.size() > 4)
                m2.extras.assign(fields.begin() + 3, fields.end() - 1);
            else
                m2.extras = {"REQUIRED", "-NONE-"};

            auto& edits = sent.annotators[annotator];
            // keep sorted by span; reject overlap within one annotator
            size_t pos = edits.size();
            while (pos > 0 && (edits[pos - 1].edit.start > m2.edit.start ||
                               (edits[pos - 1].edit.start == m2.edit.start && edits[pos - 1].edit.end > m2.edit.end)))
                --pos;
            if (pos > 0 && edits[pos - 1].edit.end > m2.edit.start)
                throw ParseError("overlapping edits for annotator " + std::to_string(annotator), line_no);
            if (pos < edits.size() && m2.edit.end > edits[pos].edit.start)
                throw ParseError("overlapping edits for annotator " + std::to_string(annotator), line_no);
            edits.insert(edits.begin() + static_cast<long>(pos), std::move(m2));
            continue;
        }
        throw ParseError("expected an S or A line", line_no);
    }
    return out;
}

inline std::vector<AnnotatedSentence> parse_m2_text(const std::string& text) {
    std::istringstream in(text);
    return parse_m2(in);
}

/// Canonical serialization: one S line, annotators in ascending id order,
/// edits sorted by span, explicit noop lines for empty sets, blank line
/// after each sentence. parse(serialize(parse(x))) == parse(x).
inline std::string serialize_m2(const std::vector<AnnotatedSentence>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        out += "S " + join_tokens(s.tokens) + "\n";
        for (const auto& [annotator, edits] : s.annotators) {
            if (edits.empty()) {
                out += "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||" + std::to_string(annotator) + "\n";
                continue;
            }
            for (const auto& m2 : edits) {
                out += "A " + std::to_string(m2.edit.start) + " " + std::to_string(m2.edit.end);
                out += "|||" + m2.edit.type;
                out += "|||" + (m2.edit.replacement.empty() ? std::string("-NONE-") : join_tokens(m2.edit.replacement));
                for (const auto& extra : m2.extras) out += "|||" + extra;
                out += "|||" + std::to_string(annotator) + "\n";
            }
        }
        out += "\n";
    }
    return out;
}

/// Applies non-overlapping, sorted edits to a token sequence
/// (right to left so earlier spans stay valid).
inline Tokens apply_edits(const Tokens& tokens, const std::vector<Edit>& edits) {
    Tokens out = tokens;
    for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
        out.erase(out.begin() + static_cast<long>(it->start), out.begin() + static_cast<long>(it->end));
        out.insert(out.begin() + static_cast<long>(it->start), it->replacement.begin(), it->replacement.end());
    }
    return out;
}

}  // namespace charmend
