#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/lm/ngram.hpp"

namespace charmend {

namespace detail {

inline std::string format_log10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

/// Standard textual ARPA layout: \data\ section with per-order counts,
/// then per-order sections of "logprob<TAB>ngram[<TAB>backoff]" lines.
/// Values carry 6 decimal places; a backoff of zero is simply omitted.
/// Entries are sorted lexicographically so output is reproducible.
inline void write_arpa(const NGramModel& model, std::ostream& out) {
    out << "\\data\\\n";
    for (size_t k = 1; k <= model.order; ++k)
        out << "ngram " << k << "=" << model.tables[k - 1].size() << "\n";
    out << "\n";
    for (size_t k = 1; k <= model.order; ++k) {
        out << "\\" << k << "-grams:\n";
        std::vector<const std::pair<const NGram, NGramModel::Entry>*> rows;
        rows.reserve(model.tables[k - 1].size());
        for (const auto& kv : model.tables[k - 1]) rows.push_back(&kv);
        std::sort(rows.begin(), rows.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
        for (const auto* kv : rows) {
            out << detail::format_log10(kv->second.logprob) << "\t" << join_tokens(kv->first);
            if (kv->second.has_backoff) out << "\t" << detail::format_log10(kv->second.backoff);
            out << "\n";
        }
        out << "\n";
    }
    out << "\\end\\\n";
}

inline void write_arpa_file(const NGramModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open ARPA file for writing: " + path);
    write_arpa(model, out);
}

inline NGramModel read_arpa(std::istream& in) {
    NGramModel model;
    std::string line;
    size_t line_no = 0;

    auto next = [&](bool required) {
        if (!std::getline(in, line)) {
            if (required) throw FormatError("ARPA file truncated at line " + std::to_string(line_no));
            return false;
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    // skip leading blank lines, find the data header
    do {
        if (!next(true)) break;
    } while (line.empty());
    if (line != "\\data\\") throw FormatError("ARPA: expected \\data\\ at line " + std::to_string(line_no));

    std::vector<size_t> declared;
    while (next(true) && !line.empty()) {
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw != "ngram") throw FormatError("ARPA: bad count line " + std::to_string(line_no) + ": " + line);
        std::string rest;
        ls >> rest;
        size_t eq = rest.find('=');
        if (eq == std::string::npos) throw FormatError("ARPA: bad count line " + std::to_string(line_no));
        size_t order = std::stoul(rest.substr(0, eq));
        size_t count = std::stoul(rest.substr(eq + 1));
        if (order != declared.size() + 1)
            throw FormatError("ARPA: non-consecutive order in counts at line " + std::to_string(line_no));
        declared.push_back(count);
    }
    if (declared.empty()) throw FormatError("ARPA: no ngram counts declared");

    model.order = declared.size();
    model.tables.resize(model.order);

    for (size_t k = 1; k <= model.order; ++k) {
        do {
            if (!next(true)) break;
        } while (line.empty());
        const std::string expect = "\\" + std::to_string(k) + "-grams:";
        if (line != expect)
            throw FormatError("ARPA: expected section " + expect + " at line " + std::to_string(line_no));
        size_t seen = 0;
        while (next(true) && !line.empty()) {
            std::vector<std::string> fields;
            size_t pos = 0;
            while (true) {
                size_t tab = line.find('\t', pos);
                if (tab == std::string::npos) {
                    fields.push_back(line.substr(pos));
                    break;
                }
                fields.push_back(line.substr(pos, tab - pos));
                pos = tab + 1;
            }
            if (fields.size() < 2 || fields.size() > 3)
                throw FormatError("ARPA: bad entry at line " + std::to_string(line_no) + ": " + line);
            NGramModel::Entry entry;
            try {
                entry.logprob = std::stod(fields[0]);
            } catch (const std::exception&) {
                throw FormatError("ARPA: bad probability at line " + std::to_string(line_no));
            }
            NGram gram = split_whitespace(fields[1]);
            if (gram.size() != k)
                throw FormatError("ARPA: " + std::to_string(gram.size()) + "-gram in " +
                                  std::to_string(k) + "-gram section at line " + std::to_string(line_no));
            if (fields.size() == 3) {
                try {
                    entry.backoff = std::stod(fields[2]);
                } catch (const std::exception&) {
                    throw FormatError("ARPA: bad backoff at line " + std::to_string(line_no));
                }
                entry.has_backoff = true;
            }
            model.tables[k - 1][gram] = entry;
            ++seen;
        }
        if (seen != declared[k - 1])
            throw FormatError("ARPA: section " + std::to_string(k) + " declares " +
                              std::to_string(declared[k - 1]) + " entries but holds " + std::to_string(seen));
    }

    do {
        if (!next(true)) break;
    } while (line.empty());
    if (line != "\\end\\") throw FormatError("ARPA: missing \\end\\ marker at line " + std::to_string(line_no));

    for (const auto& [gram, entry] : model.tables[0]) model.vocabulary.push_back(gram[0]);
    std::sort(model.vocabulary.begin(), model.vocabulary.end());
    return model;
}

inline NGramModel read_arpa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open ARPA file: " + path);
    return read_arpa(in);
}

/// 10^(-avg log10 P) over all word and </s> events; the uniform baseline
/// for comparison is the vocabulary size.
inline double lm_perplexity(const NGramModel& model, const std::vector<Tokens>& sentences) {
    double total = 0.0;
    size_t events = 0;
    for (const auto& s : sentences) {
        total += model.sentence_logprob(s);
        events += s.size() + 1;
    }
    return std::pow(10.0, -total / static_cast<double>(events));
}

}  // namespace charmend
