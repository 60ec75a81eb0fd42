#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "charmend/core/errors.hpp"

namespace charmend {

/// A parallel corpus of (source, target) sentence pairs.
struct ParallelCorpus {
    std::vector<std::pair<std::string, std::string>> pairs;
    size_t skipped_lines = 0;  // lines without a tab, dropped on ingest

    size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

inline std::string trim_copy(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

/// One pair per line, single tab separator, no escaping. Lines without a
/// tab or with an empty source after trimming are skipped and counted.
inline ParallelCorpus parse_tsv_corpus(std::istream& in) {
    ParallelCorpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            ++corpus.skipped_lines;
            continue;
        }
        std::string src = line.substr(0, tab);
        std::string tgt = line.substr(tab + 1);
        if (trim_copy(src).empty()) {
            ++corpus.skipped_lines;
            continue;
        }
        corpus.pairs.emplace_back(std::move(src), std::move(tgt));
    }
    return corpus;
}

inline ParallelCorpus load_tsv_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open corpus file: " + path);
    return parse_tsv_corpus(in);
}

inline void write_tsv_corpus(const ParallelCorpus& corpus, std::ostream& out) {
    for (const auto& [src, tgt] : corpus.pairs) out << src << '\t' << tgt << '\n';
}

/// Plain text, one sentence per line. Used for correction inputs and LM text.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline void write_lines(const std::vector<std::string>& lines, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open file for writing: " + path);
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace charmend
