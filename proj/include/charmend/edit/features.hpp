#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/align.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

constexpr size_t kWordVecDim = 100;
constexpr size_t kEditFeatureDim = 10 + 4 * kWordVecDim;  // 410

/// Pretrained word vectors: plain text, one "token v1 .. v100" entry per
/// line. Lookups for unknown words yield the zero vector.
class WordVectors {
public:
    WordVectors() = default;

    static WordVectors load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ArgumentError("cannot open word-vector file: " + path);
        return parse(in);
    }

    static WordVectors parse(std::istream& in) {
        WordVectors wv;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string token;
            ls >> token;
            std::vector<double> vec;
            double v;
            while (ls >> v) vec.push_back(v);
            if (vec.size() != kWordVecDim)
                throw ArgumentError("word-vector line " + std::to_string(line_no) + " has " +
                                    std::to_string(vec.size()) + " dims, expected " +
                                    std::to_string(kWordVecDim));
            wv.table_[token] = std::move(vec);
        }
        return wv;
    }

    const std::vector<double>* find(const std::string& token) const {
        auto it = table_.find(token);
        return it == table_.end() ? nullptr : &it->second;
    }

    size_t size() const { return table_.size(); }

private:
    std::unordered_map<std::string, std::vector<double>> table_;
};

namespace detail {

inline void add_vector(std::vector<double>& out, size_t offset, const WordVectors& wv,
                       const std::string& token) {
    if (const auto* v = wv.find(token))
        for (size_t i = 0; i < kWordVecDim; ++i) out[offset + i] += (*v)[i];
}

inline Tokens chars_of(const Tokens& toks) {
    Tokens out;
    const std::string joined = join_tokens(toks);
    out.reserve(joined.size());
    for (char c : joined) out.emplace_back(1, c);
    return out;
}

struct OpCounts {
    size_t ins = 0, del = 0, sub = 0;
};

inline OpCounts count_ops(const Tokens& a, const Tokens& b) {
    OpCounts c;
    for (AlignOp op : word_align(a, b)) {
        if (op == AlignOp::Insert) ++c.ins;
        else if (op == AlignOp::Delete) ++c.del;
        else if (op == AlignOp::Substitute) ++c.sub;
    }
    return c;
}

}  // namespace detail

/// 410-dim feature vector for an edit s -> t inside its sentence:
/// 10 distance features (lengths of s and t normalized by sentence word and
/// character length; word- and character-level insertions, deletions and
/// substitutions between s and t normalized by max(|s|,|t|)), followed by
/// four 100-dim blocks (vector sums over s and t, left and right context
/// words). Zero normalizers yield zero features; absent context or OOV
/// words yield zero blocks.
inline std::vector<double> featurize(const Edit& edit, const Tokens& sentence, const WordVectors& vectors) {
    std::vector<double> f(kEditFeatureDim, 0.0);

    const double sent_words = static_cast<double>(sentence.size());
    const double sent_chars = static_cast<double>(join_tokens(sentence).size());
    const double s_words = static_cast<double>(edit.source.size());
    const double t_words = static_cast<double>(edit.replacement.size());
    const double s_chars = static_cast<double>(join_tokens(edit.source).size());
    const double t_chars = static_cast<double>(join_tokens(edit.replacement).size());

    if (sent_words > 0) {
        f[0] = s_words / sent_words;
        f[1] = t_words / sent_words;
    }
    if (sent_chars > 0) {
        f[2] = s_chars / sent_chars;
        f[3] = t_chars / sent_chars;
    }

    const double word_norm = std::max(s_words, t_words);
    if (word_norm > 0) {
        const auto c = detail::count_ops(edit.source, edit.replacement);
        f[4] = static_cast<double>(c.ins) / word_norm;
        f[5] = static_cast<double>(c.del) / word_norm;
        f[6] = static_cast<double>(c.sub) / word_norm;
    }
    const double char_norm = std::max(s_chars, t_chars);
    if (char_norm > 0) {
        const auto c = detail::count_ops(detail::chars_of(edit.source), detail::chars_of(edit.replacement));
        f[7] = static_cast<double>(c.ins) / char_norm;
        f[8] = static_cast<double>(c.del) / char_norm;
        f[9] = static_cast<double>(c.sub) / char_norm;
    }

    size_t off = 10;
    for (const auto& w : edit.source) detail::add_vector(f, off, vectors, w);
    off += kWordVecDim;
    for (const auto& w : edit.replacement) detail::add_vector(f, off, vectors, w);
    off += kWordVecDim;
    if (edit.start > 0 && edit.start <= sentence.size())
        detail::add_vector(f, off, vectors, sentence[edit.start - 1]);
    off += kWordVecDim;
    if (edit.end < sentence.size()) detail::add_vector(f, off, vectors, sentence[edit.end]);
    return f;
}

}  // namespace charmend
