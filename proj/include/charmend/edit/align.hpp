#pragma once

#include <algorithm>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

enum class AlignOp { Match, Substitute, Delete, Insert };

/// Word-level Levenshtein alignment with unit costs. Ties during
/// backtracking prefer match, then substitution, then deletion, then
/// insertion. The returned op sequence realizes the minimal cost.
inline std::vector<AlignOp> word_align(const Tokens& src, const Tokens& tgt) {
    const size_t n = src.size(), m = tgt.size();
    std::vector<std::vector<unsigned>> cost(n + 1, std::vector<unsigned>(m + 1, 0));
    for (size_t i = 0; i <= n; ++i) cost[i][0] = static_cast<unsigned>(i);
    for (size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<unsigned>(j);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            const unsigned diag = cost[i - 1][j - 1] + (src[i - 1] == tgt[j - 1] ? 0u : 1u);
            const unsigned del = cost[i - 1][j] + 1;
            const unsigned ins = cost[i][j - 1] + 1;
            cost[i][j] = std::min({diag, del, ins});
        }
    }

    std::vector<AlignOp> ops;
    size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && src[i - 1] == tgt[j - 1] && cost[i][j] == cost[i - 1][j - 1]) {
            ops.push_back(AlignOp::Match);
            --i, --j;
        } else if (i > 0 && j > 0 && src[i - 1] != tgt[j - 1] && cost[i][j] == cost[i - 1][j - 1] + 1) {
            ops.push_back(AlignOp::Substitute);
            --i, --j;
        } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
            ops.push_back(AlignOp::Delete);
            --i;
        } else {
            ops.push_back(AlignOp::Insert);
            --j;
        }
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

inline unsigned alignment_cost(const std::vector<AlignOp>& ops) {
    unsigned c = 0;
    for (AlignOp op : ops)
        if (op != AlignOp::Match) ++c;
    return c;
}

/// Maximal runs of non-match ops become single edits (side-by-side edits
/// merge; the alignment cannot tell them apart). No identity edits.
inline std::vector<Edit> extract_edits(const Tokens& src, const Tokens& hyp) {
    const std::vector<AlignOp> ops = word_align(src, hyp);
    std::vector<Edit> edits;
    size_t i = 0, j = 0;
    size_t k = 0;
    while (k < ops.size()) {
        if (ops[k] == AlignOp::Match) {
            ++i, ++j, ++k;
            continue;
        }
        Edit e;
        e.start = i;
        const size_t j_start = j;
        while (k < ops.size() && ops[k] != AlignOp::Match) {
            switch (ops[k]) {
                case AlignOp::Substitute: ++i, ++j; break;
                case AlignOp::Delete: ++i; break;
                case AlignOp::Insert: ++j; break;
                default: break;
            }
            ++k;
        }
        e.end = i;
        e.source.assign(src.begin() + static_cast<long>(e.start), src.begin() + static_cast<long>(e.end));
        e.replacement.assign(hyp.begin() + static_cast<long>(j_start), hyp.begin() + static_cast<long>(j));
        if (e.source != e.replacement) edits.push_back(std::move(e));
    }
    return edits;
}

struct LabeledEdit {
    Edit edit;
    bool good = false;
};

/// An edit is good iff some gold edit has the identical span and
/// replacement; everything else is bad.
inline std::vector<LabeledEdit> label_edits(const std::vector<Edit>& proposed,
                                            const std::vector<Edit>& gold) {
    std::vector<LabeledEdit> out;
    out.reserve(proposed.size());
    for (const Edit& p : proposed) {
        bool good = false;
        for (const Edit& g : gold) {
            if (p.same_span_and_replacement(g)) {
                good = true;
                break;
            }
        }
        out.push_back({p, good});
    }
    return out;
}

}  // namespace charmend
