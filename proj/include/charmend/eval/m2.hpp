#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"
#include "charmend/eval/fscore.hpp"
#include "charmend/text/m2.hpp"

namespace charmend {

struct M2Options {
    double beta = 0.5;
    size_t max_unchanged = 2;      // unchanged words absorbable inside one edit
    int restrict_annotator = -1;   // score against one annotator only; -1 = best per sentence
};

/// Per-sentence scoring outcome against the chosen annotator.
struct SentenceM2 {
    size_t matched = 0;
    size_t proposed = 0;
    size_t gold = 0;
    int annotator = 0;
    std::vector<size_t> matched_gold;  // indices into that annotator's edit list
};

struct M2Report {
    PRF overall;
    std::vector<SentenceM2> sentences;
    std::map<std::string, std::pair<size_t, size_t>> per_type;  // type -> (matched, total)
    std::map<int, PRF> per_annotator;                           // filled for multi-annotator gold
};

namespace m2_detail {

struct Node {
    size_t i, j;
};

/// The per-sentence MaxMatch search. Builds the lattice of word-level
/// Levenshtein alignments between source and hypothesis, adds composite
/// edit edges that absorb up to max_unchanged unchanged words between
/// edits, and picks, via a DP over (position, matched-gold bitmask)
/// states, the edit set with the most gold matches, ties broken by fewest
/// edits. Exact for up to 64 gold edits.
struct LatticeScorer {
    const Tokens& src;
    const Tokens& hyp;
    const std::vector<Edit>& gold;
    size_t max_unchanged;

    size_t I, J;
    std::vector<std::vector<unsigned>> fwd, bwd;
    unsigned total = 0;

    LatticeScorer(const Tokens& s, const Tokens& h, const std::vector<Edit>& g, size_t mu)
        : src(s), hyp(h), gold(g), max_unchanged(mu), I(s.size()), J(h.size()) {
        fwd.assign(I + 1, std::vector<unsigned>(J + 1, 0));
        bwd.assign(I + 1, std::vector<unsigned>(J + 1, 0));
        for (size_t i = 0; i <= I; ++i) fwd[i][0] = static_cast<unsigned>(i);
        for (size_t j = 0; j <= J; ++j) fwd[0][j] = static_cast<unsigned>(j);
        for (size_t i = 1; i <= I; ++i)
            for (size_t j = 1; j <= J; ++j)
                fwd[i][j] = std::min({fwd[i - 1][j - 1] + (src[i - 1] == hyp[j - 1] ? 0u : 1u),
                                      fwd[i - 1][j] + 1, fwd[i][j - 1] + 1});
        for (size_t i = 0; i <= I; ++i) bwd[i][J] = static_cast<unsigned>(I - i);
        for (size_t j = 0; j <= J; ++j) bwd[I][j] = static_cast<unsigned>(J - j);
        for (size_t i = I; i-- > 0;)
            for (size_t j = J; j-- > 0;)
                bwd[i][j] = std::min({bwd[i + 1][j + 1] + (src[i] == hyp[j] ? 0u : 1u),
                                      bwd[i + 1][j] + 1, bwd[i][j + 1] + 1});
        total = fwd[I][J];
    }

    bool optimal_match(size_t i, size_t j) const {
        return i < I && j < J && src[i] == hyp[j] && fwd[i][j] + bwd[i + 1][j + 1] == total;
    }
    bool optimal_sub(size_t i, size_t j) const {
        return i < I && j < J && src[i] != hyp[j] && fwd[i][j] + 1 + bwd[i + 1][j + 1] == total;
    }
    bool optimal_del(size_t i, size_t j) const {
        return i < I && fwd[i][j] + 1 + bwd[i + 1][j] == total;
    }
    bool optimal_ins(size_t i, size_t j) const {
        return j < J && fwd[i][j] + 1 + bwd[i][j + 1] == total;
    }

    /// All composite edit destinations from (i, j): nodes reachable along
    /// optimal edges by a segment that starts and ends with a non-match op
    /// and never strings together more than max_unchanged matches inside.
    std::vector<Node> edit_ends_from(size_t i, size_t j) const {
        std::vector<Node> ends;
        // visited[(i,j)] bitmask over trailing-match counts 0..max_unchanged
        std::unordered_map<uint64_t, uint32_t> visited;
        auto key = [this](size_t a, size_t b) { return static_cast<uint64_t>(a) * (J + 1) + b; };
        std::vector<std::pair<Node, uint32_t>> stack;

        auto push_edit_steps = [&](size_t ci, size_t cj, bool record_from_start) {
            (void)record_from_start;
            if (optimal_sub(ci, cj)) stack.push_back({{ci + 1, cj + 1}, 0});
            if (optimal_del(ci, cj)) stack.push_back({{ci + 1, cj}, 0});
            if (optimal_ins(ci, cj)) stack.push_back({{ci, cj + 1}, 0});
        };

        push_edit_steps(i, j, true);
        while (!stack.empty()) {
            auto [node, trailing] = stack.back();
            stack.pop_back();
            uint32_t& seen = visited[key(node.i, node.j)];
            if (seen & (1u << trailing)) continue;
            seen |= (1u << trailing);
            if (trailing == 0) ends.push_back(node);  // segment currently ends on an edit op
            if (trailing < max_unchanged && optimal_match(node.i, node.j))
                stack.push_back({{node.i + 1, node.j + 1}, trailing + 1});
            if (optimal_sub(node.i, node.j)) stack.push_back({{node.i + 1, node.j + 1}, 0});
            if (optimal_del(node.i, node.j)) stack.push_back({{node.i + 1, node.j}, 0});
            if (optimal_ins(node.i, node.j)) stack.push_back({{node.i, node.j + 1}, 0});
        }
        // dedupe ends (recorded once per distinct node by the visited set,
        // except a node first reached with trailing > 0)
        std::sort(ends.begin(), ends.end(), [](const Node& a, const Node& b) {
            return a.i != b.i ? a.i < b.i : a.j < b.j;
        });
        ends.erase(std::unique(ends.begin(), ends.end(),
                               [](const Node& a, const Node& b) { return a.i == b.i && a.j == b.j; }),
                   ends.end());
        return ends;
    }

    /// Lowest free gold index whose span and replacement equal the edit
    /// src[i..i2) -> hyp[j..j2), or -1.
    int matching_gold(size_t i, size_t i2, size_t j, size_t j2, uint64_t used) const {
        for (size_t g = 0; g < gold.size(); ++g) {
            if (used & (uint64_t{1} << g)) continue;
            const Edit& e = gold[g];
            if (e.start != i || e.end != i2) continue;
            if (e.replacement.size() != j2 - j) continue;
            bool eq = true;
            for (size_t k = 0; k < e.replacement.size(); ++k)
                if (e.replacement[k] != hyp[j + k]) {
                    eq = false;
                    break;
                }
            if (eq) return static_cast<int>(g);
        }
        return -1;
    }

    SentenceM2 run() const {
        if (gold.size() > 64)
            throw ArgumentError("m2: more than 64 gold edits in one sentence");

        // dp[i][j]: mask of matched gold -> fewest edits
        std::vector<std::vector<std::unordered_map<uint64_t, unsigned>>> dp(
            I + 1, std::vector<std::unordered_map<uint64_t, unsigned>>(J + 1));
        dp[0][0][0] = 0;

        auto relax = [&](size_t i, size_t j, uint64_t mask, unsigned edits) {
            auto& cell = dp[i][j];
            auto it = cell.find(mask);
            if (it == cell.end() || it->second > edits) cell[mask] = edits;
        };

        for (size_t i = 0; i <= I; ++i) {
            for (size_t j = 0; j <= J; ++j) {
                if (dp[i][j].empty()) continue;
                const bool match_ok = optimal_match(i, j);
                const std::vector<Node> ends = edit_ends_from(i, j);
                for (const auto& [mask, edits] : dp[i][j]) {
                    if (match_ok) relax(i + 1, j + 1, mask, edits);
                    for (const Node& end : ends) {
                        // identity composites would be no-op edits; skip
                        if (end.i - i == end.j - j) {
                            bool identical = true;
                            for (size_t k = 0; k < end.i - i && identical; ++k)
                                identical = src[i + k] == hyp[j + k];
                            if (identical) continue;
                        }
                        const int g = matching_gold(i, end.i, j, end.j, mask);
                        const uint64_t next_mask = g >= 0 ? (mask | (uint64_t{1} << g)) : mask;
                        relax(end.i, end.j, next_mask, edits + 1);
                    }
                }
            }
        }

        SentenceM2 best;
        best.gold = gold.size();
        bool have = false;
        size_t best_bits = 0;
        unsigned best_edits = 0;
        uint64_t best_mask = 0;
        for (const auto& [mask, edits] : dp[I][J]) {
            const size_t bits = static_cast<size_t>(__builtin_popcountll(mask));
            if (!have || bits > best_bits || (bits == best_bits && edits < best_edits)) {
                have = true;
                best_bits = bits;
                best_edits = edits;
                best_mask = mask;
            }
        }
        best.matched = best_bits;
        best.proposed = best_edits;
        for (size_t g = 0; g < gold.size(); ++g)
            if (best_mask & (uint64_t{1} << g)) best.matched_gold.push_back(g);
        return best;
    }
};

inline double sentence_f(const SentenceM2& s, double beta) {
    const double p = s.proposed == 0 ? 1.0 : static_cast<double>(s.matched) / static_cast<double>(s.proposed);
    const double r = s.gold == 0 ? 1.0 : static_cast<double>(s.matched) / static_cast<double>(s.gold);
    return f_beta(p, r, beta);
}

}  // namespace m2_detail

/// Scores one sentence against one gold edit set.
inline SentenceM2 m2_score_sentence(const Tokens& src, const Tokens& hyp,
                                    const std::vector<Edit>& gold, size_t max_unchanged = 2) {
    m2_detail::LatticeScorer scorer(src, hyp, gold, max_unchanged);
    return scorer.run();
}

/// MaxMatch evaluation over a corpus. With multiple annotators each
/// sentence is scored against the annotator maximizing that sentence's F
/// (ties to the lowest id) and the chosen counts aggregate globally.
inline M2Report m2_evaluate(const std::vector<Tokens>& sources, const std::vector<Tokens>& hypotheses,
                            const std::vector<AnnotatedSentence>& gold, const M2Options& opt = {}) {
    if (sources.size() != hypotheses.size() || sources.size() != gold.size())
        throw ArgumentError("m2_evaluate: sources, hypotheses and gold must have equal lengths");

    M2Report report;
    report.overall.beta = opt.beta;

    std::map<int, PRF> per_annotator;
    std::set<int> all_annotators;
    for (const auto& g : gold)
        for (const auto& [id, edits] : g.annotators) all_annotators.insert(id);

    for (size_t s = 0; s < sources.size(); ++s) {
        const AnnotatedSentence& ann = gold[s];
        std::vector<int> candidates;
        if (opt.restrict_annotator >= 0) {
            candidates.push_back(opt.restrict_annotator);
        } else if (ann.annotators.empty()) {
            candidates.push_back(0);
        } else {
            for (const auto& [id, edits] : ann.annotators) candidates.push_back(id);
        }

        SentenceM2 chosen;
        double chosen_f = -1.0;
        for (int id : candidates) {
            SentenceM2 result = m2_score_sentence(sources[s], hypotheses[s], ann.gold_edits(id),
                                                  opt.max_unchanged);
            result.annotator = id;
            const double f = m2_detail::sentence_f(result, opt.beta);
            if (f > chosen_f) {
                chosen_f = f;
                chosen = std::move(result);
            }
        }
        report.overall.matched += chosen.matched;
        report.overall.proposed += chosen.proposed;
        report.overall.gold += chosen.gold;

        const std::vector<Edit> chosen_gold = ann.gold_edits(chosen.annotator);
        for (size_t g = 0; g < chosen_gold.size(); ++g) {
            const std::string type = chosen_gold[g].type.empty() ? "?" : chosen_gold[g].type;
            ++report.per_type[type].second;
        }
        for (size_t g : chosen.matched_gold) {
            const std::string type = chosen_gold[g].type.empty() ? "?" : chosen_gold[g].type;
            ++report.per_type[type].first;
        }
        report.sentences.push_back(std::move(chosen));
    }

    if (opt.restrict_annotator < 0 && all_annotators.size() > 1) {
        for (int id : all_annotators) {
            M2Options single = opt;
            single.restrict_annotator = id;
            report.per_annotator[id] = m2_evaluate(sources, hypotheses, gold, single).overall;
        }
    }
    return report;
}

/// Recall per error type from an evaluation report, in [0,1].
inline std::map<std::string, double> per_type_recall(const M2Report& report) {
    std::map<std::string, double> out;
    for (const auto& [type, counts] : report.per_type) {
        const auto& [matched, total] = counts;
        out[type] = total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
    }
    return out;
}

}  // namespace charmend
