#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

constexpr const char* kBos = "<s>";
constexpr const char* kEosWord = "</s>";
constexpr const char* kUnkWord = "<unk>";

using NGram = std::vector<std::string>;

struct NGramHash {
    size_t operator()(const NGram& g) const {
        size_t h = 1469598103934665603ull;
        for (const auto& w : g) {
            for (char c : w) {
                h ^= static_cast<unsigned char>(c);
                h *= 1099511628211ull;
            }
            h ^= 0x1f;  // separator so {"ab"} != {"a","b"}
            h *= 1099511628211ull;
        }
        return h;
    }
};

template <typename V>
using NGramMap = std::unordered_map<NGram, V, NGramHash>;

/// Raw n-gram counts for orders 1..max plus derived continuation counts.
/// Each sentence is padded with order-1 leading <s> and one trailing </s>;
/// windows that end inside the leading padding are not counted, so <s>
/// never receives a unigram count of its own.
struct CountTable {
    size_t order = 0;
    std::vector<NGramMap<uint64_t>> counts;        // counts[k-1]: raw k-gram counts
    std::vector<NGramMap<uint64_t>> continuation;  // continuation[k-1]: distinct left extensions
    size_t sentence_count = 0;
};

inline CountTable count_ngrams(const std::vector<Tokens>& sentences, size_t order) {
    if (order < 1) throw ArgumentError("count_ngrams: order must be >= 1");
    CountTable table;
    table.order = order;
    table.counts.resize(order);
    table.continuation.resize(order);
    table.sentence_count = sentences.size();

    for (const auto& sent : sentences) {
        Tokens padded;
        padded.reserve(sent.size() + order);
        for (size_t i = 0; i + 1 < order; ++i) padded.push_back(kBos);
        for (const auto& w : sent) padded.push_back(w);
        padded.push_back(kEosWord);
        const size_t pad = order - 1;
        for (size_t end = pad; end < padded.size(); ++end) {  // windows ending at real tokens
            for (size_t k = 1; k <= order && k <= end + 1; ++k) {
                NGram g(padded.begin() + static_cast<long>(end + 1 - k),
                        padded.begin() + static_cast<long>(end + 1));
                ++table.counts[k - 1][g];
            }
        }
    }

    // continuation[k][g] = |{v : count_{k+1}(v g) > 0}|
    for (size_t k = 1; k < order; ++k) {
        for (const auto& [gram, c] : table.counts[k]) {
            NGram suffix(gram.begin() + 1, gram.end());
            ++table.continuation[k - 1][suffix];
        }
    }
    return table;
}

/// Backoff n-gram model in log10, ARPA-compatible. Probabilities of stored
/// n-grams are fully interpolated Kneser-Ney values; the backoff weight of
/// a context is its interpolation weight, so conditional distributions
/// expanded over the vocabulary sum to one exactly.
class NGramModel {
public:
    struct Entry {
        double logprob = 0.0;        // log10
        double backoff = 0.0;        // log10; 0 means no mass reserved
        bool has_backoff = false;
    };

    size_t order = 0;
    std::vector<NGramMap<Entry>> tables;  // tables[k-1]: stored k-grams
    std::vector<std::string> vocabulary;  // unigram inventory in storage order

    bool contains(const NGram& g) const {
        const size_t k = g.size();
        if (k == 0 || k > order) return false;
        return tables[k - 1].count(g) != 0;
    }

    std::string normalize_word(const std::string& w) const {
        NGram probe{w};
        return tables[0].count(probe) ? w : std::string(kUnkWord);
    }

    /// log10 P(word | context), standard backoff recursion. The context is
    /// truncated to the final order-1 words; OOV words map to <unk>.
    double logprob(const std::string& word, const Tokens& context) const {
        NGram ctx;
        const size_t max_ctx = order - 1;
        const size_t start = context.size() > max_ctx ? context.size() - max_ctx : 0;
        for (size_t i = start; i < context.size(); ++i) ctx.push_back(normalize_word(context[i]));
        return lookup(normalize_word(word), ctx);
    }

    /// Natural-log convenience for the decoder fusion path.
    double logprob_ln(const std::string& word, const Tokens& context) const {
        return logprob(word, context) * std::log(10.0);
    }

    /// log10 probability of a full sentence including the </s> event, with
    /// order-1 <s> padding at the front to mirror how counting pads.
    double sentence_logprob(const Tokens& sentence) const {
        Tokens context;
        for (size_t i = 0; i + 1 < order; ++i) context.push_back(kBos);
        double total = 0.0;
        for (const auto& w : sentence) {
            total += logprob(w, context);
            context.push_back(w);
        }
        total += logprob(kEosWord, context);
        return total;
    }

private:
    double lookup(const std::string& word, NGram ctx) const {
        NGram full = ctx;
        full.push_back(word);
        const auto& table = tables[full.size() - 1];
        auto it = table.find(full);
        if (it != table.end()) return it->second.logprob;
        if (ctx.empty()) {
            // closed vocabulary: every known word has a unigram entry, and
            // unknowns were mapped to <unk> already
            auto uit = tables[0].find(NGram{kUnkWord});
            return uit == tables[0].end() ? -99.0 : uit->second.logprob;
        }
        double bo = 0.0;
        const auto& ctx_table = tables[ctx.size() - 1];
        auto cit = ctx_table.find(ctx);
        if (cit != ctx_table.end() && cit->second.has_backoff) bo = cit->second.backoff;
        ctx.erase(ctx.begin());
        return bo + lookup(word, std::move(ctx));
    }
};

/// Discount schedule: a single fixed D, or the modified-KN triple
/// (D1, D2, D3+) picked by the n-gram's adjusted count.
struct KnDiscount {
    double d1 = 0.75, d2 = 0.75, d3 = 0.75;

    static KnDiscount fixed(double d) { return {d, d, d}; }

    double of(uint64_t count) const { return count >= 3 ? d3 : count == 2 ? d2 : d1; }
};

namespace lm_detail {

/// Count-of-count discounts (Chen & Goodman): Y = n1/(n1+2 n2),
/// D_i = i - (i+1) Y n_{i+1}/n_i, clamped to sane values and falling back
/// to 0.75 when the corpus is too small to estimate them.
inline KnDiscount modified_discounts(const NGramMap<uint64_t>& counts) {
    uint64_t n[5] = {0, 0, 0, 0, 0};
    for (const auto& [gram, c] : counts)
        if (c >= 1 && c <= 4) ++n[c];
    KnDiscount d;
    if (n[1] == 0 || n[2] == 0) return d;
    const double y = static_cast<double>(n[1]) / (static_cast<double>(n[1]) + 2.0 * n[2]);
    auto pick = [&](int i, uint64_t ni, uint64_t ni1, double fallback) {
        if (ni == 0) return fallback;
        const double v = i - (i + 1) * y * static_cast<double>(ni1) / static_cast<double>(ni);
        return (v > 0.0 && v < static_cast<double>(i)) ? v : fallback;
    };
    d.d1 = pick(1, n[1], n[2], d.d1);
    d.d2 = pick(2, n[2], n[3], std::min(1.5, d.d1 + 0.5));
    d.d3 = pick(3, n[3], n[4], std::min(2.0, d.d2 + 0.5));
    return d;
}

}  // namespace lm_detail

/// Interpolated Kneser-Ney over a per-order discount schedule.
///
/// Adjusted counts: raw counts at the highest order; continuation counts
/// at lower orders, except that n-grams beginning with <s> keep their raw
/// counts (nothing can precede <s>, so their continuation count would be
/// structurally zero while they still carry real sentence-initial mass).
/// The unigram level interpolates with the uniform distribution over the
/// closed vocabulary, which is what gives <unk> (and <s>) a finite floor.
inline std::vector<NGramMap<uint64_t>> kn_adjusted_counts(const CountTable& table) {
    const size_t N = table.order;
    std::vector<NGramMap<uint64_t>> adj(N);
    adj[N - 1] = table.counts[N - 1];
    for (size_t k = 1; k < N; ++k) {
        for (const auto& [gram, c] : table.counts[k - 1]) {
            if (gram.front() == kBos) {
                if (c > 0) adj[k - 1][gram] = c;
            } else {
                auto it = table.continuation[k - 1].find(gram);
                if (it != table.continuation[k - 1].end() && it->second > 0) adj[k - 1][gram] = it->second;
            }
        }
    }
    return adj;
}

inline NGramModel estimate_kn(const CountTable& table, const std::vector<KnDiscount>& discounts) {
    const size_t N = table.order;
    if (discounts.size() != N) throw ArgumentError("estimate_kn: need one discount set per order");

    std::vector<NGramMap<uint64_t>> adj = kn_adjusted_counts(table);

    // closed vocabulary: every unigram event plus the three markers
    std::vector<std::string> vocab;
    {
        std::map<std::string, bool> seen;
        for (const auto& [gram, c] : table.counts[0]) seen[gram[0]] = true;
        seen[kBos] = true;
        seen[kEosWord] = true;
        seen[kUnkWord] = true;
        for (const auto& [w, _] : seen) vocab.push_back(w);
    }

    // storage sets: counted n-grams, closed so that the context of every
    // stored (k+1)-gram is stored (it must carry the backoff weight) and
    // the suffix is stored (the interpolation recursion reads it)
    std::vector<NGramMap<char>> stored(N);
    for (const auto& w : vocab) stored[0][NGram{w}] = 1;
    for (size_t k = 2; k <= N; ++k)
        for (const auto& [gram, c] : adj[k - 1]) stored[k - 1][gram] = 1;
    for (size_t k = N; k >= 2; --k) {
        for (const auto& [gram, flag] : stored[k - 1]) {
            stored[k - 2].emplace(NGram(gram.begin(), gram.end() - 1), 1);
            stored[k - 2].emplace(NGram(gram.begin() + 1, gram.end()), 1);
        }
    }

    // context totals and total reserved discount mass at each order
    std::vector<NGramMap<uint64_t>> ctx_total(N);
    std::vector<NGramMap<double>> ctx_disc(N);
    for (size_t k = 1; k <= N; ++k) {
        for (const auto& [gram, c] : adj[k - 1]) {
            NGram ctx(gram.begin(), gram.end() - 1);
            ctx_total[k - 1][ctx] += c;
            ctx_disc[k - 1][ctx] += discounts[k - 1].of(c);
        }
    }

    NGramModel model;
    model.order = N;
    model.tables.resize(N);
    model.vocabulary = vocab;

    // unigram level: continuation counts interpolated with uniform
    {
        uint64_t total = 0;
        double disc_mass = 0.0;
        auto tit = ctx_total[0].find(NGram{});
        auto dit = ctx_disc[0].find(NGram{});
        if (tit != ctx_total[0].end()) total = tit->second;
        if (dit != ctx_disc[0].end()) disc_mass = dit->second;
        const double uniform = 1.0 / static_cast<double>(vocab.size());
        for (const auto& w : vocab) {
            uint64_t c = 0;
            auto it = adj[0].find(NGram{w});
            if (it != adj[0].end()) c = it->second;
            double p;
            if (total == 0) {
                p = uniform;
            } else {
                const double gamma = disc_mass / static_cast<double>(total);
                p = std::max(static_cast<double>(c) - discounts[0].of(c), 0.0) /
                        static_cast<double>(total) +
                    gamma * uniform;
            }
            model.tables[0][NGram{w}].logprob = std::log10(p);
        }
    }

    // higher orders, bottom up; a stored n-gram with zero adjusted count is
    // transparent (its probability equals the backoff product)
    for (size_t k = 2; k <= N; ++k) {
        for (const auto& [gram, flag] : stored[k - 1]) {
            NGram ctx(gram.begin(), gram.end() - 1);
            const std::string& w = gram.back();
            uint64_t c = 0;
            auto ait = adj[k - 1].find(gram);
            if (ait != adj[k - 1].end()) c = ait->second;
            uint64_t total = 0;
            double disc_mass = 0.0;
            auto tit = ctx_total[k - 1].find(ctx);
            if (tit != ctx_total[k - 1].end()) total = tit->second;
            auto dit = ctx_disc[k - 1].find(ctx);
            if (dit != ctx_disc[k - 1].end()) disc_mass = dit->second;

            NGram shorter(gram.begin() + 1, gram.end() - 1);
            NGram lower = shorter;
            lower.push_back(w);
            double p_lower = std::pow(10.0, model.tables[lower.size() - 1].at(lower).logprob);

            double p;
            if (total == 0) {
                p = p_lower;  // context never extended: pure backoff
            } else {
                const double gamma = disc_mass / static_cast<double>(total);
                p = std::max(static_cast<double>(c) - discounts[k - 1].of(c), 0.0) /
                        static_cast<double>(total) +
                    gamma * p_lower;
            }
            model.tables[k - 1][gram].logprob = std::log10(p);
        }
    }

    // backoff weights: the reserved discount mass of every extended context
    for (size_t k = 1; k < N; ++k) {
        for (auto& [gram, entry] : model.tables[k - 1]) {
            auto tit = ctx_total[k].find(gram);
            if (tit == ctx_total[k].end() || tit->second == 0) continue;
            const double gamma = ctx_disc[k].at(gram) / static_cast<double>(tit->second);
            entry.backoff = std::log10(gamma);
            entry.has_backoff = true;
        }
    }
    return model;
}

/// Single fixed discount for every order: the default estimator.
inline NGramModel estimate_kn(const CountTable& table, double discount = 0.75) {
    if (!(discount > 0.0 && discount < 1.0))
        throw ArgumentError("estimate_kn: discount must lie in (0,1), got " + std::to_string(discount));
    return estimate_kn(table, std::vector<KnDiscount>(table.order, KnDiscount::fixed(discount)));
}

/// Modified Kneser-Ney: per-order (D1, D2, D3+) derived from the
/// count-of-counts of the adjusted counts.
inline NGramModel estimate_kn_modified(const CountTable& table) {
    const std::vector<NGramMap<uint64_t>> adj = kn_adjusted_counts(table);
    std::vector<KnDiscount> discounts;
    discounts.reserve(table.order);
    for (size_t k = 1; k <= table.order; ++k)
        discounts.push_back(lm_detail::modified_discounts(adj[k - 1]));
    return estimate_kn(table, discounts);
}

/// Convenience: count and estimate from whitespace-tokenized lines.
inline NGramModel build_lm(const std::vector<std::string>& lines, size_t order,
                           double discount = 0.75, bool modified = false) {
    std::vector<Tokens> sentences;
    sentences.reserve(lines.size());
    for (const auto& line : lines) {
        Tokens toks = split_whitespace(line);
        if (!toks.empty()) sentences.push_back(std::move(toks));
    }
    CountTable counts = count_ngrams(sentences, order);
    return modified ? estimate_kn_modified(counts) : estimate_kn(counts, discount);
}

}  // namespace charmend
