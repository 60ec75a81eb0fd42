#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/core/rng.hpp"
#include "charmend/text/corpus.hpp"
#include "charmend/text/vocab.hpp"

namespace charmend {

/// Padded id matrices for one minibatch. Padding uses the eos id; the loss
/// masks padded target positions via the recorded true lengths.
struct Batch {
    std::vector<std::vector<int>> source;  // rows: chars + eos, right-padded
    std::vector<std::vector<int>> target;  // rows: sos + chars + eos, right-padded
    std::vector<size_t> source_len;        // true lengths, <= row width
    std::vector<size_t> target_len;

    size_t size() const { return source.size(); }

    std::vector<int> source_row(size_t i) const {
        return {source[i].begin(), source[i].begin() + static_cast<long>(source_len[i])};
    }
    std::vector<int> target_row(size_t i) const {
        return {target[i].begin(), target[i].begin() + static_cast<long>(target_len[i])};
    }
};

/// Right-pads with eos until the length is a multiple of 2^(layers-1),
/// which makes every halving step of the pyramidal encoder exact.
inline std::vector<int> pad_for_pyramid(std::vector<int> ids, size_t encoder_layers) {
    const size_t factor = size_t{1} << (encoder_layers - 1);
    while (ids.size() % factor != 0) ids.push_back(CharVocab::kEos);
    return ids;
}

/// Buckets pairs by source length (to limit padding waste), shuffles pair
/// and batch order with the caller's rng, and wraps targets in sos/eos.
/// Every pair appears in exactly one batch.
inline std::vector<Batch> make_batches(const ParallelCorpus& corpus, size_t batch_size, Rng& rng) {
    if (corpus.empty()) throw ArgumentError("make_batches: empty corpus");
    if (batch_size < 1) throw ArgumentError("make_batches: batch_size must be >= 1");

    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return corpus.pairs[a].first.size() < corpus.pairs[b].first.size();
    });

    std::vector<std::vector<size_t>> groups;
    for (size_t i = 0; i < order.size(); i += batch_size) {
        size_t end = std::min(order.size(), i + batch_size);
        groups.emplace_back(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(end));
    }
    rng.shuffle(groups);

    std::vector<Batch> batches;
    batches.reserve(groups.size());
    for (const auto& group : groups) {
        Batch b;
        size_t max_src = 0, max_tgt = 0;
        for (size_t idx : group) {
            const auto& [src, tgt] = corpus.pairs[idx];
            std::vector<int> s = CharVocab::encode(src, /*add_eos=*/true);
            std::vector<int> t;
            t.push_back(CharVocab::kSos);
            for (int id : CharVocab::encode(tgt, /*add_eos=*/true)) t.push_back(id);
            max_src = std::max(max_src, s.size());
            max_tgt = std::max(max_tgt, t.size());
            b.source_len.push_back(s.size());
            b.target_len.push_back(t.size());
            b.source.push_back(std::move(s));
            b.target.push_back(std::move(t));
        }
        for (auto& row : b.source) row.resize(max_src, CharVocab::kEos);
        for (auto& row : b.target) row.resize(max_tgt, CharVocab::kEos);
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace charmend
