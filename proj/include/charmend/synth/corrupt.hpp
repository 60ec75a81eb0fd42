#pragma once

#include <string>
#include <vector>

#include "charmend/core/rng.hpp"
#include "charmend/synth/stats.hpp"
#include "charmend/synth/tagger.hpp"

namespace charmend {

namespace synth_detail {

inline std::string sample_insert_choice(const ErrorDistribution& dist, Rng& rng) {
    if (dist.insert_choice.empty()) return "the";
    double u = rng.uniform();
    double cum = 0.0;
    for (const auto& [det, p] : dist.insert_choice) {
        cum += p;
        if (u < cum) return det;
    }
    return dist.insert_choice.rbegin()->first;
}

/// One left-to-right corruption pass. Returns true when anything changed.
inline bool corrupt_pass(const TaggedSentence& tagged, const ErrorDistribution& dist, Rng& rng,
                         Tokens& out) {
    out.clear();
    bool changed = false;
    for (size_t i = 0; i < tagged.size(); ++i) {
        const std::string& token = tagged.tokens[i];
        if (tagged.is_np_start[i] && rng.bernoulli(dist.p_insert)) {
            out.push_back(sample_insert_choice(dist, rng));
            changed = true;
        }
        if (tagged.is_determiner[i]) {
            const double u = rng.uniform();
            if (u < dist.p_delete) {
                changed = true;  // drop the determiner
                continue;
            }
            double cum = dist.p_delete;
            auto row = dist.confusion.find(tagger_detail::lower(token));
            bool replaced = false;
            if (row != dist.confusion.end()) {
                for (const auto& [written, p] : row->second) {
                    cum += p;
                    if (u < cum) {
                        out.push_back(written);
                        changed = changed || written != token;
                        replaced = true;
                        break;
                    }
                }
            }
            if (!replaced) out.push_back(token);
            continue;
        }
        if (tagged.is_noun_singular[i] && rng.bernoulli(dist.p_to_plural)) {
            const std::string flipped = pluralize(token);
            out.push_back(flipped);
            changed = changed || flipped != token;
            continue;
        }
        if (tagged.is_noun_plural[i] && rng.bernoulli(dist.p_to_singular)) {
            const std::string flipped = singularize(token);
            out.push_back(flipped);
            changed = changed || flipped != token;
            continue;
        }
        out.push_back(token);
    }
    return changed;
}

}  // namespace synth_detail

/// Runs two independent corruption passes over a tagged sentence; passes
/// that produced no change are dropped, so the result holds up to two
/// corrupted variants. Only flagged positions can change.
inline std::vector<Tokens> corrupt(const TaggedSentence& gold, const ErrorDistribution& dist, Rng& rng) {
    std::vector<Tokens> out;
    for (int pass = 0; pass < 2; ++pass) {
        Tokens corrupted;
        if (synth_detail::corrupt_pass(gold, dist, rng, corrupted)) out.push_back(std::move(corrupted));
    }
    return out;
}

/// Corrupts every sentence with a per-sentence derived seed so the output
/// is reproducible and independent of any parallel scheduling.
inline std::vector<std::pair<Tokens, Tokens>> corrupt_corpus(
    const std::vector<TaggedSentence>& sentences, const ErrorDistribution& dist, uint64_t seed) {
    std::vector<std::pair<Tokens, Tokens>> pairs;  // (corrupted, gold)
    for (size_t i = 0; i < sentences.size(); ++i) {
        Rng rng(derive_seed(seed, "synth:" + std::to_string(i)));
        for (Tokens& corrupted : corrupt(sentences[i], dist, rng))
            pairs.emplace_back(std::move(corrupted), sentences[i].tokens);
    }
    return pairs;
}

inline std::vector<std::pair<Tokens, Tokens>> corrupt_corpus(const std::vector<Tokens>& sentences,
                                                             const ErrorDistribution& dist,
                                                             uint64_t seed) {
    std::vector<TaggedSentence> tagged;
    tagged.reserve(sentences.size());
    for (const Tokens& s : sentences) tagged.push_back(tag_heuristic(s));
    return corrupt_corpus(tagged, dist, seed);
}

}  // namespace charmend
