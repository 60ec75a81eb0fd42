#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/edit/edit.hpp"

namespace charmend {

/// Corpus-level case-sensitive BLEU-4 on whitespace tokens, scaled to
/// [0, 100]: geometric mean of modified n-gram precisions for n = 1..4
/// with the brevity penalty, no smoothing, so a zero precision at any
/// order yields 0 (matching the reference scoring script).
inline double bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references) {
    if (hypotheses.empty()) throw ArgumentError("bleu: empty corpus");
    if (hypotheses.size() != references.size())
        throw ArgumentError("bleu: hypothesis/reference count mismatch");

    size_t hyp_len = 0, ref_len = 0;
    size_t matches[4] = {0, 0, 0, 0};
    size_t totals[4] = {0, 0, 0, 0};

    for (size_t s = 0; s < hypotheses.size(); ++s) {
        const Tokens hyp = split_whitespace(hypotheses[s]);
        const Tokens ref = split_whitespace(references[s]);
        hyp_len += hyp.size();
        ref_len += ref.size();
        for (size_t n = 1; n <= 4; ++n) {
            if (hyp.size() < n) continue;
            totals[n - 1] += hyp.size() - n + 1;
            if (ref.size() < n) continue;
            std::map<Tokens, size_t> ref_counts;
            for (size_t i = 0; i + n <= ref.size(); ++i)
                ++ref_counts[Tokens(ref.begin() + static_cast<long>(i), ref.begin() + static_cast<long>(i + n))];
            for (size_t i = 0; i + n <= hyp.size(); ++i) {
                Tokens g(hyp.begin() + static_cast<long>(i), hyp.begin() + static_cast<long>(i + n));
                auto it = ref_counts.find(g);
                if (it != ref_counts.end() && it->second > 0) {
                    --it->second;
                    ++matches[n - 1];
                }
            }
        }
    }

    double log_sum = 0.0;
    for (size_t n = 0; n < 4; ++n) {
        if (totals[n] == 0 || matches[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
    }
    if (hyp_len == 0) return 0.0;
    const double bp = hyp_len >= ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_sum / 4.0);
}

}  // namespace charmend
