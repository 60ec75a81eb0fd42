#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/lm/ngram.hpp"
#include "charmend/model/seq2seq.hpp"
#include "charmend/text/vocab.hpp"

namespace charmend {

struct DecodeConfig {
    double lambda = 0.3;          // LM weight; 0 disables all LM queries
    size_t beam_width = 64;
    size_t nbest = 1;
    size_t max_len = 0;           // 0: 1.5 * source chars + 10
    bool normalize_during_search = true;  // word-count normalization while pruning
    size_t threads = 1;           // sentence-level parallelism in correct_corpus

    void validate() const {
        if (beam_width < 1) throw ArgumentError("decode: beam width must be >= 1");
        if (lambda < 0.0) throw ArgumentError("decode: lambda must be >= 0");
    }

    size_t effective_max_len(size_t source_chars) const {
        return max_len ? max_len : source_chars + source_chars / 2 + 10;
    }
};

/// A beam entry: emitted characters, the decoder state to extend from,
/// separate network and LM log-probabilities (natural log), the number of
/// word boundaries scored so far, and the unfinished word buffer.
template <typename State>
struct Hypothesis {
    std::vector<int> ids;         // emitted symbols, excluding sos and eos
    State state;
    double logp_nn = 0.0;
    double logp_lm = 0.0;
    size_t word_count = 0;
    std::string word_buffer;      // characters since the last boundary
    Tokens words;                 // completed words, oldest first
    bool finished = false;
    bool truncated = false;
    int prev_id = CharVocab::kSos;

    std::string text() const { return CharVocab::decode(ids); }
};

/// (logP_NN + lambda logP_LM) / max(|y|, 1): the beam ranking score.
inline double hyp_score(double logp_nn, double logp_lm, double lambda, size_t word_count) {
    return (logp_nn + lambda * logp_lm) / static_cast<double>(std::max<size_t>(word_count, 1));
}

template <typename State>
inline double hyp_score(const Hypothesis<State>& h, double lambda) {
    return hyp_score(h.logp_nn, h.logp_lm, lambda, h.word_count);
}

namespace detail {

/// LM context for the next word event: the previous order-1 completed
/// words, <s>-padded at sentence start.
inline Tokens lm_context(const NGramModel& lm, const Tokens& words) {
    const size_t need = lm.order > 0 ? lm.order - 1 : 0;
    Tokens ctx;
    ctx.reserve(need);
    for (size_t i = words.size(); i < need; ++i) ctx.push_back(kBos);
    const size_t start = words.size() > need ? words.size() - need : 0;
    for (size_t i = start; i < words.size(); ++i) ctx.push_back(words[i]);
    return ctx;
}

/// Word-boundary bookkeeping shared by beam and greedy paths: scores the
/// completed word (and </s> for eos) against the LM when one is in play.
template <typename State>
inline void apply_boundary(Hypothesis<State>& h, int symbol, const NGramModel* lm, double lambda) {
    const bool use_lm = lm != nullptr && lambda > 0.0;
    if (!h.word_buffer.empty()) {
        if (use_lm) h.logp_lm += lm->logprob_ln(h.word_buffer, lm_context(*lm, h.words));
        h.words.push_back(h.word_buffer);
        h.word_buffer.clear();
        ++h.word_count;
    }
    if (symbol == CharVocab::kEos && use_lm)
        h.logp_lm += lm->logprob_ln(kEosWord, lm_context(*lm, h.words));
}

}  // namespace detail

/// Character-level beam search with word-level LM shallow fusion. Expands
/// every live hypothesis over all vocabulary symbols, scores completed
/// words (space / eos boundaries) against the LM, prunes by hyp_score,
/// freezes hypotheses that emit eos, and returns the n-best by final
/// score, ties broken lexicographically by output.
///
/// Stepper contract: `State make_state()` and
/// `void advance(int prev_id, const State& in, State& out, std::vector<double>& probs)`.
template <typename Stepper>
std::vector<Hypothesis<typename Stepper::State>> beam_decode(const Stepper& stepper,
                                                             const NGramModel* lm,
                                                             size_t source_chars,
                                                             const DecodeConfig& cfg) {
    using State = typename Stepper::State;
    using Hyp = Hypothesis<State>;
    cfg.validate();
    const size_t V = CharVocab::kSize;
    const size_t max_len = cfg.effective_max_len(source_chars);

    auto final_score = [&](const Hyp& h) { return hyp_score(h, cfg.lambda); };
    auto prune_score = [&](const Hyp& h) {
        if (cfg.normalize_during_search) return hyp_score(h, cfg.lambda);
        return h.logp_nn + cfg.lambda * h.logp_lm;
    };
    auto better = [&](const Hyp& a, const Hyp& b, double sa, double sb) {
        if (sa != sb) return sa > sb;
        return a.ids < b.ids;
    };

    std::vector<Hyp> beam(1);
    beam[0].state = stepper.make_state();

    std::vector<double> probs;
    State next_state = stepper.make_state();
    for (size_t step = 0; step < max_len; ++step) {
        bool any_live = false;
        for (const auto& h : beam)
            if (!h.finished) {
                any_live = true;
                break;
            }
        if (!any_live) break;

        std::vector<Hyp> candidates;
        candidates.reserve(beam.size() * V);
        for (auto& h : beam) {
            if (h.finished) {
                candidates.push_back(std::move(h));
                continue;
            }
            stepper.advance(h.prev_id, h.state, next_state, probs);
            for (size_t sym = 0; sym < V; ++sym) {
                Hyp ext = h;
                ext.state = next_state;
                ext.prev_id = static_cast<int>(sym);
                ext.logp_nn += std::log(std::max(probs[sym], 1e-300));
                if (sym == CharVocab::kSpace || sym == CharVocab::kEos) {
                    detail::apply_boundary(ext, static_cast<int>(sym), lm, cfg.lambda);
                    if (sym == CharVocab::kEos)
                        ext.finished = true;
                    else
                        ext.ids.push_back(static_cast<int>(sym));
                } else {
                    ext.ids.push_back(static_cast<int>(sym));
                    ext.word_buffer.push_back(CharVocab::decode_symbol(static_cast<int>(sym))[0]);
                }
                candidates.push_back(std::move(ext));
            }
        }

        const size_t keep = std::min(cfg.beam_width, candidates.size());
        std::vector<double> scores(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i) scores[i] = prune_score(candidates[i]);
        std::vector<size_t> order(candidates.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return better(candidates[a], candidates[b], scores[a], scores[b]);
        });
        std::vector<Hyp> next;
        next.reserve(keep);
        for (size_t i = 0; i < keep; ++i) next.push_back(std::move(candidates[order[i]]));
        beam = std::move(next);
    }

    for (auto& h : beam) {
        if (!h.finished) {
            h.truncated = true;
            detail::apply_boundary(h, CharVocab::kEos, lm, cfg.lambda);
        }
    }
    std::stable_sort(beam.begin(), beam.end(), [&](const Hyp& a, const Hyp& b) {
        return better(a, b, final_score(a), final_score(b));
    });
    if (beam.size() > cfg.nbest) beam.resize(std::max<size_t>(cfg.nbest, 1));
    return beam;
}

/// Single-hypothesis decode choosing, at every step, the extension the beam
/// ranking would keep. Written independently of beam_decode so the two can
/// be checked against each other; beam width 1 must match it symbol for
/// symbol.
template <typename Stepper>
Hypothesis<typename Stepper::State> greedy_decode(const Stepper& stepper, const NGramModel* lm,
                                                  size_t source_chars, const DecodeConfig& cfg) {
    using Hyp = Hypothesis<typename Stepper::State>;
    const size_t V = CharVocab::kSize;
    const size_t max_len = cfg.effective_max_len(source_chars);

    Hyp h;
    h.state = stepper.make_state();
    std::vector<double> probs;
    auto next_state = stepper.make_state();
    for (size_t step = 0; step < max_len && !h.finished; ++step) {
        stepper.advance(h.prev_id, h.state, next_state, probs);
        Hyp best;
        double best_score = 0.0;
        bool have = false;
        for (size_t sym = 0; sym < V; ++sym) {
            Hyp ext = h;
            ext.state = next_state;
            ext.prev_id = static_cast<int>(sym);
            ext.logp_nn += std::log(std::max(probs[sym], 1e-300));
            if (sym == CharVocab::kSpace || sym == CharVocab::kEos) {
                detail::apply_boundary(ext, static_cast<int>(sym), lm, cfg.lambda);
                if (sym == CharVocab::kEos)
                    ext.finished = true;
                else
                    ext.ids.push_back(static_cast<int>(sym));
            } else {
                ext.ids.push_back(static_cast<int>(sym));
                ext.word_buffer.push_back(CharVocab::decode_symbol(static_cast<int>(sym))[0]);
            }
            const double score = cfg.normalize_during_search
                                     ? hyp_score(ext, cfg.lambda)
                                     : ext.logp_nn + cfg.lambda * ext.logp_lm;
            if (!have || score > best_score || (score == best_score && ext.ids < best.ids)) {
                best = std::move(ext);
                best_score = score;
                have = true;
            }
        }
        h = std::move(best);
    }
    if (!h.finished) {
        h.truncated = true;
        detail::apply_boundary(h, CharVocab::kEos, lm, cfg.lambda);
    }
    return h;
}

/// Adapts a trained model to the stepper contract: encodes once, then
/// advances the decoder stack per symbol. Read-only over the model.
class Seq2SeqStepper {
public:
    using State = Seq2Seq::DecodeState;

    Seq2SeqStepper(const Seq2Seq& model, const std::vector<int>& source_ids)
        : model_(model) {
        Rng unused(0);
        enc_ = model.encode(source_ids, /*training=*/false, unused);
        att_ = model.prepare_attention(enc_);
    }

    State make_state() const { return model_.initial_state(); }

    void advance(int prev_id, const State& in, State& out, std::vector<double>& probs) const {
        out = in;
        Tensor p = model_.decode_step(prev_id, out, enc_, att_);
        probs.assign(p.data(), p.data() + p.numel());
    }

private:
    const Seq2Seq& model_;
    EncodedSource enc_;
    Seq2Seq::AttentionCache att_;
};

struct CorrectionResult {
    std::vector<std::string> outputs;           // one per input, source echoed on failure
    std::vector<std::pair<size_t, std::string>> failures;
};

/// Decodes a list of sentences, order preserving. Failures never abort the
/// batch; the offending source passes through unchanged and is recorded.
/// Output is independent of the thread count.
inline CorrectionResult correct_corpus(const Seq2Seq& model, const NGramModel* lm,
                                       const std::vector<std::string>& sentences,
                                       const DecodeConfig& cfg) {
    CorrectionResult result;
    result.outputs.resize(sentences.size());
    std::vector<std::pair<size_t, std::string>> failures;

    auto decode_one = [&](size_t idx) -> std::string {
        const std::string& src = sentences[idx];
        std::vector<int> ids = CharVocab::encode(src, /*add_eos=*/true);
        Seq2SeqStepper stepper(model, ids);
        auto hyps = beam_decode(stepper, lm, src.size(), cfg);
        return hyps.empty() ? src : hyps.front().text();
    };

    const size_t threads = std::max<size_t>(1, cfg.threads);
    if (threads == 1 || sentences.size() < 2) {
        for (size_t i = 0; i < sentences.size(); ++i) {
            try {
                result.outputs[i] = decode_one(i);
            } catch (const std::exception& e) {
                result.outputs[i] = sentences[i];
                result.failures.emplace_back(i, e.what());
            }
        }
        return result;
    }

    std::vector<std::vector<std::pair<size_t, std::string>>> fail_per_thread(threads);
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (size_t i = t; i < sentences.size(); i += threads) {
                try {
                    result.outputs[i] = decode_one(i);
                } catch (const std::exception& e) {
                    result.outputs[i] = sentences[i];
                    fail_per_thread[t].emplace_back(i, e.what());
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& f : fail_per_thread)
        for (auto& item : f) result.failures.push_back(std::move(item));
    std::sort(result.failures.begin(), result.failures.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return result;
}

}  // namespace charmend
