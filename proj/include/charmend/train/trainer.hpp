#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "charmend/core/rng.hpp"
#include "charmend/model/seq2seq.hpp"
#include "charmend/text/batch.hpp"
#include "charmend/text/corpus.hpp"
#include "charmend/train/checkpoint.hpp"

namespace charmend {

struct TrainConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    size_t batch_size = 128;
    size_t max_epochs = 40;
    uint64_t seed = 1;
    std::string checkpoint_dir;  // one file per epoch plus best.ckpt
    double grad_clip = 0.0;      // global max norm; 0 disables clipping
    std::ostream* log = nullptr;
    double stop_at_accuracy = 0.0;  // early stop once teacher-forced dev accuracy reaches this
};

struct EpochStats {
    size_t epoch = 0;
    double train_loss = 0.0;  // mean per-sequence loss
    double dev_perplexity = 0.0;
    std::string checkpoint_path;
};

struct TrainResult {
    std::vector<EpochStats> epochs;
    size_t best_epoch = 0;
    double best_perplexity = 0.0;
    std::string best_path;
};

/// exp(total cross entropy / total predicted characters), teacher forced,
/// dropout off. A uniform model scores exactly the vocabulary size.
inline double perplexity(const Seq2Seq& model, const ParallelCorpus& corpus) {
    if (corpus.empty()) throw ArgumentError("perplexity: empty corpus");
    Rng unused(0);
    double total = 0.0;
    size_t chars = 0;
    for (const auto& [src, tgt] : corpus.pairs) {
        std::vector<int> s = CharVocab::encode(src, true);
        std::vector<int> t{CharVocab::kSos};
        for (int id : CharVocab::encode(tgt, true)) t.push_back(id);
        total += model.sequence_loss(s, t, /*training=*/false, unused);
        chars += t.size() - 1;
    }
    return std::exp(total / static_cast<double>(chars));
}

/// Fraction of teacher-forced positions whose argmax equals the target.
inline double char_accuracy(const Seq2Seq& model, const ParallelCorpus& corpus) {
    if (corpus.empty()) throw ArgumentError("char_accuracy: empty corpus");
    Rng unused(0);
    size_t hits = 0, total = 0;
    for (const auto& [src, tgt] : corpus.pairs) {
        std::vector<int> s = CharVocab::encode(src, true);
        std::vector<int> t{CharVocab::kSos};
        for (int id : CharVocab::encode(tgt, true)) t.push_back(id);
        EncodedSource enc = model.encode(s, false, unused);
        Seq2Seq::AttentionCache att = model.prepare_attention(enc);
        Seq2Seq::DecodeState state = model.initial_state();
        for (size_t i = 0; i + 1 < t.size(); ++i) {
            Tensor probs = model.decode_step(t[i], state, enc, att);
            size_t best = 0;
            for (size_t v = 1; v < probs.numel(); ++v)
                if (probs[v] > probs[best]) best = v;
            if (static_cast<int>(best) == t[i + 1]) ++hits;
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

namespace detail {

inline void accumulate_grads(GradMap& into, const GradMap& from) {
    for (auto& [name, g] : into) {
        const Tensor& src = from.at(name);
        for (size_t i = 0; i < g.numel(); ++i) g[i] += src[i];
    }
}

inline void scale_grads(GradMap& grads, double factor) {
    for (auto& [name, g] : grads)
        for (size_t i = 0; i < g.numel(); ++i) g[i] *= factor;
}

inline void clip_grads(GradMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) scale_grads(grads, max_norm / norm);
}

}  // namespace detail

/// Epoch loop with Adam, per-epoch dev perplexity, per-epoch checkpoints,
/// and lowest-perplexity model selection. Deterministic under the seed:
/// identical runs produce byte-identical checkpoints.
inline TrainResult train(Seq2Seq& model, const ParallelCorpus& train_corpus,
                         const ParallelCorpus& dev_corpus, const TrainConfig& cfg) {
    if (train_corpus.empty() || dev_corpus.empty())
        throw ArgumentError("train: corpora must be nonempty");
    if (cfg.checkpoint_dir.empty()) throw ArgumentError("train: checkpoint_dir required");
    std::filesystem::create_directories(cfg.checkpoint_dir);

    Rng rng(derive_seed(cfg.seed, "trainer"));
    TrainResult result;
    result.best_perplexity = std::numeric_limits<double>::infinity();

    for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<Batch> batches = make_batches(train_corpus, cfg.batch_size, rng);
        double epoch_loss = 0.0;
        size_t seqs = 0;
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch& batch = batches[bi];
            GradMap grads = model.params().zero_grads();
            double batch_loss = 0.0;
            for (size_t i = 0; i < batch.size(); ++i) {
                auto lg = model.backward(batch.source_row(i), batch.target_row(i), true, rng);
                batch_loss += lg.loss;
                detail::accumulate_grads(grads, lg.grads);
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(bi));
            detail::scale_grads(grads, 1.0 / static_cast<double>(batch.size()));
            if (cfg.grad_clip > 0.0) detail::clip_grads(grads, cfg.grad_clip);
            model.params().adam_step(grads, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
            epoch_loss += batch_loss;
            seqs += batch.size();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(seqs);
        stats.dev_perplexity = perplexity(model, dev_corpus);

        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03zu.ckpt", epoch);
        stats.checkpoint_path = (std::filesystem::path(cfg.checkpoint_dir) / name).string();
        save_checkpoint(model, {epoch, stats.dev_perplexity}, stats.checkpoint_path);

        if (stats.dev_perplexity < result.best_perplexity) {
            result.best_perplexity = stats.dev_perplexity;
            result.best_epoch = epoch;
            result.best_path = stats.checkpoint_path;
        }
        result.epochs.push_back(stats);
        if (cfg.log) {
            (*cfg.log) << "epoch " << epoch << " train_loss " << stats.train_loss
                       << " dev_ppl " << stats.dev_perplexity << "\n";
            cfg.log->flush();
        }
        if (cfg.stop_at_accuracy > 0.0 && char_accuracy(model, dev_corpus) >= cfg.stop_at_accuracy)
            break;
    }

    // mark the winner with a byte-identical copy
    const std::string best = (std::filesystem::path(cfg.checkpoint_dir) / "best.ckpt").string();
    std::filesystem::copy_file(result.best_path, best, std::filesystem::copy_options::overwrite_existing);
    result.best_path = best;
    return result;
}

}  // namespace charmend
