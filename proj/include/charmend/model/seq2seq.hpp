#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "charmend/core/ops.hpp"
#include "charmend/core/param_store.hpp"
#include "charmend/core/rng.hpp"
#include "charmend/model/config.hpp"
#include "charmend/model/gru.hpp"
#include "charmend/text/batch.hpp"
#include "charmend/text/vocab.hpp"

namespace charmend {

/// The reduced source representation: K context vectors from the top
/// encoder layer, K = ceil(T / 2^(N-1)) after eos padding.
struct EncodedSource {
    std::vector<std::vector<double>> states;  // K x H
    size_t source_len = 0;                    // T before pyramid padding

    size_t count() const { return states.size(); }
};

/// Pyramidal bi-GRU encoder, GRU decoder with content-based attention,
/// affine+ReLU combiner and softmax output layer, trained with
/// teacher-forced cross entropy. Backward passes are hand written. The
/// forward path is templated on its scalar so the finite-difference
/// harness can evaluate losses in long double; training and inference
/// always run in 64-bit.
class Seq2Seq {
public:
    explicit Seq2Seq(ModelConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    /// Uniform [-0.1, 0.1] weights and embeddings, zero biases.
    void init_params(Rng& rng) {
        const size_t H = cfg_.hidden, E = cfg_.embed, V = cfg_.vocab;
        auto w = [&](const std::string& name, size_t r, size_t c) {
            store_.add(name, Tensor::uniform_init({r, c}, -0.1, 0.1, rng));
        };
        auto bias = [&](const std::string& name, size_t n) { store_.add(name, Tensor({n})); };
        auto gru = [&](const std::string& prefix, size_t in_dim) {
            for (const char* gate : {"z", "r", "h"}) {
                w(prefix + ".W" + gate, H, in_dim);
                w(prefix + ".U" + gate, H, H);
                bias(prefix + ".b" + gate, H);
            }
        };

        w("enc.embed", V, E);
        for (size_t j = 1; j <= cfg_.enc_layers; ++j) {
            const size_t in_dim = j == 1 ? E : H;
            gru(enc_prefix(j, true), in_dim);
            gru(enc_prefix(j, false), in_dim);
            if (j >= 2) {
                w("enc.l" + std::to_string(j) + ".pyr.W", H, 2 * H);
                bias("enc.l" + std::to_string(j) + ".pyr.b", H);
            }
        }
        w("dec.embed", V, E);
        for (size_t j = 1; j <= cfg_.dec_layers; ++j) gru(dec_prefix(j), j == 1 ? E : H);
        w("att.phi1.W", H, H);
        bias("att.phi1.b", H);
        w("att.phi2.W", H, H);
        bias("att.phi2.b", H);
        w("out.comb.W", H, 2 * H);
        bias("out.comb.b", H);
        w("out.proj.W", V, H);
        bias("out.proj.b", V);
    }

    // -----------------------------------------------------------------
    // Caches (templated so the check harness can run in long double)
    // -----------------------------------------------------------------

    template <typename S>
    struct EncoderLayerCacheT {
        std::vector<std::vector<double>> mask;  // L x Din dropout masks
        std::vector<std::vector<S>> x;          // L x Din post-dropout inputs
        std::vector<GruStepCacheT<S>> fwd, bwd;
        std::vector<std::vector<S>> hsum;       // L x H, f + b
        std::vector<std::vector<S>> red;        // L/2 x H reductions (layers < N)
    };

    template <typename S>
    struct EncoderCacheT {
        std::vector<int> padded_ids;
        std::vector<EncoderLayerCacheT<S>> layers;
    };
    using EncoderCache = EncoderCacheT<double>;

    template <typename S>
    struct DecoderLayerStepT {
        std::vector<double> mask;
        std::vector<S> x;
        GruStepCacheT<S> gru;
    };

    template <typename S>
    struct StepCacheT {
        int prev_id = 0;
        std::vector<DecoderLayerStepT<S>> layers;
        std::vector<S> u, alpha;           // K
        std::vector<S> p1;                 // H
        std::vector<S> a;                  // H
        std::vector<double> comb_mask;     // 2H
        std::vector<S> comb_x;             // 2H
        std::vector<S> y1, y2;             // H
        std::vector<S> probs;              // V
    };

    template <typename S>
    struct ForwardT {
        EncoderCacheT<S> enc_cache;
        std::vector<std::vector<S>> p2;  // K x H, phi2 of the contexts
        std::vector<StepCacheT<S>> steps;
        const std::vector<std::vector<S>>& contexts() const { return enc_cache.layers.back().hsum; }
    };

    // -----------------------------------------------------------------
    // Encoder
    // -----------------------------------------------------------------

    EncodedSource encode(const std::vector<int>& source_ids, bool training, Rng& rng) const {
        EncoderCache cache;
        encode_impl<double>(source_ids, training, rng, cache);
        EncodedSource enc;
        enc.source_len = source_ids.size();
        enc.states = cache.layers.back().hsum;
        return enc;
    }

    /// Context weights and vector for one decoder state against an
    /// encoding; the standalone entry point for tests. Returns (a, alpha).
    std::pair<Tensor, Tensor> attend(const Tensor& d_top, const EncodedSource& enc) const {
        if (enc.count() == 0) throw ArgumentError("attend: empty encoding");
        if (d_top.numel() != cfg_.hidden)
            throw DimensionError("attend: decoder state " + d_top.shape_str() + " vs hidden " +
                                 std::to_string(cfg_.hidden));
        std::vector<std::vector<double>> p2;
        attention_prepare<double>(enc.states, p2);
        StepCacheT<double> sc;
        attention_forward<double>(d_top.data(), enc.states, p2, sc);
        return {Tensor({cfg_.hidden}, std::move(sc.a)), Tensor({enc.count()}, std::move(sc.alpha))};
    }

    // -----------------------------------------------------------------
    // Decoder (stepwise inference path)
    // -----------------------------------------------------------------

    struct DecodeState {
        std::vector<std::vector<double>> d;  // M x H, zero at sentence start
    };

    /// phi2(c_k) for each context vector, computed once per source sentence.
    struct AttentionCache {
        std::vector<std::vector<double>> p2;  // K x H
    };

    DecodeState initial_state() const {
        DecodeState s;
        s.d.assign(cfg_.dec_layers, std::vector<double>(cfg_.hidden, 0.0));
        return s;
    }

    AttentionCache prepare_attention(const EncodedSource& enc) const {
        AttentionCache att;
        attention_prepare<double>(enc.states, att.p2);
        return att;
    }

    /// One inference step: embeds prev_id, advances the GRU stack, attends,
    /// and returns the output distribution. Deterministic (no dropout).
    Tensor decode_step(int prev_id, DecodeState& state, const EncodedSource& enc,
                       const AttentionCache& att) const {
        if (prev_id < 0 || static_cast<size_t>(prev_id) >= cfg_.vocab)
            throw ArgumentError("decode_step: symbol id " + std::to_string(prev_id) + " out of range");
        StepCacheT<double> sc;
        Rng unused(0);
        decoder_step_forward<double>(prev_id, state.d, enc.states, att.p2, /*training=*/false,
                                     unused, sc);
        for (size_t l = 0; l < cfg_.dec_layers; ++l) state.d[l] = sc.layers[l].gru.h;
        return Tensor({cfg_.vocab}, std::move(sc.probs));
    }

    // -----------------------------------------------------------------
    // Loss and gradients
    // -----------------------------------------------------------------

    /// Teacher-forced cross entropy summed over the positions after sos.
    /// `target_ids` must be wrapped sos ... eos by the caller.
    double sequence_loss(const std::vector<int>& source_ids, const std::vector<int>& target_ids,
                         bool training, Rng& rng) const {
        ForwardT<double> fwd;
        return static_cast<double>(forward_pass<double>(source_ids, target_ids, training, rng, fwd));
    }

    /// Same loss evaluated end to end in long double: the reference path
    /// for finite-difference checks, where 64-bit rounding would otherwise
    /// drown coordinates with tiny gradients.
    long double sequence_loss_hp(const std::vector<int>& source_ids,
                                 const std::vector<int>& target_ids, bool training, Rng& rng) const {
        ForwardT<long double> fwd;
        return forward_pass<long double>(source_ids, target_ids, training, rng, fwd);
    }

    struct LossAndGrads {
        double loss = 0.0;
        GradMap grads;
    };

    /// Loss plus exact gradients for every parameter. Dropout masks drawn
    /// during the internal forward pass are replayed in the backward pass.
    LossAndGrads backward(const std::vector<int>& source_ids, const std::vector<int>& target_ids,
                          bool training, Rng& rng) const {
        ForwardT<double> fwd;
        LossAndGrads out;
        out.loss = static_cast<double>(forward_pass<double>(source_ids, target_ids, training, rng, fwd));
        out.grads = store_.zero_grads();
        backward_pass(fwd, target_ids, out.grads);
        return out;
    }

private:
    // ---- parameter lookup helpers ----
    static std::string enc_prefix(size_t layer, bool forward) {
        return "enc.l" + std::to_string(layer) + (forward ? ".f" : ".b");
    }
    static std::string dec_prefix(size_t layer) { return "dec.l" + std::to_string(layer); }

    GruParamRefs gru_refs(const std::string& prefix, size_t in_dim) const {
        GruParamRefs p;
        p.Wz = &store_.get(prefix + ".Wz");
        p.Uz = &store_.get(prefix + ".Uz");
        p.bz = &store_.get(prefix + ".bz");
        p.Wr = &store_.get(prefix + ".Wr");
        p.Ur = &store_.get(prefix + ".Ur");
        p.br = &store_.get(prefix + ".br");
        p.Wh = &store_.get(prefix + ".Wh");
        p.Uh = &store_.get(prefix + ".Uh");
        p.bh = &store_.get(prefix + ".bh");
        p.hidden = cfg_.hidden;
        p.in_dim = in_dim;
        return p;
    }

    static GruGradRefs gru_grads(GradMap& g, const std::string& prefix) {
        return GruGradRefs{&g.at(prefix + ".Wz"), &g.at(prefix + ".Uz"), &g.at(prefix + ".bz"),
                           &g.at(prefix + ".Wr"), &g.at(prefix + ".Ur"), &g.at(prefix + ".br"),
                           &g.at(prefix + ".Wh"), &g.at(prefix + ".Uh"), &g.at(prefix + ".bh")};
    }

    // ---- encoder ----

    template <typename S>
    void encode_impl(const std::vector<int>& source_ids, bool training, Rng& rng,
                     EncoderCacheT<S>& cache) const {
        if (source_ids.empty()) throw ArgumentError("encode: empty source");
        const size_t H = cfg_.hidden, E = cfg_.embed;
        cache.padded_ids = pad_for_pyramid(source_ids, cfg_.enc_layers);
        const size_t T = cache.padded_ids.size();
        cache.layers.resize(cfg_.enc_layers);

        const Tensor& embed = store_.get("enc.embed");
        std::vector<std::vector<S>> input(T);
        for (size_t t = 0; t < T; ++t) {
            const double* row = embed.data() + static_cast<size_t>(cache.padded_ids[t]) * E;
            input[t].assign(row, row + E);
        }

        std::vector<S> scratch;
        for (size_t j = 1; j <= cfg_.enc_layers; ++j) {
            EncoderLayerCacheT<S>& lc = cache.layers[j - 1];
            const size_t L = input.size();
            const size_t Din = j == 1 ? E : H;
            GruParamRefs pf = gru_refs(enc_prefix(j, true), Din);
            GruParamRefs pb = gru_refs(enc_prefix(j, false), Din);

            lc.mask.resize(L);
            lc.x.resize(L);
            for (size_t t = 0; t < L; ++t) {
                lc.mask[t].resize(Din);
                dropout_mask_into(cfg_.dropout, rng, training, Din, lc.mask[t].data());
                lc.x[t].resize(Din);
                for (size_t i = 0; i < Din; ++i) lc.x[t][i] = input[t][i] * lc.mask[t][i];
            }

            lc.fwd.resize(L);
            lc.bwd.resize(L);
            for (size_t t = 0; t < L; ++t) {
                const S* h_prev = t == 0 ? nullptr : lc.fwd[t - 1].h.data();
                gru_forward_step<S>(pf, lc.x[t].data(), h_prev, lc.fwd[t], scratch);
            }
            for (size_t tt = L; tt-- > 0;) {
                const S* h_prev = tt + 1 == L ? nullptr : lc.bwd[tt + 1].h.data();
                gru_forward_step<S>(pb, lc.x[tt].data(), h_prev, lc.bwd[tt], scratch);
            }

            lc.hsum.resize(L);
            for (size_t t = 0; t < L; ++t) {
                lc.hsum[t].resize(H);
                for (size_t i = 0; i < H; ++i) lc.hsum[t][i] = lc.fwd[t].h[i] + lc.bwd[t].h[i];
            }

            if (j < cfg_.enc_layers) {
                const Tensor& Wp = store_.get("enc.l" + std::to_string(j + 1) + ".pyr.W");
                const Tensor& bp = store_.get("enc.l" + std::to_string(j + 1) + ".pyr.b");
                const size_t Lr = L / 2;
                lc.red.resize(Lr);
                std::vector<S> pair(2 * H);
                for (size_t t = 0; t < Lr; ++t) {
                    std::copy(lc.hsum[2 * t].begin(), lc.hsum[2 * t].end(), pair.begin());
                    std::copy(lc.hsum[2 * t + 1].begin(), lc.hsum[2 * t + 1].end(),
                              pair.begin() + static_cast<long>(H));
                    lc.red[t].resize(H);
                    affine_into(Wp.data(), bp.data(), pair.data(), H, 2 * H, lc.red[t].data());
                    for (size_t i = 0; i < H; ++i) lc.red[t][i] = std::tanh(lc.red[t][i]);
                }
                input = lc.red;
            }
        }
    }

    void encoder_backward(const EncoderCache& cache, const std::vector<std::vector<double>>& d_top,
                          GradMap& grads) const {
        const size_t H = cfg_.hidden, E = cfg_.embed;
        std::vector<double> scratch;
        std::vector<std::vector<double>> dH = d_top;  // grads on layer j's hsum

        for (size_t j = cfg_.enc_layers; j >= 1; --j) {
            const EncoderLayerCacheT<double>& lc = cache.layers[j - 1];
            const size_t L = lc.x.size();
            const size_t Din = j == 1 ? E : H;
            GruParamRefs pf = gru_refs(enc_prefix(j, true), Din);
            GruParamRefs pb = gru_refs(enc_prefix(j, false), Din);
            GruGradRefs gf = gru_grads(grads, enc_prefix(j, true));
            GruGradRefs gb = gru_grads(grads, enc_prefix(j, false));

            std::vector<std::vector<double>> dx(L, std::vector<double>(Din, 0.0));
            std::vector<double> carry(H, 0.0), dtot(H), dprev(H);

            // forward direction: f_t = GRU(f_{t-1}, x_t)
            for (size_t t = L; t-- > 0;) {
                for (size_t i = 0; i < H; ++i) dtot[i] = dH[t][i] + carry[i];
                const double* h_prev = t == 0 ? nullptr : lc.fwd[t - 1].h.data();
                std::fill(dprev.begin(), dprev.end(), 0.0);
                gru_backward_step(pf, gf, lc.fwd[t], lc.x[t].data(), h_prev, dtot.data(),
                                  dx[t].data(), h_prev ? dprev.data() : nullptr, scratch);
                carry = dprev;
            }
            // backward direction: b_t = GRU(b_{t+1}, x_t)
            std::fill(carry.begin(), carry.end(), 0.0);
            for (size_t t = 0; t < L; ++t) {
                for (size_t i = 0; i < H; ++i) dtot[i] = dH[t][i] + carry[i];
                const double* h_prev = t + 1 == L ? nullptr : lc.bwd[t + 1].h.data();
                std::fill(dprev.begin(), dprev.end(), 0.0);
                gru_backward_step(pb, gb, lc.bwd[t], lc.x[t].data(), h_prev, dtot.data(),
                                  dx[t].data(), h_prev ? dprev.data() : nullptr, scratch);
                carry = dprev;
            }

            // through the dropout masks to the layer input
            for (size_t t = 0; t < L; ++t)
                for (size_t i = 0; i < Din; ++i) dx[t][i] *= lc.mask[t][i];

            if (j == 1) {
                Tensor& dEmb = grads.at("enc.embed");
                for (size_t t = 0; t < L; ++t) {
                    double* row = dEmb.data() + static_cast<size_t>(cache.padded_ids[t]) * E;
                    for (size_t i = 0; i < E; ++i) row[i] += dx[t][i];
                }
                break;
            }

            // dx is the grad on layer j's input = reduction output of layer j-1
            const EncoderLayerCacheT<double>& below = cache.layers[j - 2];
            const Tensor& Wp = store_.get("enc.l" + std::to_string(j) + ".pyr.W");
            Tensor& dWp = grads.at("enc.l" + std::to_string(j) + ".pyr.W");
            Tensor& dbp = grads.at("enc.l" + std::to_string(j) + ".pyr.b");
            const size_t Lb = below.hsum.size();
            std::vector<std::vector<double>> dHb(Lb, std::vector<double>(H, 0.0));
            std::vector<double> dpre(H), pair(2 * H), dpair(2 * H);
            for (size_t t = 0; t < L; ++t) {
                const std::vector<double>& red = below.red[t];
                for (size_t i = 0; i < H; ++i) dpre[i] = dx[t][i] * (1.0 - red[i] * red[i]);
                std::copy(below.hsum[2 * t].begin(), below.hsum[2 * t].end(), pair.begin());
                std::copy(below.hsum[2 * t + 1].begin(), below.hsum[2 * t + 1].end(),
                          pair.begin() + static_cast<long>(H));
                outer_add(dpre.data(), pair.data(), H, 2 * H, dWp.data());
                for (size_t i = 0; i < H; ++i) dbp[i] += dpre[i];
                std::fill(dpair.begin(), dpair.end(), 0.0);
                matvec_transpose_add(Wp.data(), dpre.data(), H, 2 * H, dpair.data());
                for (size_t i = 0; i < H; ++i) {
                    dHb[2 * t][i] += dpair[i];
                    dHb[2 * t + 1][i] += dpair[H + i];
                }
            }
            dH = std::move(dHb);
        }
    }

    // ---- decoder ----

    template <typename S>
    void attention_prepare(const std::vector<std::vector<S>>& states,
                           std::vector<std::vector<S>>& p2) const {
        const size_t H = cfg_.hidden;
        const Tensor& W = store_.get("att.phi2.W");
        const Tensor& b = store_.get("att.phi2.b");
        p2.resize(states.size());
        for (size_t k = 0; k < states.size(); ++k) {
            p2[k].resize(H);
            affine_into(W.data(), b.data(), states[k].data(), H, H, p2[k].data());
            for (size_t i = 0; i < H; ++i) p2[k][i] = std::tanh(p2[k][i]);
        }
    }

    template <typename S>
    void attention_forward(const S* d_top, const std::vector<std::vector<S>>& states,
                           const std::vector<std::vector<S>>& p2, StepCacheT<S>& sc) const {
        const size_t H = cfg_.hidden, K = states.size();
        sc.p1.resize(H);
        affine_into(store_.get("att.phi1.W").data(), store_.get("att.phi1.b").data(), d_top, H, H,
                    sc.p1.data());
        for (size_t i = 0; i < H; ++i) sc.p1[i] = std::tanh(sc.p1[i]);

        sc.u.resize(K);
        for (size_t k = 0; k < K; ++k) {
            S dot = S(0);
            const S* q = p2[k].data();
            for (size_t i = 0; i < H; ++i) dot += sc.p1[i] * q[i];
            sc.u[k] = dot;
        }

        sc.alpha.resize(K);
        if (cfg_.literal_attention) {
            S s = S(0);
            for (S v : sc.u) s += v;
            if (std::fabs(static_cast<double>(s)) < 1e-12) s = s < S(0) ? S(-1e-12) : S(1e-12);
            for (size_t k = 0; k < K; ++k) sc.alpha[k] = sc.u[k] / s;
        } else {
            softmax_into(sc.u.data(), K, sc.alpha.data());
        }

        sc.a.assign(H, S(0));
        for (size_t k = 0; k < K; ++k) {
            const S w = sc.alpha[k];
            const S* c = states[k].data();
            for (size_t i = 0; i < H; ++i) sc.a[i] += w * c[i];
        }
    }

    /// d holds the previous step's states on entry; new states end up in
    /// sc.layers[l].gru.h (the caller commits them).
    template <typename S>
    void decoder_step_forward(int prev_id, const std::vector<std::vector<S>>& d,
                              const std::vector<std::vector<S>>& states,
                              const std::vector<std::vector<S>>& p2, bool training, Rng& rng,
                              StepCacheT<S>& sc) const {
        const size_t H = cfg_.hidden, E = cfg_.embed, V = cfg_.vocab, M = cfg_.dec_layers;
        std::vector<S> scratch;
        sc.prev_id = prev_id;
        sc.layers.resize(M);

        const Tensor& embed = store_.get("dec.embed");
        const double* emb_row = embed.data() + static_cast<size_t>(prev_id) * E;
        std::vector<S> emb(emb_row, emb_row + E);
        const S* below = emb.data();
        size_t below_dim = E;
        for (size_t l = 0; l < M; ++l) {
            DecoderLayerStepT<S>& ls = sc.layers[l];
            ls.mask.resize(below_dim);
            dropout_mask_into(cfg_.dropout, rng, training, below_dim, ls.mask.data());
            ls.x.resize(below_dim);
            for (size_t i = 0; i < below_dim; ++i) ls.x[i] = below[i] * ls.mask[i];
            GruParamRefs p = gru_refs(dec_prefix(l + 1), below_dim);
            const bool zero_prev = all_zero(d[l]);
            gru_forward_step<S>(p, ls.x.data(), zero_prev ? nullptr : d[l].data(), ls.gru, scratch);
            below = ls.gru.h.data();
            below_dim = H;
        }

        attention_forward<S>(sc.layers[M - 1].gru.h.data(), states, p2, sc);

        sc.comb_mask.resize(2 * H);
        dropout_mask_into(cfg_.dropout, rng, training, 2 * H, sc.comb_mask.data());
        sc.comb_x.resize(2 * H);
        for (size_t i = 0; i < H; ++i) {
            sc.comb_x[i] = sc.a[i] * sc.comb_mask[i];
            sc.comb_x[H + i] = sc.layers[M - 1].gru.h[i] * sc.comb_mask[H + i];
        }

        sc.y1.resize(H);
        affine_into(store_.get("out.comb.W").data(), store_.get("out.comb.b").data(),
                    sc.comb_x.data(), H, 2 * H, sc.y1.data());
        sc.y2.resize(H);
        for (size_t i = 0; i < H; ++i) sc.y2[i] = sc.y1[i] > S(0) ? sc.y1[i] : S(0);

        std::vector<S> logits(V);
        affine_into(store_.get("out.proj.W").data(), store_.get("out.proj.b").data(), sc.y2.data(),
                    V, H, logits.data());
        sc.probs.resize(V);
        softmax_into(logits.data(), V, sc.probs.data());
    }

    template <typename S>
    S forward_pass(const std::vector<int>& source_ids, const std::vector<int>& target_ids,
                   bool training, Rng& rng, ForwardT<S>& fwd) const {
        if (target_ids.size() < 2)
            throw ArgumentError("sequence_loss: target must hold sos plus at least one symbol");
        for (int id : target_ids)
            if (id < 0 || static_cast<size_t>(id) >= cfg_.vocab)
                throw ArgumentError("sequence_loss: target id out of range");

        encode_impl<S>(source_ids, training, rng, fwd.enc_cache);
        attention_prepare<S>(fwd.contexts(), fwd.p2);

        const size_t steps = target_ids.size() - 1;
        fwd.steps.resize(steps);
        std::vector<std::vector<S>> d(cfg_.dec_layers, std::vector<S>(cfg_.hidden, S(0)));
        S loss = S(0);
        for (size_t t = 0; t < steps; ++t) {
            decoder_step_forward<S>(target_ids[t], d, fwd.contexts(), fwd.p2, training, rng,
                                    fwd.steps[t]);
            for (size_t l = 0; l < cfg_.dec_layers; ++l) d[l] = fwd.steps[t].layers[l].gru.h;
            const S p = fwd.steps[t].probs[static_cast<size_t>(target_ids[t + 1])];
            loss += -std::log(std::max(p, S(1e-12)));
        }
        if (!std::isfinite(static_cast<double>(loss)))
            throw NumericError("sequence_loss: non-finite loss");
        return loss;
    }

    void backward_pass(const ForwardT<double>& fwd, const std::vector<int>& target_ids,
                       GradMap& grads) const {
        const size_t H = cfg_.hidden, E = cfg_.embed, V = cfg_.vocab, M = cfg_.dec_layers;
        const std::vector<std::vector<double>>& contexts = fwd.contexts();
        const size_t K = contexts.size();
        const size_t steps = fwd.steps.size();
        std::vector<double> scratch;

        const Tensor& Wc = store_.get("out.comb.W");
        const Tensor& Wo = store_.get("out.proj.W");
        const Tensor& A1 = store_.get("att.phi1.W");
        const Tensor& A2 = store_.get("att.phi2.W");
        Tensor& dWc = grads.at("out.comb.W");
        Tensor& dbc = grads.at("out.comb.b");
        Tensor& dWo = grads.at("out.proj.W");
        Tensor& dbo = grads.at("out.proj.b");
        Tensor& dA1 = grads.at("att.phi1.W");
        Tensor& da1 = grads.at("att.phi1.b");
        Tensor& dA2 = grads.at("att.phi2.W");
        Tensor& da2 = grads.at("att.phi2.b");
        Tensor& dEmbDec = grads.at("dec.embed");

        std::vector<std::vector<double>> dC(K, std::vector<double>(H, 0.0));   // grads on c_k
        std::vector<std::vector<double>> dP2(K, std::vector<double>(H, 0.0));  // grads on phi2(c_k)
        std::vector<std::vector<double>> carry(M, std::vector<double>(H, 0.0));

        std::vector<double> dlogits(V), dy2(H), dy1(H), dcomb(2 * H), dd_top(H);
        std::vector<double> dalpha(K), du(K), dp1(H), dq1(H), dtot(H), dprev(H), dx_top(H);

        for (size_t t = steps; t-- > 0;) {
            const StepCacheT<double>& sc = fwd.steps[t];
            const int target = target_ids[t + 1];

            // softmax + cross entropy
            for (size_t i = 0; i < V; ++i) dlogits[i] = sc.probs[i];
            dlogits[static_cast<size_t>(target)] -= 1.0;

            // output projection
            outer_add(dlogits.data(), sc.y2.data(), V, H, dWo.data());
            for (size_t i = 0; i < V; ++i) dbo[i] += dlogits[i];
            std::fill(dy2.begin(), dy2.end(), 0.0);
            matvec_transpose_add(Wo.data(), dlogits.data(), V, H, dy2.data());

            // combiner ReLU + affine
            for (size_t i = 0; i < H; ++i) dy1[i] = sc.y1[i] > 0.0 ? dy2[i] : 0.0;
            outer_add(dy1.data(), sc.comb_x.data(), H, 2 * H, dWc.data());
            for (size_t i = 0; i < H; ++i) dbc[i] += dy1[i];
            std::fill(dcomb.begin(), dcomb.end(), 0.0);
            matvec_transpose_add(Wc.data(), dy1.data(), H, 2 * H, dcomb.data());
            for (size_t i = 0; i < 2 * H; ++i) dcomb[i] *= sc.comb_mask[i];

            std::fill(dd_top.begin(), dd_top.end(), 0.0);
            for (size_t i = 0; i < H; ++i) dd_top[i] += dcomb[H + i];

            // attention: a = sum_k alpha_k c_k
            const double* da = dcomb.data();
            for (size_t k = 0; k < K; ++k) {
                const double* c = contexts[k].data();
                double dot = 0.0;
                for (size_t i = 0; i < H; ++i) {
                    dot += da[i] * c[i];
                    dC[k][i] += sc.alpha[k] * da[i];
                }
                dalpha[k] = dot;
            }
            if (cfg_.literal_attention) {
                double s = 0.0, wsum = 0.0;
                for (size_t k = 0; k < K; ++k) s += sc.u[k];
                if (std::fabs(s) < 1e-12) s = s < 0 ? -1e-12 : 1e-12;
                for (size_t k = 0; k < K; ++k) wsum += dalpha[k] * sc.u[k];
                for (size_t k = 0; k < K; ++k) du[k] = dalpha[k] / s - wsum / (s * s);
            } else {
                double dot = 0.0;
                for (size_t k = 0; k < K; ++k) dot += dalpha[k] * sc.alpha[k];
                for (size_t k = 0; k < K; ++k) du[k] = sc.alpha[k] * (dalpha[k] - dot);
            }

            // u_k = p1 . p2_k
            std::fill(dp1.begin(), dp1.end(), 0.0);
            for (size_t k = 0; k < K; ++k) {
                const double uk = du[k];
                if (uk == 0.0) continue;
                const double* p2 = fwd.p2[k].data();
                for (size_t i = 0; i < H; ++i) {
                    dp1[i] += uk * p2[i];
                    dP2[k][i] += uk * sc.p1[i];
                }
            }

            // phi1 tanh + affine
            for (size_t i = 0; i < H; ++i) dq1[i] = dp1[i] * (1.0 - sc.p1[i] * sc.p1[i]);
            outer_add(dq1.data(), sc.layers[M - 1].gru.h.data(), H, H, dA1.data());
            for (size_t i = 0; i < H; ++i) da1[i] += dq1[i];
            matvec_transpose_add(A1.data(), dq1.data(), H, H, dd_top.data());

            // GRU stack, top down
            std::vector<double>* dd = &dd_top;
            for (size_t l = M; l-- > 0;) {
                const DecoderLayerStepT<double>& ls = sc.layers[l];
                const size_t Din = l == 0 ? E : H;
                for (size_t i = 0; i < H; ++i) dtot[i] = (*dd)[i] + carry[l][i];

                const double* h_prev = nullptr;
                if (t > 0) h_prev = fwd.steps[t - 1].layers[l].gru.h.data();

                GruParamRefs p = gru_refs(dec_prefix(l + 1), Din);
                GruGradRefs g = gru_grads(grads, dec_prefix(l + 1));
                std::vector<double> dx(Din, 0.0);
                std::fill(dprev.begin(), dprev.end(), 0.0);
                gru_backward_step(p, g, ls.gru, ls.x.data(), h_prev, dtot.data(), dx.data(),
                                  h_prev ? dprev.data() : nullptr, scratch);
                carry[l] = dprev;

                for (size_t i = 0; i < Din; ++i) dx[i] *= ls.mask[i];
                if (l == 0) {
                    double* row = dEmbDec.data() + static_cast<size_t>(sc.prev_id) * E;
                    for (size_t i = 0; i < E; ++i) row[i] += dx[i];
                } else {
                    std::copy(dx.begin(), dx.end(), dx_top.begin());
                    dd = &dx_top;
                }
            }
        }

        // phi2 tanh + affine, shared across steps
        std::vector<double> dq2(H);
        for (size_t k = 0; k < K; ++k) {
            const double* p2 = fwd.p2[k].data();
            for (size_t i = 0; i < H; ++i) dq2[i] = dP2[k][i] * (1.0 - p2[i] * p2[i]);
            outer_add(dq2.data(), contexts[k].data(), H, H, dA2.data());
            for (size_t i = 0; i < H; ++i) da2[i] += dq2[i];
            matvec_transpose_add(A2.data(), dq2.data(), H, H, dC[k].data());
        }

        encoder_backward(fwd.enc_cache, dC, grads);
    }

    template <typename S>
    static bool all_zero(const std::vector<S>& v) {
        for (S x : v)
            if (x != S(0)) return false;
        return true;
    }

    ModelConfig cfg_;
    ParamStore store_;
};

}  // namespace charmend
