#pragma once

#include <vector>

#include "charmend/core/ops.hpp"
#include "charmend/core/tensor.hpp"

namespace charmend {

/// Parameter views for one gated recurrent unit:
///   z = sigmoid(Wz x + Uz h_prev + bz)        update gate
///   r = sigmoid(Wr x + Ur h_prev + br)        reset gate
///   hc = tanh(Wh x + Uh (r * h_prev) + bh)    candidate
///   h = (1 - z) * h_prev + z * hc
struct GruParamRefs {
    const Tensor *Wz, *Uz, *bz;
    const Tensor *Wr, *Ur, *br;
    const Tensor *Wh, *Uh, *bh;
    size_t hidden = 0;
    size_t in_dim = 0;
};

struct GruGradRefs {
    Tensor *Wz, *Uz, *bz;
    Tensor *Wr, *Ur, *br;
    Tensor *Wh, *Uh, *bh;
};

/// Per-step activations kept for the backward pass.
template <typename S>
struct GruStepCacheT {
    std::vector<S> z, r, hc, rh, h;

    void resize(size_t hidden) {
        z.resize(hidden);
        r.resize(hidden);
        hc.resize(hidden);
        rh.resize(hidden);
        h.resize(hidden);
    }
};

using GruStepCache = GruStepCacheT<double>;

/// One cell step. h_prev may be null for the zero initial state.
template <typename S>
inline void gru_forward_step(const GruParamRefs& p, const S* x, const S* h_prev,
                             GruStepCacheT<S>& c, std::vector<S>& scratch) {
    const size_t H = p.hidden, D = p.in_dim;
    c.resize(H);
    scratch.resize(H);
    S* tmp = scratch.data();

    affine_into(p.Wz->data(), p.bz->data(), x, H, D, c.z.data());
    if (h_prev) {
        affine_into(p.Uz->data(), nullptr, h_prev, H, H, tmp);
        for (size_t i = 0; i < H; ++i) c.z[i] += tmp[i];
    }
    for (size_t i = 0; i < H; ++i) c.z[i] = sigmoid_scalar(c.z[i]);

    affine_into(p.Wr->data(), p.br->data(), x, H, D, c.r.data());
    if (h_prev) {
        affine_into(p.Ur->data(), nullptr, h_prev, H, H, tmp);
        for (size_t i = 0; i < H; ++i) c.r[i] += tmp[i];
    }
    for (size_t i = 0; i < H; ++i) c.r[i] = sigmoid_scalar(c.r[i]);

    for (size_t i = 0; i < H; ++i) c.rh[i] = h_prev ? c.r[i] * h_prev[i] : S(0);

    affine_into(p.Wh->data(), p.bh->data(), x, H, D, c.hc.data());
    affine_into(p.Uh->data(), nullptr, c.rh.data(), H, H, tmp);
    for (size_t i = 0; i < H; ++i) c.hc[i] = std::tanh(c.hc[i] + tmp[i]);

    for (size_t i = 0; i < H; ++i) {
        const S hp = h_prev ? h_prev[i] : S(0);
        c.h[i] = (S(1) - c.z[i]) * hp + c.z[i] * c.hc[i];
    }
}

/// Accumulates parameter gradients plus dx (post-dropout input) and
/// dh_prev for the step described by `c`. h_prev as in the forward call.
inline void gru_backward_step(const GruParamRefs& p, const GruGradRefs& g, const GruStepCache& c,
                              const double* x, const double* h_prev, const double* dh,
                              double* dx, double* dh_prev, std::vector<double>& scratch) {
    const size_t H = p.hidden, D = p.in_dim;
    scratch.resize(4 * H);
    double* da = scratch.data();        // gate pre-activation grads, reused
    double* drh = scratch.data() + H;   // grad w.r.t. r*h_prev
    double* dgate = scratch.data() + 2 * H;
    double* tmp = scratch.data() + 3 * H;

    // h = (1-z) h_prev + z hc
    for (size_t i = 0; i < H; ++i) {
        const double hp = h_prev ? h_prev[i] : 0.0;
        dgate[i] = dh[i] * (c.hc[i] - hp);          // dz
        tmp[i] = dh[i] * c.z[i];                    // dhc
        if (dh_prev) dh_prev[i] += dh[i] * (1.0 - c.z[i]);
    }

    // candidate path: hc = tanh(Wh x + Uh rh + bh)
    for (size_t i = 0; i < H; ++i) da[i] = tmp[i] * (1.0 - c.hc[i] * c.hc[i]);
    outer_add(da, x, H, D, g.Wh->data());
    outer_add(da, c.rh.data(), H, H, g.Uh->data());
    for (size_t i = 0; i < H; ++i) (*g.bh)[i] += da[i];
    if (dx) matvec_transpose_add(p.Wh->data(), da, H, D, dx);
    std::fill(drh, drh + H, 0.0);
    matvec_transpose_add(p.Uh->data(), da, H, H, drh);

    // reset gate: rh = r * h_prev
    if (h_prev) {
        for (size_t i = 0; i < H; ++i) {
            if (dh_prev) dh_prev[i] += drh[i] * c.r[i];
            drh[i] = drh[i] * h_prev[i];            // now dr
        }
        for (size_t i = 0; i < H; ++i) da[i] = drh[i] * c.r[i] * (1.0 - c.r[i]);
        outer_add(da, x, H, D, g.Wr->data());
        outer_add(da, h_prev, H, H, g.Ur->data());
        for (size_t i = 0; i < H; ++i) (*g.br)[i] += da[i];
        if (dx) matvec_transpose_add(p.Wr->data(), da, H, D, dx);
        if (dh_prev) matvec_transpose_add(p.Ur->data(), da, H, H, dh_prev);
    }
    // with h_prev == 0 the reset gate cannot influence the loss

    // update gate
    for (size_t i = 0; i < H; ++i) da[i] = dgate[i] * c.z[i] * (1.0 - c.z[i]);
    outer_add(da, x, H, D, g.Wz->data());
    if (h_prev) outer_add(da, h_prev, H, H, g.Uz->data());
    for (size_t i = 0; i < H; ++i) (*g.bz)[i] += da[i];
    if (dx) matvec_transpose_add(p.Wz->data(), da, H, D, dx);
    if (dh_prev && h_prev) matvec_transpose_add(p.Uz->data(), da, H, H, dh_prev);
}

/// Tensor-level cell, the contract-checked entry point used by tests and
/// by anything composing single steps by hand.
struct GruCellParams {
    Tensor Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;

    GruParamRefs refs() const {
        GruParamRefs p{&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh, bz.numel(), Wz.cols()};
        return p;
    }
};

inline Tensor gru_cell(const Tensor& h_prev, const Tensor& x, const GruCellParams& params) {
    const size_t H = params.bz.numel();
    const size_t D = params.Wz.cols();
    if (params.Wz.rows() != H || params.Uz.rows() != H || params.Uz.cols() != H)
        throw DimensionError("gru_cell: gate matrices disagree with hidden size " + std::to_string(H));
    if (h_prev.numel() != H)
        throw DimensionError("gru_cell: h_prev " + h_prev.shape_str() + " does not match hidden size " + std::to_string(H));
    if (x.numel() != D)
        throw DimensionError("gru_cell: x " + x.shape_str() + " does not match input size " + std::to_string(D));
    GruStepCache cache;
    std::vector<double> scratch;
    gru_forward_step(params.refs(), x.data(), h_prev.data(), cache, scratch);
    return Tensor({H}, std::move(cache.h));
}

}  // namespace charmend
