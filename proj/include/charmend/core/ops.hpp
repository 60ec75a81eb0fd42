#pragma once

#include <cmath>
#include <cstring>
#include <string>

#include "charmend/core/errors.hpp"
#include "charmend/core/rng.hpp"
#include "charmend/core/tensor.hpp"

namespace charmend {

// ---------------------------------------------------------------------------
// Raw-buffer kernels. The model code calls these on preallocated buffers;
// the Tensor-level wrappers below are the exported, contract-checked ops.
// ---------------------------------------------------------------------------

/// y = W x + b with W an m-by-n row-major matrix. y must not alias x.
/// Templated on the state scalar so the gradient-check harness can drive
/// the forward pass in long double; weights are always 64-bit.
template <typename S = double>
inline void affine_into(const double* W, const double* b, const S* x,
                        size_t m, size_t n, S* y) {
    for (size_t i = 0; i < m; ++i) {
        const double* row = W + i * n;
        S acc = b ? static_cast<S>(b[i]) : S(0);
        for (size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

/// y += W^T g, the input-gradient half of an affine backward.
inline void matvec_transpose_add(const double* W, const double* g,
                                 size_t m, size_t n, double* y) {
    for (size_t i = 0; i < m; ++i) {
        const double* row = W + i * n;
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (size_t j = 0; j < n; ++j) y[j] += row[j] * gi;
    }
}

/// dW += g x^T, the weight-gradient half of an affine backward.
inline void outer_add(const double* g, const double* x, size_t m, size_t n, double* dW) {
    for (size_t i = 0; i < m; ++i) {
        double* row = dW + i * n;
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (size_t j = 0; j < n; ++j) row[j] += gi * x[j];
    }
}

template <typename S = double>
inline S sigmoid_scalar(S v) {
    return S(1) / (S(1) + std::exp(-v));
}

/// Max-subtracted softmax over n contiguous values.
template <typename S = double>
inline void softmax_into(const S* x, size_t n, S* y) {
    S mx = x[0];
    for (size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    S sum = S(0);
    for (size_t i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    const S inv = S(1) / sum;
    for (size_t i = 0; i < n; ++i) y[i] *= inv;
}

// ---------------------------------------------------------------------------
// Exported tensor ops
// ---------------------------------------------------------------------------

/// Returns W x + b for W: m-by-n, b: m, x: n.
inline Tensor affine(const Tensor& W, const Tensor& b, const Tensor& x) {
    if (W.ndim() != 2) throw DimensionError("affine: W must be 2-d, got " + W.shape_str());
    const size_t m = W.dim(0), n = W.dim(1);
    if (b.numel() != m || x.numel() != n) {
        throw DimensionError("affine: W " + W.shape_str() + " incompatible with b " +
                             b.shape_str() + ", x " + x.shape_str());
    }
    Tensor y({m});
    affine_into(W.data(), b.data(), x.data(), m, n, y.data());
    return y;
}

enum class Activation { Tanh, Sigmoid, Relu, Softmax };

inline Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::Relu;
    if (name == "softmax") return Activation::Softmax;
    throw ArgumentError("unknown activation: " + name);
}

/// Elementwise tanh/sigmoid/relu; softmax is taken over the last axis.
inline Tensor activation(Activation kind, const Tensor& x) {
    if (x.numel() == 0) throw ArgumentError("activation: empty tensor");
    Tensor y = x;
    switch (kind) {
        case Activation::Tanh:
            for (size_t i = 0; i < y.numel(); ++i) y[i] = std::tanh(y[i]);
            break;
        case Activation::Sigmoid:
            for (size_t i = 0; i < y.numel(); ++i) y[i] = sigmoid_scalar(y[i]);
            break;
        case Activation::Relu:
            for (size_t i = 0; i < y.numel(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
            break;
        case Activation::Softmax: {
            const size_t row_len = x.ndim() >= 1 ? x.shape().back() : 0;
            if (row_len == 0) throw ArgumentError("activation: softmax over empty axis");
            const size_t rows = y.numel() / row_len;
            for (size_t r = 0; r < rows; ++r)
                softmax_into(x.data() + r * row_len, row_len, y.data() + r * row_len);
            break;
        }
    }
    return y;
}

/// -log p[target], with p[target] clamped at 1e-12 before the log.
inline double cross_entropy(const Tensor& probs, size_t target) {
    if (target >= probs.numel()) {
        throw ArgumentError("cross_entropy: target " + std::to_string(target) +
                            " out of range for " + std::to_string(probs.numel()) + " classes");
    }
    return -std::log(std::max(probs[target], 1e-12));
}

/// Inverted dropout: zero with probability `rate`, survivors scaled by
/// 1/(1-rate) so inference needs no rescaling. Identity when not training.
inline Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
    if (rate >= 1.0 || rate < 0.0) {
        throw ArgumentError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) return x;
    Tensor y = x;
    const double scale = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < y.numel(); ++i) y[i] = rng.uniform() < rate ? 0.0 : y[i] * scale;
    return y;
}

/// Mask-recording variant used by the training path: mask[i] is the factor
/// (0 or 1/(1-rate)) applied to x[i], so the backward pass can replay it.
inline void dropout_mask_into(double rate, Rng& rng, bool training, size_t n, double* mask) {
    if (rate >= 1.0 || rate < 0.0) {
        throw ArgumentError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        for (size_t i = 0; i < n; ++i) mask[i] = 1.0;
        return;
    }
    const double scale = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < n; ++i) mask[i] = rng.uniform() < rate ? 0.0 : scale;
}

}  // namespace charmend
