#pragma once

#include <cstddef>
#include <string>

#include "charmend/core/errors.hpp"

namespace charmend {

/// Architecture hyperparameters. Defaults follow the full-scale setup
/// (3+3 layers, 400 hidden units); tests and desk-scale runs shrink them.
struct ModelConfig {
    size_t hidden = 400;      // H: per-layer state size, both directions summed
    size_t embed = 400;       // E: character embedding size (defaults to H)
    size_t enc_layers = 3;    // N: encoder depth; output length is T / 2^(N-1)
    size_t dec_layers = 3;    // M: decoder depth
    size_t vocab = 98;
    double dropout = 0.15;    // applied to non-recurrent connections only
    bool literal_attention = false;  // u/sum(u) instead of softmax over u

    void validate() const {
        if (hidden < 1 || embed < 1 || enc_layers < 1 || dec_layers < 1)
            throw ArgumentError("model config: all sizes must be >= 1");
        if (vocab < 2) throw ArgumentError("model config: vocab too small");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ArgumentError("model config: dropout must lie in [0,1)");
    }

    size_t pyramid_factor() const { return size_t{1} << (enc_layers - 1); }
};

}  // namespace charmend
