#pragma once

#include "spot/numerics/layers.hpp"

#include <vector>

namespace spot::model {

using num::Tensor;

/// Self-attention over the middle axis of x [S, L, d]; no masking.
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(std::size_t d_model, std::size_t n_heads, std::mt19937_64& rng);

    Tensor forward(const Tensor& x, const num::ForwardContext& ctx) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    std::size_t d_model = 0;
    std::size_t n_heads = 0;
    num::Linear qkv;
    num::Linear out_proj;
};

/// Pre-norm encoder layer:
///   h = x + drop(attn(LN1(x)))
///   y = h + drop(W2 drop(relu(W1 LN2(h))))
class TransformerEncoderLayer {
public:
    TransformerEncoderLayer() = default;
    TransformerEncoderLayer(std::size_t d_model, std::size_t n_heads, std::size_t ff_dim, std::mt19937_64& rng);

    Tensor forward(const Tensor& x, const num::ForwardContext& ctx) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    num::LayerNorm norm1;
    MultiHeadAttention attn;
    num::LayerNorm norm2;
    num::Linear ff1;
    num::Linear ff2;
};

/// Stack of encoder layers followed by a final LayerNorm.
class TransformerEncoder {
public:
    TransformerEncoder() = default;
    TransformerEncoder(std::size_t d_model, std::size_t n_heads, std::size_t ff_dim, std::size_t layers,
                       std::mt19937_64& rng);

    Tensor forward(const Tensor& x, const num::ForwardContext& ctx) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    std::vector<TransformerEncoderLayer> layers;
    num::LayerNorm final_norm;
};

/// Fixed sin/cos position table [L, d].
Tensor sinusoidal_positions(std::size_t length, std::size_t d_model);

} // namespace spot::model
