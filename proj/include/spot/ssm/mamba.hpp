#pragma once

#include "spot/ssm/selective.hpp"

#include <vector>

namespace spot::ssm {

struct MambaConfig {
    std::size_t d_model = 32;
    std::size_t d_state = 16;
    std::size_t expand = 2;
    std::size_t conv_width = 4;
    std::size_t dt_rank = 0; // 0 selects ceil(d_model / 16)

    std::size_t d_inner() const { return expand * d_model; }
    std::size_t resolved_dt_rank() const { return dt_rank ? dt_rank : (d_model + 15) / 16; }
};

/// Gated selective-SSM block with pre-normalization and a residual:
///   (u, gate) = split(LN(x) W_in)
///   y = selective_scan(silu(causal_conv(u))) * silu(gate)
///   out = x + y W_out
/// Input and output are [S, L, d_model]; causal along L.
class MambaBlock {
public:
    MambaBlock() = default;
    MambaBlock(const MambaConfig& cfg, std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    MambaConfig config;
    num::LayerNorm norm;
    num::Linear in_proj;
    Tensor conv_weight;
    Tensor conv_bias;
    SelectiveParams ssm;
    num::Linear out_proj;
};

/// forward(x) + reverse(backward(reverse(x))) along the sequence axis.
class BidirectionalMamba {
public:
    BidirectionalMamba() = default;
    BidirectionalMamba(const MambaConfig& cfg, std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    MambaBlock forward_block;
    MambaBlock backward_block;
};

/// `layers` causal blocks followed by a final LayerNorm.
class MambaStack {
public:
    MambaStack() = default;
    MambaStack(const MambaConfig& cfg, std::size_t layers, std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    std::vector<MambaBlock> blocks;
    num::LayerNorm final_norm;
};

/// `layers` bidirectional blocks followed by a final LayerNorm.
class BidirectionalMambaStack {
public:
    BidirectionalMambaStack() = default;
    BidirectionalMambaStack(const MambaConfig& cfg, std::size_t layers, std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, num::ParamList& out) const;

    std::vector<BidirectionalMamba> layers;
    num::LayerNorm final_norm;
};

} // namespace spot::ssm
