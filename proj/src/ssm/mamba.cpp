#include "spot/ssm/mamba.hpp"

#include <cmath>

namespace spot::ssm {

MambaBlock::MambaBlock(const MambaConfig& cfg, std::mt19937_64& rng) : config(cfg), norm(cfg.d_model) {
    const std::size_t di = cfg.d_inner();
    in_proj = num::Linear(cfg.d_model, 2 * di, false, rng);
    const double conv_bound = 1.0 / std::sqrt(static_cast<double>(cfg.conv_width));
    conv_weight = num::make_parameter(num::uniform_tensor({di, cfg.conv_width}, conv_bound, rng));
    conv_bias = num::make_parameter(num::uniform_tensor({di}, conv_bound, rng));
    ssm = SelectiveParams::init(di, cfg.d_state, cfg.resolved_dt_rank(), rng);
    out_proj = num::Linear(di, cfg.d_model, false, rng);
}

Tensor MambaBlock::forward(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(2) != config.d_model) {
        throw num::ShapeError("mamba_block: expected [S, L, " + std::to_string(config.d_model) + "], got " +
                              num::shape_str(x.shape()));
    }
    const std::size_t di = config.d_inner();
    Tensor proj = in_proj.forward(norm.forward(x));
    Tensor u = num::slice(proj, 2, 0, di);
    Tensor gate = num::slice(proj, 2, di, 2 * di);
    u = num::silu(num::causal_conv1d(u, conv_weight, conv_bias));
    Tensor y = num::mul(selective_scan(ssm, u), num::silu(gate));
    return num::add(x, out_proj.forward(y));
}

void MambaBlock::collect(const std::string& prefix, num::ParamList& out) const {
    norm.collect(prefix + ".norm", out);
    in_proj.collect(prefix + ".in_proj", out);
    out.push_back({prefix + ".conv.weight", conv_weight});
    out.push_back({prefix + ".conv.bias", conv_bias});
    ssm.collect(prefix + ".ssm", out);
    out_proj.collect(prefix + ".out_proj", out);
}

BidirectionalMamba::BidirectionalMamba(const MambaConfig& cfg, std::mt19937_64& rng)
    : forward_block(cfg, rng), backward_block(cfg, rng) {}

Tensor BidirectionalMamba::forward(const Tensor& x) const {
    Tensor fwd = forward_block.forward(x);
    Tensor bwd = num::reverse(backward_block.forward(num::reverse(x, 1)), 1);
    return num::add(fwd, bwd);
}

void BidirectionalMamba::collect(const std::string& prefix, num::ParamList& out) const {
    forward_block.collect(prefix + ".fwd", out);
    backward_block.collect(prefix + ".bwd", out);
}

MambaStack::MambaStack(const MambaConfig& cfg, std::size_t layers, std::mt19937_64& rng)
    : final_norm(cfg.d_model) {
    for (std::size_t i = 0; i < layers; ++i) blocks.emplace_back(cfg, rng);
}

Tensor MambaStack::forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& b : blocks) h = b.forward(h);
    return final_norm.forward(h);
}

void MambaStack::collect(const std::string& prefix, num::ParamList& out) const {
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + "." + std::to_string(i), out);
    final_norm.collect(prefix + ".final_norm", out);
}

BidirectionalMambaStack::BidirectionalMambaStack(const MambaConfig& cfg, std::size_t n, std::mt19937_64& rng)
    : final_norm(cfg.d_model) {
    for (std::size_t i = 0; i < n; ++i) layers.emplace_back(cfg, rng);
}

Tensor BidirectionalMambaStack::forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& l : layers) h = l.forward(h);
    return final_norm.forward(h);
}

void BidirectionalMambaStack::collect(const std::string& prefix, num::ParamList& out) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
    final_norm.collect(prefix + ".final_norm", out);
}

} // namespace spot::ssm
