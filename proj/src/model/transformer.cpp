#include "spot/model/transformer.hpp"

#include <cmath>

namespace spot::model {

MultiHeadAttention::MultiHeadAttention(std::size_t d, std::size_t h, std::mt19937_64& rng)
    : d_model(d), n_heads(h), qkv(d, 3 * d, true, rng), out_proj(d, d, true, rng) {
    if (h == 0 || d % h != 0) throw num::ShapeError("attention: width must be divisible by the head count");
}

Tensor MultiHeadAttention::forward(const Tensor& x, const num::ForwardContext& ctx) const {
    if (x.rank() != 3 || x.dim(2) != d_model) {
        throw num::ShapeError("attention: expected [S, L, " + std::to_string(d_model) + "], got " +
                              num::shape_str(x.shape()));
    }
    const std::size_t S = x.dim(0), L = x.dim(1), dh = d_model / n_heads;
    const Tensor proj = qkv.forward(x);
    // [S, L, d] -> [S*h, L, dh]
    auto heads = [&](std::size_t part) {
        Tensor t = num::slice(proj, 2, part * d_model, (part + 1) * d_model);
        t = num::permute(num::reshape(t, {S, L, n_heads, dh}), {0, 2, 1, 3});
        return num::reshape(t, {S * n_heads, L, dh});
    };
    const Tensor q = heads(0), k = heads(1), v = heads(2);
    Tensor scores = num::scale(num::matmul(q, num::transpose(k)), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor probs = ctx.apply_dropout(num::softmax(scores));
    Tensor ctxv = num::matmul(probs, v);
    ctxv = num::permute(num::reshape(ctxv, {S, n_heads, L, dh}), {0, 2, 1, 3});
    return out_proj.forward(num::reshape(ctxv, {S, L, d_model}));
}

void MultiHeadAttention::collect(const std::string& prefix, num::ParamList& out) const {
    qkv.collect(prefix + ".qkv", out);
    out_proj.collect(prefix + ".out_proj", out);
}

TransformerEncoderLayer::TransformerEncoderLayer(std::size_t d, std::size_t h, std::size_t ff, std::mt19937_64& rng)
    : norm1(d), attn(d, h, rng), norm2(d), ff1(d, ff, true, rng), ff2(ff, d, true, rng) {}

Tensor TransformerEncoderLayer::forward(const Tensor& x, const num::ForwardContext& ctx) const {
    Tensor h = num::add(x, ctx.apply_dropout(attn.forward(norm1.forward(x), ctx)));
    Tensor f = ctx.apply_dropout(num::relu(ff1.forward(norm2.forward(h))));
    return num::add(h, ctx.apply_dropout(ff2.forward(f)));
}

void TransformerEncoderLayer::collect(const std::string& prefix, num::ParamList& out) const {
    norm1.collect(prefix + ".norm1", out);
    attn.collect(prefix + ".attn", out);
    norm2.collect(prefix + ".norm2", out);
    ff1.collect(prefix + ".ff1", out);
    ff2.collect(prefix + ".ff2", out);
}

TransformerEncoder::TransformerEncoder(std::size_t d, std::size_t h, std::size_t ff, std::size_t n,
                                       std::mt19937_64& rng)
    : final_norm(d) {
    for (std::size_t i = 0; i < n; ++i) layers.emplace_back(d, h, ff, rng);
}

Tensor TransformerEncoder::forward(const Tensor& x, const num::ForwardContext& ctx) const {
    Tensor h = x;
    for (const auto& layer : layers) h = layer.forward(h, ctx);
    return final_norm.forward(h);
}

void TransformerEncoder::collect(const std::string& prefix, num::ParamList& out) const {
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
    final_norm.collect(prefix + ".final_norm", out);
}

Tensor sinusoidal_positions(std::size_t length, std::size_t d_model) {
    Tensor pe({length, d_model});
    auto data = pe.data_mut();
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) * freq;
            data[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

} // namespace spot::model
