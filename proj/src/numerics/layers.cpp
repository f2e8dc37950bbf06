#include "spot/numerics/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace spot::num {

Tensor ForwardContext::apply_dropout(const Tensor& x) const {
    if (!training || dropout <= 0.0) return x;
    if (!rng) throw std::logic_error("training forward pass without a dropout generator");
    return num::dropout(x, dropout, *rng);
}

Tensor make_parameter(Tensor value) {
    value.set_requires_grad(true);
    return value;
}

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data_mut()) v = dist(rng);
    return t;
}

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data_mut()) v = dist(rng);
    return t;
}

Linear::Linear(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = make_parameter(uniform_tensor({in, out}, bound, rng));
    if (with_bias) bias = make_parameter(uniform_tensor({out}, bound, rng));
}

Tensor Linear::forward(const Tensor& x) const {
    Tensor y = matmul(x, weight);
    return bias.defined() ? add(y, bias) : y;
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight});
    if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(std::size_t width, double eps_)
    : gamma(make_parameter(Tensor({width}, 1.0))), beta(make_parameter(Tensor({width}, 0.0))), eps(eps_) {}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

} // namespace spot::num
