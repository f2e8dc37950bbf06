#pragma once

#include "spot/numerics/ops.hpp"

#include <random>
#include <string>
#include <vector>

namespace spot::num {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

/// Training-mode switch and dropout source threaded through a forward pass.
struct ForwardContext {
    bool training = false;
    double dropout = 0.0;
    std::mt19937_64* rng = nullptr;

    Tensor apply_dropout(const Tensor& x) const;
};

Tensor make_parameter(Tensor value);
Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng);
Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng);

/// y = x W + b with W stored [in, out].
class Linear {
public:
    Linear() = default;
    Linear(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out) const;

    Tensor weight;
    Tensor bias;
};

class LayerNorm {
public:
    LayerNorm() = default;
    explicit LayerNorm(std::size_t width, double eps = 1e-5);

    Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta, eps); }
    void collect(const std::string& prefix, ParamList& out) const;

    Tensor gamma;
    Tensor beta;
    double eps = 1e-5;
};

} // namespace spot::num
