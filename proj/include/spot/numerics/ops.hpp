#pragma once

#include "spot/numerics/tape.hpp"
#include "spot/numerics/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

// Differentiable primitives. Each op computes its value eagerly and, when a
// tape is active and some input requires a gradient, records its adjoint.
//
// Binary elementwise ops accept either equal shapes or a right operand whose
// shape is a trailing suffix of the left operand's shape (bias-style
// broadcast over leading axes). Nothing else broadcasts.
namespace spot::num {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);

/// [m,k]x[k,n]; [...,m,k]x[k,n] (weight form); [...,m,k]x[...,k,n] (batched).
Tensor matmul(const Tensor& a, const Tensor& b);
/// Swaps the last two axes.
Tensor transpose(const Tensor& a);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reverse(const Tensor& a, std::size_t axis);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Reduces and removes `axis`.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

/// Softmax over the last axis.
Tensor softmax(const Tensor& a);

/// Normalizes over the last axis with biased variance. `gamma`/`beta` may
/// be undefined tensors for a plain normalization.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Inverted dropout with a mask drawn from `rng`. p == 0 returns `x`.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng);

/// Gathers rows of `table` [V, D]; result shape is index_shape + [D].
Tensor embedding(const Tensor& table, std::span<const std::size_t> indices, Shape index_shape);

/// Depthwise causal convolution over the middle axis of x [S, L, C] with
/// weight [C, W] and bias [C]; zero left padding of W-1 steps.
Tensor causal_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);

double softplus_value(double x);
double sigmoid_value(double x);

} // namespace spot::num
