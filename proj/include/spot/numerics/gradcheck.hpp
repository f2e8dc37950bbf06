#pragma once

#include "spot/numerics/tensor.hpp"

#include <functional>
#include <span>

namespace spot::num {

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h for every coordinate of x.
/// `f` receives a perturbed copy; x itself is not modified.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h = 1e-5);

/// Same oracle for a tensor that `f` reads through captured state (a model
/// parameter). The tensor is perturbed in place and restored exactly.
Tensor finite_difference_gradient(const std::function<double()>& f, const Tensor& param, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

} // namespace spot::num
