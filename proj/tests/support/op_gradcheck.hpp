#pragma once

#include "spot/numerics/layers.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spot::testing {

struct OpCheckResult {
    std::string op;
    double max_rel_error = 0.0;
};

/// Analytic adjoint vs central finite differences for every primitive op on
/// random inputs drawn from [-2, 2] (kept away from kinks and domain edges).
std::vector<OpCheckResult> check_all_primitives(std::uint64_t seed);

/// Backward through `loss` once, then compares every parameter's gradient with
/// central differences of `loss` evaluated without a tape.
std::vector<OpCheckResult> check_parameter_gradients(const std::function<num::Tensor()>& loss,
                                                     const num::ParamList& params, double h = 1e-5);

} // namespace spot::testing
