#pragma once

#include "spot/numerics/layers.hpp"

#include <random>

namespace spot::ssm {

using num::Tensor;

/// Input-dependent SSM parameters over `channels` independent channels, each
/// with a diagonal state of size `state`.
///
///   delta_t = softplus((x_t W_delta_in) W_delta_out + bias_delta)   [channels]
///   B_t     = x_t W_B + bias_B                                        [state]
///   C_t     = x_t W_C + bias_C                                        [state]
///   A       = -softplus(A_raw)                                        [channels, state]
///
/// The step-size projection is low rank (`dt_rank`).
struct SelectiveParams {
    std::size_t channels = 0;
    std::size_t state = 0;
    std::size_t dt_rank = 0;

    Tensor A_raw;
    Tensor W_delta_in;
    Tensor W_delta_out;
    Tensor bias_delta;
    Tensor W_B;
    Tensor bias_B;
    Tensor W_C;
    Tensor bias_C;
    Tensor D_skip;

    /// A_raw gives -a log-spaced over [1, state]; delta starts in [1e-3, 1e-1].
    static SelectiveParams init(std::size_t channels, std::size_t state, std::size_t dt_rank, std::mt19937_64& rng);

    Tensor state_matrix() const;
    void collect(const std::string& prefix, num::ParamList& out) const;
};

/// Selective scan over x [S, L, channels]; strictly sequential in L.
Tensor selective_scan(const SelectiveParams& p, const Tensor& x);

/// Fused recurrence with ZOH per token:
///   h_t = exp(delta_t a) * h_{t-1} + (exp(delta_t a) - 1)/a * B_t * u_t
///   y_t = <C_t, h_t> + D * u_t
/// u, delta: [S, L, Ch]; A: [Ch, N]; B, C: [S, L, N]; D: [Ch].
Tensor selective_scan_core(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B,
                           const Tensor& C, const Tensor& D);

} // namespace spot::ssm
