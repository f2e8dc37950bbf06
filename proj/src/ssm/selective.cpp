#include "spot/ssm/selective.hpp"

#include "spot/ssm/lti.hpp"

#include <Eigen/Core>

#include <cmath>

namespace spot::ssm {

using num::Shape;

namespace {

// Discretization factors for one sequence: abar = exp(z) and
// phi = expm1(z)/z with z = delta[t, c] * A[c, n], laid out [L, C, N].
void discretize_sequence(const double* delta, const double* A, std::size_t L, std::size_t C, std::size_t N,
                         double* abar, double* phi) {
    const std::size_t n_el = L * C * N;
    Eigen::Map<Eigen::ArrayXd> z(phi, static_cast<Eigen::Index>(n_el));
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t n = 0; n < N; ++n) phi[(t * C + c) * N + n] = delta[t * C + c] * A[c * N + n];
    Eigen::Map<Eigen::ArrayXd>(abar, static_cast<Eigen::Index>(n_el)) = z.exp();
    for (std::size_t i = 0; i < n_el; ++i) {
        const double zi = phi[i];
        // Near zero the quotient cancels; the series is exact to rounding there.
        phi[i] = std::abs(zi) < 1e-3 ? 1.0 + zi * (0.5 + zi * (1.0 / 6.0 + zi / 24.0)) : (abar[i] - 1.0) / zi;
    }
}

// d/dz of expm1(z)/z given the factors above.
inline double zoh_phi_derivative(double z, double abar, double phi) {
    if (std::abs(z) < 1e-3) return 0.5 + z * (1.0 / 3.0 + z * (0.125 + z / 30.0));
    return (abar - phi) / z;
}

} // namespace

SelectiveParams SelectiveParams::init(std::size_t channels, std::size_t state, std::size_t dt_rank,
                                      std::mt19937_64& rng) {
    SelectiveParams p;
    p.channels = channels;
    p.state = state;
    p.dt_rank = dt_rank;

    Tensor a_raw({channels, state});
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t n = 0; n < state; ++n) {
            const double frac = state > 1 ? static_cast<double>(n) / static_cast<double>(state - 1) : 0.0;
            const double decay = std::exp(frac * std::log(static_cast<double>(state)));
            a_raw.data_mut()[c * state + n] = std::log(std::expm1(decay));
        }
    }
    p.A_raw = num::make_parameter(a_raw);

    const double in_bound = 1.0 / std::sqrt(static_cast<double>(channels));
    p.W_delta_in = num::make_parameter(num::uniform_tensor({channels, dt_rank}, in_bound, rng));
    p.W_delta_out = num::make_parameter(
        num::uniform_tensor({dt_rank, channels}, 1.0 / std::sqrt(static_cast<double>(dt_rank)), rng));

    Tensor dt_bias({channels});
    std::uniform_real_distribution<double> u(std::log(1e-3), std::log(1e-1));
    for (auto& v : dt_bias.data_mut()) {
        const double dt = std::exp(u(rng));
        v = dt + std::log(-std::expm1(-dt)); // softplus^-1
    }
    p.bias_delta = num::make_parameter(dt_bias);

    p.W_B = num::make_parameter(num::uniform_tensor({channels, state}, in_bound, rng));
    p.bias_B = num::make_parameter(Tensor({state}, 0.0));
    p.W_C = num::make_parameter(num::uniform_tensor({channels, state}, in_bound, rng));
    p.bias_C = num::make_parameter(Tensor({state}, 0.0));
    p.D_skip = num::make_parameter(Tensor({channels}, 1.0));
    return p;
}

Tensor SelectiveParams::state_matrix() const { return num::neg(num::softplus(A_raw)); }

void SelectiveParams::collect(const std::string& prefix, num::ParamList& out) const {
    out.push_back({prefix + ".A_raw", A_raw});
    out.push_back({prefix + ".W_delta_in", W_delta_in});
    out.push_back({prefix + ".W_delta_out", W_delta_out});
    out.push_back({prefix + ".bias_delta", bias_delta});
    out.push_back({prefix + ".W_B", W_B});
    out.push_back({prefix + ".bias_B", bias_B});
    out.push_back({prefix + ".W_C", W_C});
    out.push_back({prefix + ".bias_C", bias_C});
    out.push_back({prefix + ".D_skip", D_skip});
}

Tensor selective_scan(const SelectiveParams& p, const Tensor& x) {
    if (x.rank() != 3 || x.dim(2) != p.channels) {
        throw num::ShapeError("selective_scan: expected [S, L, " + std::to_string(p.channels) + "], got " +
                              num::shape_str(x.shape()));
    }
    Tensor delta = num::softplus(num::add(num::matmul(num::matmul(x, p.W_delta_in), p.W_delta_out), p.bias_delta));
    Tensor B = num::add(num::matmul(x, p.W_B), p.bias_B);
    Tensor C = num::add(num::matmul(x, p.W_C), p.bias_C);
    return selective_scan_core(x, delta, p.state_matrix(), B, C, p.D_skip);
}

Tensor selective_scan_core(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B,
                           const Tensor& C, const Tensor& D) {
    if (u.rank() != 3 || delta.shape() != u.shape() || A.rank() != 2 || A.dim(0) != u.dim(2)) {
        throw num::ShapeError("selective_scan_core: incompatible shapes " + num::shape_str(u.shape()) + " and " +
                              num::shape_str(A.shape()));
    }
    const std::size_t S = u.dim(0), L = u.dim(1), Ch = u.dim(2), N = A.dim(1);
    const Shape bc_shape{S, L, N};
    if (B.shape() != bc_shape || C.shape() != bc_shape || D.shape() != Shape{Ch}) {
        throw num::ShapeError("selective_scan_core: incompatible shapes " + num::shape_str(B.shape()) + " and " +
                              num::shape_str(bc_shape));
    }

    Tensor out(u.shape());
    {
        auto us = u.data();
        auto ds = delta.data();
        auto as = A.data();
        auto bs = B.data();
        auto cs = C.data();
        auto dsk = D.data();
        auto y = out.data_mut();
        std::vector<double> h(Ch * N);
        num::Buffer abars(L * Ch * N), phis(L * Ch * N);
        for (std::size_t s = 0; s < S; ++s) {
            discretize_sequence(ds.data() + s * L * Ch, as.data(), L, Ch, N, abars.data(), phis.data());
            std::fill(h.begin(), h.end(), 0.0);
            for (std::size_t t = 0; t < L; ++t) {
                const std::size_t tok = s * L + t;
                const double* bt = bs.data() + tok * N;
                const double* ct = cs.data() + tok * N;
                for (std::size_t c = 0; c < Ch; ++c) {
                    const double dt = ds[tok * Ch + c];
                    const double uu = us[tok * Ch + c];
                    double* hc = h.data() + c * N;
                    const double* ab = abars.data() + (t * Ch + c) * N;
                    const double* ph = phis.data() + (t * Ch + c) * N;
                    double acc = 0.0;
                    for (std::size_t n = 0; n < N; ++n) {
                        hc[n] = ab[n] * hc[n] + dt * ph[n] * bt[n] * uu;
                        acc += ct[n] * hc[n];
                    }
                    y[tok * Ch + c] = acc + dsk[c] * uu;
                }
            }
        }
    }

    return num::record_op("selective_scan", {u, delta, A, B, C, D}, out, [=](const Tensor& o) {
        auto gy = o.grad();
        auto us = u.data();
        auto ds = delta.data();
        auto as = A.data();
        auto bs = B.data();
        auto cs = C.data();
        auto dsk = D.data();
        // Gradients are accumulated locally then flushed for inputs that need them.
        std::vector<double> gu(us.size(), 0.0), gdelta(ds.size(), 0.0), gA(as.size(), 0.0);
        std::vector<double> gB(bs.size(), 0.0), gC(cs.size(), 0.0), gD(dsk.size(), 0.0);

        std::vector<double> hist((L + 1) * Ch * N);
        // Per-step discretization factors cached by the replay.
        num::Buffer abars(L * Ch * N), phis(L * Ch * N);
        std::vector<double> gh(Ch * N);
        for (std::size_t s = 0; s < S; ++s) {
            // Replay the forward recurrence to recover h_0..h_L for this sequence.
            std::fill(hist.begin(), hist.begin() + Ch * N, 0.0);
            discretize_sequence(ds.data() + s * L * Ch, as.data(), L, Ch, N, abars.data(), phis.data());
            for (std::size_t t = 0; t < L; ++t) {
                const std::size_t tok = s * L + t;
                const double* bt = bs.data() + tok * N;
                const double* prev = hist.data() + t * Ch * N;
                double* cur = hist.data() + (t + 1) * Ch * N;
                for (std::size_t c = 0; c < Ch; ++c) {
                    const double dt = ds[tok * Ch + c];
                    const double uu = us[tok * Ch + c];
                    const double* ab = abars.data() + (t * Ch + c) * N;
                    const double* ph = phis.data() + (t * Ch + c) * N;
                    for (std::size_t n = 0; n < N; ++n) {
                        cur[c * N + n] = ab[n] * prev[c * N + n] + dt * ph[n] * bt[n] * uu;
                    }
                }
            }

            std::fill(gh.begin(), gh.end(), 0.0);
            for (std::size_t t = L; t-- > 0;) {
                const std::size_t tok = s * L + t;
                const double* bt = bs.data() + tok * N;
                const double* ct = cs.data() + tok * N;
                const double* prev = hist.data() + t * Ch * N;
                const double* cur = hist.data() + (t + 1) * Ch * N;
                for (std::size_t c = 0; c < Ch; ++c) {
                    const std::size_t ic = tok * Ch + c;
                    const double g = gy[ic];
                    const double dt = ds[ic];
                    const double uu = us[ic];
                    gD[c] += g * uu;
                    gu[ic] += g * dsk[c];
                    double g_dt = 0.0;
                    const double* ab = abars.data() + (t * Ch + c) * N;
                    const double* ph = phis.data() + (t * Ch + c) * N;
                    for (std::size_t n = 0; n < N; ++n) {
                        const std::size_t k = c * N + n;
                        gC[tok * N + n] += g * cur[k];
                        double ghk = gh[k] + ct[n] * g;
                        const double a = as[k];
                        const double z = dt * a;
                        const double abar = ab[n];
                        const double phi = ph[n];
                        const double beta = dt * phi;
                        const double g_beta = ghk * bt[n] * uu;
                        gB[tok * N + n] += ghk * beta * uu;
                        gu[ic] += ghk * beta * bt[n];
                        const double gz = ghk * prev[k] * abar + g_beta * dt * zoh_phi_derivative(z, abar, phi);
                        g_dt += g_beta * phi + gz * a;
                        gA[k] += gz * dt;
                        gh[k] = ghk * abar;
                    }
                    gdelta[ic] += g_dt;
                }
            }
        }
        if (u.requires_grad()) u.accumulate_grad(gu);
        if (delta.requires_grad()) delta.accumulate_grad(gdelta);
        if (A.requires_grad()) A.accumulate_grad(gA);
        if (B.requires_grad()) B.accumulate_grad(gB);
        if (C.requires_grad()) C.accumulate_grad(gC);
        if (D.requires_grad()) D.accumulate_grad(gD);
    });
}

} // namespace spot::ssm
