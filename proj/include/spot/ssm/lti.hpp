#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

namespace spot::ssm {

/// Continuous single-input single-output system h' = A h + B x, y = C h + D x.
struct SSMParams {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
    double delta = 1.0;

    static SSMParams diagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::RowVectorXd& c,
                              double d, double delta);
    std::size_t state_size() const { return static_cast<std::size_t>(A.rows()); }
    bool is_diagonal() const;
};

struct DiscreteSSM {
    Eigen::MatrixXd A_bar;
    Eigen::VectorXd B_bar;
    Eigen::RowVectorXd C_bar;
    double D = 0.0;

    std::size_t state_size() const { return static_cast<std::size_t>(A_bar.rows()); }
    double spectral_radius() const;
};

class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Bilinear (Tustin) discretization:
///   A_bar = (I - dt/2 A)^-1 (I + dt/2 A),  B_bar = (I - dt/2 A)^-1 dt B.
/// Throws SingularSystemError when I - dt/2 A is numerically singular.
DiscreteSSM discretize_bilinear(const SSMParams& p);

/// Zero-order hold on a diagonal A: a_bar = exp(dt a), b_bar = (exp(dt a) - 1)/a * b,
/// with the a -> 0 limit b_bar = dt b.
DiscreteSSM discretize_zoh(const SSMParams& p);

/// h_t = A_bar h_{t-1} + B_bar x_t, y_t = C_bar h_t + D x_t, from h_0 = 0.
std::vector<double> scan_recurrent(const DiscreteSSM& d, std::span<const double> x);

/// K[j] = C_bar A_bar^j B_bar for j < length.
std::vector<double> build_kernel(const DiscreteSSM& d, std::size_t length);

/// Causal convolution y_t = sum_{j<=t} K[j] x_{t-j}, zero left padding.
std::vector<double> apply_kernel(std::span<const double> kernel, std::span<const double> x);

/// (exp(z) - 1) / z, continuous at z = 0.
double expm1_ratio(double z);
/// Derivative of expm1_ratio.
double expm1_ratio_derivative(double z);

} // namespace spot::ssm
