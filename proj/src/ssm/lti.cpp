#include "spot/ssm/lti.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace spot::ssm {

namespace {

void check_params(const SSMParams& p, const char* op) {
    const auto n = p.A.rows();
    if (p.A.cols() != n || p.B.size() != n || p.C.size() != n || n == 0) {
        throw std::invalid_argument(std::string(op) + ": inconsistent state dimensions");
    }
    if (!(p.delta >= 0.0) || !std::isfinite(p.delta)) {
        throw std::invalid_argument(std::string(op) + ": step size must be finite and non-negative");
    }
}

} // namespace

SSMParams SSMParams::diagonal(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::RowVectorXd& c,
                              double d, double delta) {
    SSMParams p;
    p.A = a.asDiagonal();
    p.B = b;
    p.C = c;
    p.D = d;
    p.delta = delta;
    return p;
}

bool SSMParams::is_diagonal() const {
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (i != j && A(i, j) != 0.0) return false;
    return true;
}

double DiscreteSSM::spectral_radius() const {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_bar, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double expm1_ratio(double z) {
    if (std::abs(z) < 1e-3) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
    return std::expm1(z) / z;
}

double expm1_ratio_derivative(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z * (1.0 / 3.0 + z * (0.125 + z / 30.0));
    return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

DiscreteSSM discretize_bilinear(const SSMParams& p) {
    check_params(p, "discretize_bilinear");
    const auto n = p.A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd lhs = I - 0.5 * p.delta * p.A;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? smax / smin : INFINITY;
    if (!(cond < 1e13)) {
        std::ostringstream os;
        os << "discretize_bilinear: I - delta/2*A is singular (condition number " << cond
           << ", smallest singular value " << smin << ")";
        throw SingularSystemError(os.str(), cond);
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    DiscreteSSM d;
    d.A_bar = lu.solve(I + 0.5 * p.delta * p.A);
    d.B_bar = lu.solve(p.delta * p.B);
    d.C_bar = p.C;
    d.D = p.D;
    return d;
}

DiscreteSSM discretize_zoh(const SSMParams& p) {
    check_params(p, "discretize_zoh");
    if (!p.is_diagonal()) throw std::invalid_argument("discretize_zoh: A must be diagonal");
    const auto n = p.A.rows();
    DiscreteSSM d;
    d.A_bar = Eigen::MatrixXd::Zero(n, n);
    d.B_bar.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z = p.delta * p.A(i, i);
        d.A_bar(i, i) = std::exp(z);
        d.B_bar(i) = p.delta * expm1_ratio(z) * p.B(i);
    }
    d.C_bar = p.C;
    d.D = p.D;
    return d;
}

std::vector<double> scan_recurrent(const DiscreteSSM& d, std::span<const double> x) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(d.A_bar.rows());
    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        h = d.A_bar * h + d.B_bar * x[t];
        y[t] = d.C_bar.dot(h) + d.D * x[t];
    }
    return y;
}

std::vector<double> build_kernel(const DiscreteSSM& d, std::size_t length) {
    if (length == 0) throw std::invalid_argument("build_kernel: length must be at least 1");
    std::vector<double> k(length);
    Eigen::VectorXd v = d.B_bar;
    for (std::size_t j = 0; j < length; ++j) {
        k[j] = d.C_bar.dot(v);
        v = d.A_bar * v;
    }
    return k;
}

std::vector<double> apply_kernel(std::span<const double> kernel, std::span<const double> x) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        const std::size_t taps = std::min(t + 1, kernel.size());
        double acc = 0.0;
        for (std::size_t j = 0; j < taps; ++j) acc += kernel[j] * x[t - j];
        y[t] = acc;
    }
    return y;
}

} // namespace spot::ssm
