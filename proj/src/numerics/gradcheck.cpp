#include "spot/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace spot::num {

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    Tensor grad(x.shape());
    Tensor probe = x.detach();
    auto p = probe.data_mut();
    auto g = grad.data_mut();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = f(probe);
        p[i] = orig - h;
        const double down = f(probe);
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

Tensor finite_difference_gradient(const std::function<double()>& f, const Tensor& param, double h) {
    Tensor grad(param.shape());
    auto p = param.data_mut();
    auto g = grad.data_mut();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = f();
        p[i] = orig - h;
        const double down = f();
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    double worst = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    if (a.size() != b.size()) return INFINITY;
    return worst;
}

} // namespace spot::num
