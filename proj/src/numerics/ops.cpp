#include "spot/numerics/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace spot::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_fail(const std::string& op, const Shape& a, const Shape& b) {
    throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

bool is_suffix(const Shape& whole, const Shape& part) {
    if (part.size() > whole.size()) return false;
    return std::equal(part.rbegin(), part.rend(), whole.rbegin());
}

// Size of the repeated block when b broadcasts over a's leading axes.
std::size_t broadcast_block(const std::string& op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return a.numel();
    if (!is_suffix(a.shape(), b.shape())) shape_fail(op, a.shape(), b.shape());
    return b.numel();
}

struct AxisSplit {
    std::size_t outer, extent, inner;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

void check_axis(const std::string& op, const Tensor& a, std::size_t axis) {
    if (axis >= a.rank()) {
        throw ShapeError(op + ": axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(a.shape()));
    }
}

template <class F, class D>
Tensor unary(const char* name, const Tensor& a, F f, D dydx) {
    Tensor out(a.shape());
    auto x = a.data();
    auto y = out.data_mut();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return record_op(name, {a}, out, [a, dydx](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto x = a.data();
        auto y = o.data();
        auto gy = o.grad();
        auto gx = a.grad_mut();
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * dydx(x[i], y[i]);
    });
}

} // namespace

double sigmoid_value(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_value(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

Tensor add(const Tensor& a, const Tensor& b) {
    const std::size_t block = broadcast_block("add", a, b);
    Tensor out(a.shape());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data_mut();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i % block];
    return record_op("add", {a, b}, out, [a, b, block](const Tensor& o) {
        auto g = o.grad();
        if (a.requires_grad()) a.accumulate_grad(g);
        if (b.requires_grad()) {
            auto gb = b.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % block] += g[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const std::size_t block = broadcast_block("sub", a, b);
    Tensor out(a.shape());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data_mut();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i % block];
    return record_op("sub", {a, b}, out, [a, b, block](const Tensor& o) {
        auto g = o.grad();
        if (a.requires_grad()) a.accumulate_grad(g);
        if (b.requires_grad()) {
            auto gb = b.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % block] -= g[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const std::size_t block = broadcast_block("mul", a, b);
    Tensor out(a.shape());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data_mut();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i % block];
    return record_op("mul", {a, b}, out, [a, b, block](const Tensor& o) {
        auto g = o.grad();
        auto x = a.data();
        auto y = b.data();
        if (a.requires_grad()) {
            auto ga = a.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i % block];
        }
        if (b.requires_grad()) {
            auto gb = b.grad_mut();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % block] += g[i] * x[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary(
        "scale", a, [factor](double x) { return factor * x; },
        [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
    return unary(
        "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2) shape_fail("matmul", a.shape(), b.shape());
    const std::size_t m = a.dim(a.rank() - 2);
    const std::size_t k = a.dim(a.rank() - 1);
    const std::size_t kb = b.dim(b.rank() - 2);
    const std::size_t n = b.dim(b.rank() - 1);
    if (k != kb) shape_fail("matmul", a.shape(), b.shape());

    const bool weight_form = b.rank() == 2;
    if (!weight_form) {
        if (a.rank() != b.rank() ||
            !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin())) {
            shape_fail("matmul", a.shape(), b.shape());
        }
    }
    const std::size_t batch = a.numel() / (m * k);
    Shape out_shape = a.shape();
    out_shape.back() = n;
    Tensor out(out_shape);

    if (weight_form) {
        const std::size_t rows = batch * m;
        MatMap(out.data_mut().data(), rows, n).noalias() =
            ConstMatMap(a.data().data(), rows, k) * ConstMatMap(b.data().data(), k, n);
    } else {
        for (std::size_t p = 0; p < batch; ++p) {
            MatMap(out.data_mut().data() + p * m * n, m, n).noalias() =
                ConstMatMap(a.data().data() + p * m * k, m, k) *
                ConstMatMap(b.data().data() + p * k * n, k, n);
        }
    }

    return record_op("matmul", {a, b}, out, [a, b, m, k, n, batch, weight_form](const Tensor& o) {
        const double* g = o.grad().data();
        if (weight_form) {
            const std::size_t rows = batch * m;
            ConstMatMap G(g, rows, n);
            if (a.requires_grad()) {
                MatMap(a.grad_mut().data(), rows, k).noalias() +=
                    G * ConstMatMap(b.data().data(), k, n).transpose();
            }
            if (b.requires_grad()) {
                MatMap(b.grad_mut().data(), k, n).noalias() +=
                    ConstMatMap(a.data().data(), rows, k).transpose() * G;
            }
            return;
        }
        for (std::size_t p = 0; p < batch; ++p) {
            ConstMatMap G(g + p * m * n, m, n);
            if (a.requires_grad()) {
                MatMap(a.grad_mut().data() + p * m * k, m, k).noalias() +=
                    G * ConstMatMap(b.data().data() + p * k * n, k, n).transpose();
            }
            if (b.requires_grad()) {
                MatMap(b.grad_mut().data() + p * k * n, k, n).noalias() +=
                    ConstMatMap(a.data().data() + p * m * k, m, k).transpose() * G;
            }
        }
    });
}

namespace {

// Gather map for a permutation: out[i] = in[src[i]].
std::vector<std::size_t> permutation_sources(const Shape& in_shape, const std::vector<std::size_t>& axes) {
    const std::size_t r = in_shape.size();
    std::vector<std::size_t> in_stride(r, 1);
    for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in_shape[i];
    Shape out_shape(r);
    std::vector<std::size_t> stride(r);
    for (std::size_t i = 0; i < r; ++i) {
        out_shape[i] = in_shape[axes[i]];
        stride[i] = in_stride[axes[i]];
    }
    const std::size_t total = shape_numel(in_shape);
    std::vector<std::size_t> src(total);
    std::vector<std::size_t> idx(r, 0);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < total; ++i) {
        src[i] = offset;
        for (std::size_t d = r; d-- > 0;) {
            ++idx[d];
            offset += stride[d];
            if (idx[d] < out_shape[d]) break;
            offset -= stride[d] * idx[d];
            idx[d] = 0;
        }
    }
    return src;
}

} // namespace

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
    const std::size_t r = a.rank();
    std::vector<std::size_t> check = axes;
    std::sort(check.begin(), check.end());
    bool valid = check.size() == r;
    for (std::size_t i = 0; valid && i < r; ++i) valid = check[i] == i;
    if (!valid) {
        throw ShapeError("permute: axes do not form a permutation of shape " + shape_str(a.shape()));
    }
    Shape out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = a.dim(axes[i]);
    auto src = permutation_sources(a.shape(), axes);
    Tensor out(out_shape);
    auto x = a.data();
    auto y = out.data_mut();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[src[i]];
    return record_op("permute", {a}, out, [a, src = std::move(src)](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto g = o.grad();
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < g.size(); ++i) ga[src[i]] += g[i];
    });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() < 2) throw ShapeError("transpose: needs rank >= 2, got " + shape_str(a.shape()));
    std::vector<std::size_t> axes(a.rank());
    std::iota(axes.begin(), axes.end(), 0);
    std::swap(axes[a.rank() - 1], axes[a.rank() - 2]);
    return permute(a, axes);
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) shape_fail("reshape", a.shape(), shape);
    Tensor out(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
    return record_op("reshape", {a}, out, [a](const Tensor& o) {
        if (a.requires_grad()) a.accumulate_grad(o.grad());
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    check_axis("concat", parts[0], axis);
    Shape out_shape = parts[0].shape();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != out_shape.size()) shape_fail("concat", parts[0].shape(), p.shape());
        for (std::size_t d = 0; d < out_shape.size(); ++d) {
            if (d != axis && p.dim(d) != out_shape[d]) shape_fail("concat", parts[0].shape(), p.shape());
        }
        total += p.dim(axis);
    }
    out_shape[axis] = total;
    const auto split = split_at(out_shape, axis);
    Tensor out(out_shape);
    auto y = out.data_mut();
    std::vector<std::size_t> widths;
    for (const auto& p : parts) widths.push_back(p.dim(axis) * split.inner);
    const std::size_t row = total * split.inner;
    std::size_t col = 0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        auto x = parts[j].data();
        for (std::size_t o = 0; o < split.outer; ++o) {
            std::copy_n(x.begin() + o * widths[j], widths[j], y.begin() + o * row + col);
        }
        col += widths[j];
    }
    return record_op("concat", parts, out, [parts, widths, row, outer = split.outer](const Tensor& o) {
        auto g = o.grad();
        std::size_t col = 0;
        for (std::size_t j = 0; j < parts.size(); ++j) {
            if (parts[j].requires_grad()) {
                auto gx = parts[j].grad_mut();
                for (std::size_t r = 0; r < outer; ++r) {
                    for (std::size_t i = 0; i < widths[j]; ++i) gx[r * widths[j] + i] += g[r * row + col + i];
                }
            }
            col += widths[j];
        }
    });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
    check_axis("slice", a, axis);
    if (begin >= end || end > a.dim(axis)) {
        throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of shape " + shape_str(a.shape()));
    }
    const auto split = split_at(a.shape(), axis);
    Shape out_shape = a.shape();
    out_shape[axis] = end - begin;
    Tensor out(out_shape);
    const std::size_t in_row = split.extent * split.inner;
    const std::size_t width = (end - begin) * split.inner;
    const std::size_t offset = begin * split.inner;
    auto x = a.data();
    auto y = out.data_mut();
    for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(x.begin() + o * in_row + offset, width, y.begin() + o * width);
    }
    return record_op("slice", {a}, out, [a, in_row, width, offset, outer = split.outer](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto g = o.grad();
        auto ga = a.grad_mut();
        for (std::size_t r = 0; r < outer; ++r) {
            for (std::size_t i = 0; i < width; ++i) ga[r * in_row + offset + i] += g[r * width + i];
        }
    });
}

Tensor reverse(const Tensor& a, std::size_t axis) {
    check_axis("reverse", a, axis);
    const auto s = split_at(a.shape(), axis);
    Tensor out(a.shape());
    auto x = a.data();
    auto y = out.data_mut();
    auto src = [s](std::size_t o, std::size_t j) { return (o * s.extent + (s.extent - 1 - j)) * s.inner; };
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.extent; ++j) {
            std::copy_n(x.begin() + src(o, j), s.inner, y.begin() + (o * s.extent + j) * s.inner);
        }
    }
    return record_op("reverse", {a}, out, [a, s, src](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto g = o.grad();
        auto ga = a.grad_mut();
        for (std::size_t r = 0; r < s.outer; ++r) {
            for (std::size_t j = 0; j < s.extent; ++j) {
                const std::size_t from = (r * s.extent + j) * s.inner;
                const std::size_t to = src(r, j);
                for (std::size_t i = 0; i < s.inner; ++i) ga[to + i] += g[from + i];
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    auto x = a.data();
    Tensor out = Tensor::scalar(std::accumulate(x.begin(), x.end(), 0.0));
    return record_op("sum", {a}, out, [a](const Tensor& o) {
        if (!a.requires_grad()) return;
        const double g = o.grad()[0];
        for (auto& v : a.grad_mut()) v += g;
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum(const Tensor& a, std::size_t axis) {
    check_axis("sum", a, axis);
    const auto s = split_at(a.shape(), axis);
    Shape out_shape = a.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    Tensor out(out_shape);
    auto x = a.data();
    auto y = out.data_mut();
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.extent; ++j) {
            const double* row = x.data() + (o * s.extent + j) * s.inner;
            double* dst = y.data() + o * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += row[i];
        }
    }
    return record_op("sum_axis", {a}, out, [a, s](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto g = o.grad();
        auto ga = a.grad_mut();
        for (std::size_t r = 0; r < s.outer; ++r) {
            for (std::size_t j = 0; j < s.extent; ++j) {
                double* dst = ga.data() + (r * s.extent + j) * s.inner;
                const double* src = g.data() + r * s.inner;
                for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
            }
        }
    });
}

Tensor mean(const Tensor& a, std::size_t axis) {
    check_axis("mean", a, axis);
    return scale(sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor exp(const Tensor& a) {
    return unary(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary(
        "sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        "sigmoid", a, [](double x) { return sigmoid_value(x); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& a) {
    return unary(
        "silu", a, [](double x) { return x * sigmoid_value(x); },
        [](double x, double) {
            const double s = sigmoid_value(x);
            return s * (1.0 + x * (1.0 - s));
        });
}

Tensor softplus(const Tensor& a) {
    return unary(
        "softplus", a, [](double x) { return softplus_value(x); },
        [](double x, double) { return sigmoid_value(x); });
}

Tensor tanh(const Tensor& a) {
    return unary(
        "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& a) {
    if (a.rank() == 0) throw ShapeError("softmax: needs rank >= 1");
    const std::size_t n = a.shape().back();
    const std::size_t rows = a.numel() / n;
    Tensor out(a.shape());
    auto x = a.data();
    auto y = out.data_mut();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * n;
        double* yr = y.data() + r * n;
        const double mx = *std::max_element(xr, xr + n);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            z += yr[i];
        }
        for (std::size_t i = 0; i < n; ++i) yr[i] /= z;
    }
    return record_op("softmax", {a}, out, [a, n, rows](const Tensor& o) {
        if (!a.requires_grad()) return;
        auto y = o.data();
        auto g = o.grad();
        auto ga = a.grad_mut();
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * n;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += g[base + i] * y[base + i];
            for (std::size_t i = 0; i < n; ++i) ga[base + i] += y[base + i] * (g[base + i] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    if (x.rank() == 0) throw ShapeError("layer_norm: needs rank >= 1");
    const std::size_t n = x.shape().back();
    const Shape row_shape{n};
    if (gamma.defined() && gamma.shape() != row_shape) shape_fail("layer_norm", x.shape(), gamma.shape());
    if (beta.defined() && beta.shape() != row_shape) shape_fail("layer_norm", x.shape(), beta.shape());
    const std::size_t rows = x.numel() / n;

    std::vector<double> xhat(x.numel());
    std::vector<double> rstd(rows);
    Tensor out(x.shape());
    auto xs = x.data();
    auto y = out.data_mut();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xs.data() + r * n;
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += xr[i];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mu) * (xr[i] - mu);
        var /= static_cast<double>(n);
        rstd[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < n; ++i) {
            const double h = (xr[i] - mu) * rstd[r];
            xhat[r * n + i] = h;
            double v = h;
            if (gamma.defined()) v *= gamma.data()[i];
            if (beta.defined()) v += beta.data()[i];
            y[r * n + i] = v;
        }
    }

    std::vector<Tensor> inputs{x};
    if (gamma.defined()) inputs.push_back(gamma);
    if (beta.defined()) inputs.push_back(beta);
    return record_op(
        "layer_norm", std::move(inputs), out,
        [x, gamma, beta, n, rows, xhat = std::move(xhat), rstd = std::move(rstd)](const Tensor& o) {
            auto g = o.grad();
            if (gamma.defined() && gamma.requires_grad()) {
                auto gg = gamma.grad_mut();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t i = 0; i < n; ++i) gg[i] += g[r * n + i] * xhat[r * n + i];
            }
            if (beta.defined() && beta.requires_grad()) {
                auto gb = beta.grad_mut();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t i = 0; i < n; ++i) gb[i] += g[r * n + i];
            }
            if (!x.requires_grad()) return;
            auto gx = x.grad_mut();
            std::vector<double> gh(n);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_gh = 0.0;
                double mean_ghx = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    gh[i] = g[r * n + i] * (gamma.defined() ? gamma.data()[i] : 1.0);
                    mean_gh += gh[i];
                    mean_ghx += gh[i] * xhat[r * n + i];
                }
                mean_gh /= static_cast<double>(n);
                mean_ghx /= static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i) {
                    gx[r * n + i] += rstd[r] * (gh[i] - mean_gh - xhat[r * n + i] * mean_ghx);
                }
            }
        });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0, 1)");
    if (p == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - p);
    const double factor = 1.0 / (1.0 - p);
    std::vector<double> mask(x.numel());
    for (auto& m : mask) m = keep(rng) ? factor : 0.0;
    Tensor out(x.shape());
    auto xs = x.data();
    auto y = out.data_mut();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = xs[i] * mask[i];
    return record_op("dropout", {x}, out, [x, mask = std::move(mask)](const Tensor& o) {
        if (!x.requires_grad()) return;
        auto g = o.grad();
        auto gx = x.grad_mut();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> indices, Shape index_shape) {
    if (table.rank() != 2) throw ShapeError("embedding: table must be rank 2, got " + shape_str(table.shape()));
    if (shape_numel(index_shape) != indices.size()) {
        throw ShapeError("embedding: index shape " + shape_str(index_shape) + " does not match " +
                         std::to_string(indices.size()) + " indices");
    }
    const std::size_t rows = table.dim(0);
    const std::size_t d = table.dim(1);
    for (auto i : indices) {
        if (i >= rows) {
            throw std::out_of_range("embedding: index " + std::to_string(i) + " out of range for table " +
                                    shape_str(table.shape()));
        }
    }
    Shape out_shape = std::move(index_shape);
    out_shape.push_back(d);
    Tensor out(out_shape);
    auto t = table.data();
    auto y = out.data_mut();
    for (std::size_t j = 0; j < indices.size(); ++j) {
        std::copy_n(t.begin() + indices[j] * d, d, y.begin() + j * d);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return record_op("embedding", {table}, out, [table, d, idx = std::move(idx)](const Tensor& o) {
        if (!table.requires_grad()) return;
        auto g = o.grad();
        auto gt = table.grad_mut();
        for (std::size_t j = 0; j < idx.size(); ++j) {
            for (std::size_t c = 0; c < d; ++c) gt[idx[j] * d + c] += g[j * d + c];
        }
    });
}

Tensor causal_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 3 || weight.rank() != 2 || weight.dim(0) != x.dim(2)) {
        shape_fail("causal_conv1d", x.shape(), weight.shape());
    }
    if (bias.shape() != Shape{x.dim(2)}) shape_fail("causal_conv1d", x.shape(), bias.shape());
    const std::size_t S = x.dim(0), L = x.dim(1), C = x.dim(2), W = weight.dim(1);
    Tensor out(x.shape());
    auto xs = x.data();
    auto w = weight.data();
    auto b = bias.data();
    auto y = out.data_mut();
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t t = 0; t < L; ++t) {
            double* yr = y.data() + (s * L + t) * C;
            for (std::size_t c = 0; c < C; ++c) yr[c] = b[c];
            for (std::size_t j = 0; j < W; ++j) {
                if (t + j + 1 < W) continue;
                const std::size_t src = t + j + 1 - W;
                const double* xr = xs.data() + (s * L + src) * C;
                for (std::size_t c = 0; c < C; ++c) yr[c] += w[c * W + j] * xr[c];
            }
        }
    }
    return record_op("causal_conv1d", {x, weight, bias}, out, [x, weight, bias, S, L, C, W](const Tensor& o) {
        auto g = o.grad();
        auto xs = x.data();
        auto w = weight.data();
        if (bias.requires_grad()) {
            auto gb = bias.grad_mut();
            for (std::size_t r = 0; r < S * L; ++r)
                for (std::size_t c = 0; c < C; ++c) gb[c] += g[r * C + c];
        }
        const bool need_x = x.requires_grad();
        const bool need_w = weight.requires_grad();
        if (!need_x && !need_w) return;
        std::span<double> gx = need_x ? x.grad_mut() : std::span<double>{};
        std::span<double> gw = need_w ? weight.grad_mut() : std::span<double>{};
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t t = 0; t < L; ++t) {
                const double* gr = g.data() + (s * L + t) * C;
                for (std::size_t j = 0; j < W; ++j) {
                    if (t + j + 1 < W) continue;
                    const std::size_t src = (s * L + t + j + 1 - W) * C;
                    for (std::size_t c = 0; c < C; ++c) {
                        if (need_x) gx[src + c] += gr[c] * w[c * W + j];
                        if (need_w) gw[c * W + j] += gr[c] * xs[src + c];
                    }
                }
            }
        }
    });
}

} // namespace spot::num
