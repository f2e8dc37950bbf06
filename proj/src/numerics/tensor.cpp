#include "spot/numerics/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace spot::num {

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<Node>()) {
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
    node_->data.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<Node>()) {
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor shape " + shape_str(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->data.assign(values.begin(), values.end());
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor::Node& Tensor::node() const {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return node().data.size(); }

std::span<const double> Tensor::data() const { return node().data; }
std::span<double> Tensor::data_mut() const { return node().data; }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node().data[0];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    node().requires_grad = flag;
    return *this;
}

bool Tensor::has_grad() const { return !node().grad.empty(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw std::logic_error("tensor " + shape_str(shape()) + " has no gradient");
    return node().grad;
}

std::span<double> Tensor::grad_mut() const {
    auto& n = node();
    if (n.grad.empty()) n.grad.assign(n.data.size(), 0.0);
    return n.grad;
}

void Tensor::zero_grad() const {
    auto& n = node();
    if (!n.grad.empty()) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Tensor::clear_grad() const {
    auto& n = node();
    n.grad.clear();
    n.grad.shrink_to_fit();
}

void Tensor::accumulate_grad(std::span<const double> values) const {
    auto g = grad_mut();
    if (g.size() != values.size()) {
        throw ShapeError("gradient size mismatch for tensor " + shape_str(shape()));
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

Tensor Tensor::clone() const {
    Tensor t;
    t.node_ = std::make_shared<Node>(node());
    return t;
}

Tensor Tensor::detach() const {
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = shape();
    t.node_->data = node().data;
    return t;
}

} // namespace spot::num
