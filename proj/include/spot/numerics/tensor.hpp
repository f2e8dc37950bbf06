#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spot::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major float64 array with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Use clone() for
/// a deep copy. A default-constructed Tensor is undefined (no storage).
// Eigen's vectorized kernels peel unaligned leading elements, which makes the
// summation order (and so the last bits of a GEMM) depend on the heap address.
// Fixed 64-byte alignment keeps results reproducible across runs.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);

    bool defined() const noexcept { return static_cast<bool>(node_); }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> data_mut() const;
    double item() const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool flag);

    bool has_grad() const;
    std::span<const double> grad() const;
    /// Allocates a zero gradient buffer if absent.
    std::span<double> grad_mut() const;
    void zero_grad() const;
    void clear_grad() const;

    /// Adds `values` into the gradient buffer, allocating it on first use.
    void accumulate_grad(std::span<const double> values) const;

    Tensor clone() const;
    /// Same values, no gradient history.
    Tensor detach() const;

    bool is_same(const Tensor& other) const noexcept { return node_ == other.node_; }

private:
    struct Node {
        Shape shape;
        Buffer data;
        Buffer grad;
        bool requires_grad = false;
    };

    std::shared_ptr<Node> node_;

    Node& node() const;
};

} // namespace spot::num
