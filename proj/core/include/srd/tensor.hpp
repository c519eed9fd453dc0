#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace srd {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Thrown when operand shapes are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown on NaN/Inf inputs or results.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct TensorImpl;

// One operation in the computation graph. `backward` reads the output's grad
// and accumulates into the grads of `inputs`.
struct Node {
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void(TensorImpl& out)> backward;
    const char* name = "";
};

struct TensorImpl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until needed
    bool requires_grad = false;
    std::shared_ptr<Node> node;

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

/// Dense row-major double tensor with reverse-mode differentiation.
///
/// Tensors are handles: copying a Tensor shares the underlying buffer. Leaf
/// tensors created with requires_grad=true get a zero-filled grad buffer right
/// away; backward() accumulates into it until zero_grad() is called.
///
/// An operation records a graph node only when at least one operand requires
/// grad, so forward passes through frozen parameters build no graph.
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// Builds a tensor with a graph node; used by op implementations.
    static Tensor from_op(Shape shape, std::vector<double> values,
                          std::vector<Tensor> inputs, const char* name,
                          std::function<void(detail::TensorImpl&)> backward);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->values.size(); }
    /// Size of the last dimension (1 for scalars).
    std::size_t cols() const;
    /// Product of all leading dimensions (numel / cols).
    std::size_t rows() const;

    std::span<const double> values() const { return impl_->values; }
    std::span<double> mutable_values() { return impl_->values; }
    double item() const;
    double at(std::size_t row, std::size_t col) const { return impl_->values[row * cols() + col]; }

    bool requires_grad() const { return impl_->requires_grad; }
    /// Only meaningful on leaves; allocates the grad buffer when enabled.
    void set_requires_grad(bool flag);
    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const { return impl_->grad; }
    std::span<double> mutable_grad();
    void zero_grad();

    bool is_leaf() const { return impl_->node == nullptr; }
    /// Same values, no graph link, no grad requirement. Copies the buffer.
    Tensor detach() const;
    /// Deep copy, preserving requires_grad for leaves.
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// Runs reverse-mode differentiation from a scalar loss.
///
/// Leaf grads accumulate across calls; intermediate grads are reset at the
/// start of every call. Returns the number of graph nodes visited, which is
/// exactly the number of distinct nodes reachable from `loss`.
std::size_t backward(const Tensor& loss);

}  // namespace srd
