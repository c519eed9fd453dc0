#include "srd/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace srd {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match buffer of " +
                             std::to_string(values.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    set_requires_grad(requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::from_op(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                       const char* name, std::function<void(detail::TensorImpl&)> backward) {
    Tensor out(std::move(shape), std::move(values));
    bool needs_graph = false;
    for (const auto& in : inputs) needs_graph = needs_graph || in.requires_grad();
    if (!needs_graph) return out;

    auto node = std::make_shared<detail::Node>();
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.impl_);
    node->backward = std::move(backward);
    node->name = name;
    out.impl_->node = std::move(node);
    out.impl_->requires_grad = true;
    return out;
}

std::size_t Tensor::cols() const {
    return impl_->shape.empty() ? 1 : impl_->shape.back();
}

std::size_t Tensor::rows() const {
    return numel() / cols();
}

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() needs a single-element tensor, got " + shape_to_string(shape()));
    return impl_->values[0];
}

void Tensor::set_requires_grad(bool flag) {
    impl_->requires_grad = flag;
    if (flag && is_leaf()) {
        impl_->ensure_grad();
    } else if (!flag) {
        impl_->grad.clear();
    }
}

std::span<double> Tensor::mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
}

void Tensor::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    return Tensor(impl_->shape, impl_->values, false);
}

Tensor Tensor::clone() const {
    return Tensor(impl_->shape, impl_->values, impl_->requires_grad && is_leaf());
}

std::size_t backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw DimensionError("backward() needs a scalar loss, got " + shape_to_string(loss.shape()));
    }
    if (!loss.requires_grad()) return 0;

    using Impl = detail::TensorImpl;
    // Iterative post-order DFS gives a topological order (inputs before outputs).
    std::vector<Impl*> order;
    std::unordered_set<Impl*> seen;
    std::vector<std::pair<Impl*, std::size_t>> stack;
    Impl* root = loss.impl().get();
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
        auto& [impl, next] = stack.back();
        if (impl->node && next < impl->node->inputs.size()) {
            Impl* child = impl->node->inputs[next++].get();
            if (child->node && seen.insert(child).second) stack.emplace_back(child, 0);
            continue;
        }
        if (impl->node) order.push_back(impl);
        stack.pop_back();
    }

    for (Impl* impl : order) impl->grad.assign(impl->values.size(), 0.0);
    root->grad[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Impl* impl = *it;
        for (auto& in : impl->node->inputs) {
            if (in->requires_grad) in->ensure_grad();
        }
        impl->node->backward(*impl);
    }
    return order.size();
}

}  // namespace srd
