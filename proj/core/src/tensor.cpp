#include "svsr/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace svsr {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

template <typename T>
TensorT<T> TensorT<T>::zeros(Shape shape, bool requires_grad) {
    return from_data(std::move(shape), {}, requires_grad);
}

template <typename T>
TensorT<T> TensorT<T>::full(Shape shape, T value, bool requires_grad) {
    std::vector<T> data(shape_numel(shape), value);
    return from_data(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
TensorT<T> TensorT<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    if (data.empty()) {
        data.assign(n, T(0));
    } else if (data.size() != n) {
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<detail::NodeT<T>>();
    node->shape = std::move(shape);
    node->value = std::make_shared<std::vector<T>>(std::move(data));
    node->requires_grad = requires_grad;
    return wrap(std::move(node));
}

template <typename T>
TensorT<T> TensorT<T>::scalar(T value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool value) {
    if (!node_->leaf()) {
        throw ContractError("requires_grad can only be toggled on leaf tensors");
    }
    node_->requires_grad = value;
    return *this;
}

template <typename T>
TensorT<T> TensorT<T>::detach() const {
    auto node = std::make_shared<Node>();
    node->shape = node_->shape;
    node->value = node_->value;  // shared storage
    node->requires_grad = false;
    return wrap(std::move(node));
}

template <typename T>
TensorT<T> TensorT<T>::clone() const {
    auto node = std::make_shared<Node>();
    node->shape = node_->shape;
    node->value = std::make_shared<std::vector<T>>(*node_->value);
    node->requires_grad = false;
    return wrap(std::move(node));
}

template <typename T>
T TensorT<T>::item() const {
    if (numel() != 1) {
        throw ContractError("item() requires a 1-element tensor, got shape " +
                            shape_str(node_->shape));
    }
    return (*node_->value)[0];
}

template <typename T>
void TensorT<T>::backward() {
    if (numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " +
                            shape_str(node_->shape));
    }

    // Iterative post-order DFS: children (graph-wise) come after all their
    // parents in `order`, so the reverse of `order` is a valid backward
    // topological order starting from the root.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (node_->requires_grad) stack.push_back({node_.get(), 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent == 0) {
            if (visited.count(f.node)) {
                stack.pop_back();
                continue;
            }
            visited.insert(f.node);
        }
        if (f.next_parent < f.node->parents.size()) {
            Node* parent = f.node->parents[f.next_parent++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch space for this sweep only; leaf grads keep
    // accumulating across sweeps.
    for (Node* n : order) {
        if (!n->leaf()) n->grad.assign(n->numel(), T(0));
    }
    node_->ensure_grad();
    node_->grad[0] += T(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

template class TensorT<double>;
template class TensorT<float>;

}  // namespace svsr
