#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace svsr {

// Raised when an operation receives tensors with incompatible shapes.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when an operation is called outside its contract (non-scalar
// backward root, prior evaluation in the wrong mode, ...).
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_str(const Shape& shape);

namespace detail {

// One vertex of the define-by-run tape. The value buffer is shared so that
// detach() is O(1); the tape is rebuilt from leaves every iteration and
// freed when the root goes out of scope.
template <typename T>
struct NodeT {
    Shape shape;
    std::shared_ptr<std::vector<T>> value;
    std::vector<T> grad;    // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    // Pulls this node's grad into its parents' grads. Null on leaves.
    std::function<void(NodeT&)> backprop;

    std::size_t numel() const { return value ? value->size() : 0; }
    bool leaf() const { return !backprop; }
    void ensure_grad() {
        if (grad.size() != numel()) grad.assign(numel(), T(0));
    }
    void accumulate(std::span<const T> g) {
        ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
    }
};

}  // namespace detail

// Dense N-dimensional array participating in a reverse-mode autodiff graph.
// Row-major storage, last dimension fastest; images are H x W x C.
//
// Values are immutable once a tensor has been consumed by an op. Leaves may
// be mutated through data() between tape builds (that is how optimizers and
// the SGLD sampler advance state). backward() visits each node exactly once
// and accumulates into leaf grads; leaf grads persist until zero_grad().
template <typename T>
class TensorT {
public:
    using Node = detail::NodeT<T>;

    TensorT() = default;

    static TensorT zeros(Shape shape, bool requires_grad = false);
    static TensorT full(Shape shape, T value, bool requires_grad = false);
    static TensorT from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
    static TensorT scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::size_t numel() const { return node_->numel(); }

    std::span<T> data() { return {node_->value->data(), node_->value->size()}; }
    std::span<const T> data() const { return {node_->value->data(), node_->value->size()}; }
    std::span<const T> grad() const { return {node_->grad.data(), node_->grad.size()}; }
    bool has_grad() const { return !node_->grad.empty(); }

    bool requires_grad() const { return node_->requires_grad; }
    TensorT& set_requires_grad(bool value);
    void zero_grad() { node_->grad.assign(node_->numel(), T(0)); }

    // New leaf sharing this tensor's value storage, outside any graph.
    TensorT detach() const;
    // Deep copy of the values as a fresh leaf.
    TensorT clone() const;

    T item() const;
    T at(int i) const { return (*node_->value)[static_cast<std::size_t>(i)]; }
    T at(int y, int x) const {
        return (*node_->value)[static_cast<std::size_t>(y) * dim(1) + x];
    }
    T at(int y, int x, int c) const {
        return (*node_->value)[(static_cast<std::size_t>(y) * dim(1) + x) * dim(2) + c];
    }

    // Reverse-mode sweep from a scalar root. Each reachable node is visited
    // once in reverse topological order; leaf grads accumulate across calls.
    void backward();

    std::shared_ptr<Node> node() const { return node_; }
    static TensorT wrap(std::shared_ptr<Node> node) {
        TensorT t;
        t.node_ = std::move(node);
        return t;
    }

private:
    std::shared_ptr<Node> node_;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

extern template class TensorT<double>;
extern template class TensorT<float>;

}  // namespace svsr
