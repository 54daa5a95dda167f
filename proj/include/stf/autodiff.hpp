#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stf/tensor.hpp"

// Reverse-mode differentiation over a fixed primitive set. Each operation
// computes its value eagerly and records a backward closure; backward()
// walks the recorded graph once in reverse topological order.
//
// Values are immutable once constructed. Graphs built from disjoint roots
// are independent, so concurrent forward/backward passes on separate
// graphs are safe; a single graph is single-threaded.

namespace stf::ad {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backprop;

    void accumulate(const Tensor& g);
    void clear_grad();
};

// Handle to a graph node.
class Var {
public:
    Var() = default;

    // A trainable (or plain) input value.
    static Var leaf(Tensor value, bool trainable = true);
    // A value that never receives a gradient.
    static Var constant(Tensor value);

    const Tensor& value() const { return node_->value; }
    // Gradient after backward(); zeros if this leaf was never reached.
    Tensor grad() const;
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool defined() const { return node_ != nullptr; }

    const std::shared_ptr<Node>& node() const { return node_; }
    static Var wrap(std::shared_ptr<Node> n);

private:
    std::shared_ptr<Node> node_;
};

// Bit-identical copy of the value with gradient flow cut.
Var detach(const Var& v);

Var add(const Var& a, const Var& b);  // broadcasting, right-aligned
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& v, double c);
Var add_scalar(const Var& v, double c);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

Var matmul(const Var& a, const Var& b);
Var relu(const Var& v);  // gradient at exactly 0 is 0
Var abs(const Var& v);
Var conv1d_same(const Var& x, const Var& kernel);
Var mean_over_axis(const Var& v, std::size_t axis, bool keepdim);
Var std_over_axis(const Var& v, std::size_t axis, bool keepdim);
Var sum_all(const Var& v);   // rank-0 result
Var mean_all(const Var& v);  // rank-0 result
Var reshape(const Var& v, Shape shape);
Var permute(const Var& v, std::vector<std::size_t> perm);
Var slice(const Var& v, std::size_t axis, std::size_t start, std::size_t stop);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var softmax_lastaxis(const Var& v);
Var transpose(const Var& v);  // rank-2

// Propagates d(loss)/d(node) through the graph. loss must be a scalar
// (size-1) tensor; throws ContractError otherwise.
void backward(const Var& loss);

// backward() plus gradient collection, one tensor per leaf, shape-identical
// to the leaf. Leaves the loss does not depend on get zero gradients.
std::vector<Tensor> grad(const Var& loss, const std::vector<Var>& leaves);

}  // namespace stf::ad
