#include "stf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stf/errors.hpp"

namespace stf::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Tensor value, bool requires_grad, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) {
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

bool any_grad(const Var& a) { return a.requires_grad(); }
bool any_grad(const Var& a, const Var& b) { return a.requires_grad() || b.requires_grad(); }

// Sum g over broadcast axes so the result has `target` shape.
Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    Tensor out(target);
    const Shape& gs = g.shape();
    const auto out_strides = row_major_strides(target);
    const std::size_t pad = gs.size() - target.size();
    std::vector<std::size_t> idx(gs.size(), 0);
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        std::size_t dst = 0;
        for (std::size_t a = 0; a < target.size(); ++a) {
            if (target[a] != 1) dst += idx[pad + a] * out_strides[a];
        }
        out[dst] += g[flat];
        for (std::size_t a = gs.size(); a-- > 0;) {
            if (++idx[a] < gs[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

}  // namespace

void Node::accumulate(const Tensor& g) {
    if (!g.same_shape(value)) {
        throw DimensionError("gradient shape " + shape_to_string(g.shape()) +
                             " does not match value shape " + shape_to_string(value.shape()));
    }
    if (!has_grad) {
        grad = g;
        has_grad = true;
        return;
    }
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

void Node::clear_grad() {
    grad = Tensor();
    has_grad = false;
}

Var Var::leaf(Tensor value, bool trainable) {
    return wrap(make_node(std::move(value), trainable, {}, nullptr));
}

Var Var::constant(Tensor value) { return wrap(make_node(std::move(value), false, {}, nullptr)); }

Var Var::wrap(NodePtr n) {
    Var v;
    v.node_ = std::move(n);
    return v;
}

Tensor Var::grad() const {
    if (node_->has_grad) return node_->grad;
    return Tensor(node_->value.shape());
}

Var detach(const Var& v) { return Var::constant(v.value()); }

Var add(const Var& a, const Var& b) {
    Tensor out = stf::add(a.value(), b.value());
    if (!any_grad(a, b)) return Var::constant(std::move(out));
    auto pa = a.node();
    auto pb = b.node();
    return Var::wrap(make_node(std::move(out), true, {pa, pb}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(reduce_to_shape(self.grad, pa->value.shape()));
        if (pb->requires_grad) pb->accumulate(reduce_to_shape(self.grad, pb->value.shape()));
    }));
}

Var sub(const Var& a, const Var& b) {
    Tensor out = stf::sub(a.value(), b.value());
    if (!any_grad(a, b)) return Var::constant(std::move(out));
    auto pa = a.node();
    auto pb = b.node();
    return Var::wrap(make_node(std::move(out), true, {pa, pb}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(reduce_to_shape(self.grad, pa->value.shape()));
        if (pb->requires_grad)
            pb->accumulate(reduce_to_shape(stf::scale(self.grad, -1.0), pb->value.shape()));
    }));
}

Var mul(const Var& a, const Var& b) {
    Tensor out = stf::mul(a.value(), b.value());
    if (!any_grad(a, b)) return Var::constant(std::move(out));
    auto pa = a.node();
    auto pb = b.node();
    return Var::wrap(make_node(std::move(out), true, {pa, pb}, [pa, pb](Node& self) {
        if (pa->requires_grad)
            pa->accumulate(reduce_to_shape(stf::mul(self.grad, pb->value), pa->value.shape()));
        if (pb->requires_grad)
            pb->accumulate(reduce_to_shape(stf::mul(self.grad, pa->value), pb->value.shape()));
    }));
}

Var scale(const Var& v, double c) {
    Tensor out = stf::scale(v.value(), c);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p, c](Node& self) {
        p->accumulate(stf::scale(self.grad, c));
    }));
}

Var add_scalar(const Var& v, double c) {
    Tensor out = stf::add_scalar(v.value(), c);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p},
                               [p](Node& self) { p->accumulate(self.grad); }));
}

Var matmul(const Var& a, const Var& b) {
    Tensor out = stf::matmul(a.value(), b.value());
    if (!any_grad(a, b)) return Var::constant(std::move(out));
    auto pa = a.node();
    auto pb = b.node();
    return Var::wrap(make_node(std::move(out), true, {pa, pb}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(stf::matmul(self.grad, pb->value.transposed()));
        if (pb->requires_grad) pb->accumulate(stf::matmul(pa->value.transposed(), self.grad));
    }));
}

Var relu(const Var& v) {
    Tensor out = stf::relu(v.value());
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p](Node& self) {
        Tensor g = self.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (p->value[i] <= 0.0) g[i] = 0.0;
        }
        p->accumulate(g);
    }));
}

Var abs(const Var& v) {
    Tensor out = stf::abs(v.value());
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p](Node& self) {
        Tensor g = self.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = p->value[i];
            g[i] = x > 0.0 ? g[i] : (x < 0.0 ? -g[i] : 0.0);
        }
        p->accumulate(g);
    }));
}

Var conv1d_same(const Var& x, const Var& kernel) {
    Tensor out = stf::conv1d_same(x.value(), kernel.value());
    if (!any_grad(x, kernel)) return Var::constant(std::move(out));
    auto px = x.node();
    auto pk = kernel.node();
    return Var::wrap(make_node(std::move(out), true, {px, pk}, [px, pk](Node& self) {
        const Tensor& xv = px->value;
        const Tensor& kv = pk->value;
        const std::size_t ksize = kv.size();
        const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(ksize / 2);
        const std::size_t rows = xv.rank() == 2 ? xv.extent(0) : 1;
        const std::size_t len = xv.rank() == 2 ? xv.extent(1) : xv.extent(0);

        if (px->requires_grad) {
            // d/dx is the correlation with the flipped kernel.
            Tensor flipped = kv;
            std::reverse(flipped.data().begin(), flipped.data().end());
            px->accumulate(stf::conv1d_same(self.grad, flipped));
        }
        if (pk->requires_grad) {
            Tensor gk(kv.shape());
            for (std::size_t k = 0; k < ksize; ++k) {
                double acc = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t t = 0; t < len; ++t) {
                        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) +
                                                 static_cast<std::ptrdiff_t>(k) - center;
                        if (s >= 0 && s < static_cast<std::ptrdiff_t>(len)) {
                            acc += self.grad[r * len + t] * xv[r * len + s];
                        }
                    }
                }
                gk[k] = acc;
            }
            pk->accumulate(gk);
        }
    }));
}

Var mean_over_axis(const Var& v, std::size_t axis, bool keepdim) {
    Tensor out = stf::mean_over_axis(v.value(), axis, keepdim);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p, axis](Node& self) {
        const Shape& vs = p->value.shape();
        const std::size_t n = vs[axis];
        std::size_t inner = 1;
        for (std::size_t a = axis + 1; a < vs.size(); ++a) inner *= vs[a];
        const std::size_t outer = p->value.size() / (n * inner);
        Tensor g(vs);
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < inner; ++i) {
                    g[(o * n + j) * inner + i] = self.grad[o * inner + i] * inv;
                }
            }
        }
        p->accumulate(g);
    }));
}

Var std_over_axis(const Var& v, std::size_t axis, bool keepdim) {
    Tensor out = stf::std_over_axis(v.value(), axis, keepdim);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    Tensor out_copy = out;
    return Var::wrap(make_node(std::move(out), true, {p}, [p, axis, out_copy](Node& self) {
        // d std / d x_j = (x_j - mean) / ((n-1) * std)
        const Shape& vs = p->value.shape();
        const std::size_t n = vs[axis];
        std::size_t inner = 1;
        for (std::size_t a = axis + 1; a < vs.size(); ++a) inner *= vs[a];
        const std::size_t outer = p->value.size() / (n * inner);
        Tensor g(vs);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                double mean = 0.0;
                for (std::size_t j = 0; j < n; ++j) mean += p->value[(o * n + j) * inner + i];
                mean /= static_cast<double>(n);
                const double sd = out_copy[o * inner + i];
                const double go = self.grad[o * inner + i];
                const double denom = static_cast<double>(n - 1) * sd;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dev = p->value[(o * n + j) * inner + i] - mean;
                    g[(o * n + j) * inner + i] = go * dev / denom;
                }
            }
        }
        p->accumulate(g);
    }));
}

Var sum_all(const Var& v) {
    Tensor out = Tensor::scalar(stf::sum_all(v.value()));
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p](Node& self) {
        p->accumulate(Tensor(p->value.shape(), self.grad[0]));
    }));
}

Var mean_all(const Var& v) {
    Tensor out = Tensor::scalar(stf::mean_all(v.value()));
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p](Node& self) {
        p->accumulate(Tensor(p->value.shape(), self.grad[0] / static_cast<double>(p->value.size())));
    }));
}

Var reshape(const Var& v, Shape shape) {
    Tensor out = v.value().reshaped(shape);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p](Node& self) {
        p->accumulate(self.grad.reshaped(p->value.shape()));
    }));
}

Var permute(const Var& v, std::vector<std::size_t> perm) {
    Tensor out = v.value().permuted(perm);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p, perm](Node& self) {
        p->accumulate(self.grad.permuted(inverse_permutation(perm)));
    }));
}

Var transpose(const Var& v) { return permute(v, {1, 0}); }

Var slice(const Var& v, std::size_t axis, std::size_t start, std::size_t stop) {
    Tensor out = v.value().sliced(axis, start, stop);
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    return Var::wrap(make_node(std::move(out), true, {p}, [p, axis, start, stop](Node& self) {
        const Shape& vs = p->value.shape();
        Tensor g(vs);
        std::size_t inner = 1;
        for (std::size_t a = axis + 1; a < vs.size(); ++a) inner *= vs[a];
        std::size_t outer = 1;
        for (std::size_t a = 0; a < axis; ++a) outer *= vs[a];
        const std::size_t out_block = (stop - start) * inner;
        const std::size_t in_block = vs[axis] * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(self.grad.data().begin() + o * out_block, out_block,
                        g.data().begin() + o * in_block + start * inner);
        }
        p->accumulate(g);
    }));
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    std::vector<Tensor> values;
    values.reserve(parts.size());
    bool requires = false;
    for (const Var& p : parts) {
        values.push_back(p.value());
        requires = requires || p.requires_grad();
    }
    Tensor out = stf::concat(values, axis);
    if (!requires) return Var::constant(std::move(out));
    std::vector<NodePtr> parents;
    parents.reserve(parts.size());
    for (const Var& p : parts) parents.push_back(p.node());
    std::vector<std::size_t> extents;
    extents.reserve(parts.size());
    for (const Tensor& t : values) extents.push_back(t.shape()[axis]);
    auto ps = parents;
    return Var::wrap(make_node(std::move(out), true, std::move(parents),
                               [ps, extents, axis](Node& self) {
                                   std::size_t offset = 0;
                                   for (std::size_t i = 0; i < ps.size(); ++i) {
                                       if (ps[i]->requires_grad) {
                                           ps[i]->accumulate(self.grad.sliced(
                                               axis, offset, offset + extents[i]));
                                       }
                                       offset += extents[i];
                                   }
                               }));
}

Var softmax_lastaxis(const Var& v) {
    Tensor out = stf::softmax_lastaxis(v.value());
    if (!any_grad(v)) return Var::constant(std::move(out));
    auto p = v.node();
    Tensor y = out;
    return Var::wrap(make_node(std::move(out), true, {p}, [p, y](Node& self) {
        const std::size_t n = y.shape().back();
        const std::size_t rows = y.size() / n;
        Tensor g(y.shape());
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += self.grad[r * n + j] * y[r * n + j];
            for (std::size_t j = 0; j < n; ++j) {
                g[r * n + j] = y[r * n + j] * (self.grad[r * n + j] - dot);
            }
        }
        p->accumulate(g);
    }));
}

void backward(const Var& loss) {
    if (!loss.defined()) throw ContractError("backward on an undefined variable");
    if (loss.value().size() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " +
                            shape_to_string(loss.value().shape()));
    }

    // Post-order DFS over the grad-requiring subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    if (loss.node()->requires_grad) stack.emplace_back(loss.node().get(), 0);
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (visited.count(node)) {
            stack.pop_back();
            continue;
        }
        if (child < node->parents.size()) {
            Node* next = node->parents[child++].get();
            if (next->requires_grad && !visited.count(next)) stack.emplace_back(next, 0);
        } else {
            visited.insert(node);
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->clear_grad();
    loss.node()->accumulate(Tensor(loss.value().shape(), 1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->has_grad) n->backprop(*n);
    }
}

std::vector<Tensor> grad(const Var& loss, const std::vector<Var>& leaves) {
    // Leaves may carry gradients from an earlier backward pass; reset so
    // unreachable leaves report zeros.
    for (const Var& leaf : leaves) {
        if (leaf.defined()) leaf.node()->clear_grad();
    }
    backward(loss);
    std::vector<Tensor> out;
    out.reserve(leaves.size());
    for (const Var& leaf : leaves) out.push_back(leaf.grad());
    return out;
}

}  // namespace stf::ad
