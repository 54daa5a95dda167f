#include "stf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stf/errors.hpp"

namespace stf {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << " x ";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i > 1; --i) {
        strides[i - 2] = strides[i - 1] * shape[i - 1];
    }
    return strides;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

Tensor Tensor::row(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(shape_));
    }
    return shape_[axis];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    return data_[std::inner_product(idx.begin(), idx.end(), row_major_strides(shape_).begin(),
                                    std::size_t{0})];
}

double& Tensor::at(std::initializer_list<std::size_t> idx) {
    return data_[std::inner_product(idx.begin(), idx.end(), row_major_strides(shape_).begin(),
                                    std::size_t{0})];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                             shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::permuted(const std::vector<std::size_t>& perm) const {
    if (perm.size() != shape_.size()) {
        throw DimensionError("permutation rank " + std::to_string(perm.size()) +
                             " does not match tensor rank " + std::to_string(shape_.size()));
    }
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t p : perm) {
        if (p >= perm.size() || seen[p]) throw ContractError("invalid axis permutation");
        seen[p] = true;
    }
    Shape out_shape(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = shape_[perm[i]];
    Tensor out(out_shape);
    if (size() == 0) return out;

    const auto in_strides = row_major_strides(shape_);
    const auto out_strides = row_major_strides(out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t a = 0; a < idx.size(); ++a) src += idx[a] * in_strides[perm[a]];
        out.data_[flat] = data_[src];
        for (std::size_t a = idx.size(); a-- > 0;) {
            if (++idx[a] < out_shape[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

Tensor Tensor::sliced(std::size_t axis, std::size_t start, std::size_t stop) const {
    if (axis >= shape_.size()) {
        throw DimensionError("slice axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(shape_));
    }
    if (start > stop || stop > shape_[axis]) {
        throw ContractError("slice range [" + std::to_string(start) + ", " + std::to_string(stop) +
                            ") invalid for extent " + std::to_string(shape_[axis]));
    }
    Shape out_shape = shape_;
    out_shape[axis] = stop - start;
    Tensor out(out_shape);
    if (out.size() == 0) return out;

    // Copy contiguous runs: everything after `axis` is one block.
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < shape_.size(); ++a) inner *= shape_[a];
    std::size_t outer = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape_[a];
    const std::size_t in_block = shape_[axis] * inner;
    const std::size_t out_block = (stop - start) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(data_.begin() + o * in_block + start * inner, out_block,
                    out.data_.begin() + o * out_block);
    }
    return out;
}

Tensor Tensor::transposed() const {
    if (rank() != 2) throw ContractError("transposed() requires a rank-2 tensor");
    return permuted({1, 0});
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Broadcasting
// ---------------------------------------------------------------------------

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t ea = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t eb = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (ea != eb && ea != 1 && eb != 1) {
            throw DimensionError("cannot broadcast " + shape_to_string(a) + " with " +
                                 shape_to_string(b));
        }
        out[i] = std::max(ea, eb);
    }
    return out;
}

namespace {

// Strides of `shape` viewed as `out_shape`, with 0 on broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& shape, const Shape& out_shape) {
    const auto strides = row_major_strides(shape);
    std::vector<std::size_t> out(out_shape.size(), 0);
    const std::size_t pad = out_shape.size() - shape.size();
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out[pad + i] = shape[i] == 1 ? 0 : strides[i];
    }
    return out;
}

template <typename F>
Tensor elementwise_broadcast(const Tensor& a, const Tensor& b, F&& f) {
    if (a.same_shape(b)) {
        Tensor out(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    const Shape out_shape = broadcast_shapes(a.shape(), b.shape());
    Tensor out(out_shape);
    const auto sa = broadcast_strides(a.shape(), out_shape);
    const auto sb = broadcast_strides(b.shape(), out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t ia = 0, ib = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) {
            ia += idx[d] * sa[d];
            ib += idx[d] * sb[d];
        }
        out[flat] = f(a[ia], b[ib]);
        for (std::size_t d = idx.size(); d-- > 0;) {
            if (++idx[d] < out_shape[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_broadcast(a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_broadcast(a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_broadcast(a, b, [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (double& v : out.data()) v *= c;
    return out;
}

Tensor add_scalar(const Tensor& a, double c) {
    Tensor out = a;
    for (double& v : out.data()) v += c;
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul requires rank-2 operands, got " + shape_to_string(a.shape()) +
                             " and " + shape_to_string(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1);
    if (b.extent(0) != k) {
        throw DimensionError("matmul inner extents differ: " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
    const std::size_t n = b.extent(1);
    Tensor out(Shape{m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* orow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor abs(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = std::fabs(v);
    return out;
}

Tensor conv1d_same(const Tensor& x, const Tensor& kernel) {
    if (kernel.rank() != 1) {
        throw DimensionError("conv1d_same kernel must be rank-1, got " +
                             shape_to_string(kernel.shape()));
    }
    const std::size_t ksize = kernel.extent(0);
    if (ksize % 2 == 0) {
        throw ConfigError("conv1d_same kernel length must be odd, got " + std::to_string(ksize));
    }
    if (x.rank() != 1 && x.rank() != 2) {
        throw DimensionError("conv1d_same input must be rank-1 or rank-2, got " +
                             shape_to_string(x.shape()));
    }
    const std::size_t rows = x.rank() == 2 ? x.extent(0) : 1;
    const std::size_t len = x.rank() == 2 ? x.extent(1) : x.extent(0);
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(ksize / 2);

    Tensor out(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data().data() + r * len;
        double* y = out.data().data() + r * len;
        for (std::size_t t = 0; t < len; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < ksize; ++k) {
                const std::ptrdiff_t s =
                    static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - center;
                if (s >= 0 && s < static_cast<std::ptrdiff_t>(len)) acc += in[s] * kernel[k];
            }
            y[t] = acc;
        }
    }
    return out;
}

namespace {

// Iterate an axis reduction: calls f(out_index, reducer over slice values).
struct AxisView {
    std::size_t outer, n, inner;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
    if (axis >= shape.size()) {
        throw DimensionError("reduction axis " + std::to_string(axis) +
                             " out of range for shape " + shape_to_string(shape));
    }
    AxisView v{1, shape[axis], 1};
    for (std::size_t a = 0; a < axis; ++a) v.outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) v.inner *= shape[a];
    return v;
}

Shape reduced_shape(const Shape& shape, std::size_t axis, bool keepdim) {
    Shape out = shape;
    if (keepdim) {
        out[axis] = 1;
    } else {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    }
    return out;
}

}  // namespace

Tensor mean_over_axis(const Tensor& x, std::size_t axis, bool keepdim) {
    const AxisView v = axis_view(x.shape(), axis);
    if (v.n == 0) throw ContractError("mean over an empty axis is undefined");
    Tensor out(reduced_shape(x.shape(), axis, keepdim));
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < v.n; ++j) acc += x[(o * v.n + j) * v.inner + i];
            out[o * v.inner + i] = acc / static_cast<double>(v.n);
        }
    }
    return out;
}

Tensor std_over_axis(const Tensor& x, std::size_t axis, bool keepdim) {
    const AxisView v = axis_view(x.shape(), axis);
    if (v.n < 2) throw ContractError("sample std requires at least 2 elements along the axis");
    Tensor out(reduced_shape(x.shape(), axis, keepdim));
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < v.n; ++j) mean += x[(o * v.n + j) * v.inner + i];
            mean /= static_cast<double>(v.n);
            double ss = 0.0;
            for (std::size_t j = 0; j < v.n; ++j) {
                const double dev = x[(o * v.n + j) * v.inner + i] - mean;
                ss += dev * dev;
            }
            out[o * v.inner + i] = std::sqrt(ss / static_cast<double>(v.n - 1));
        }
    }
    return out;
}

double sum_all(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    return acc;
}

double mean_all(const Tensor& x) {
    if (x.size() == 0) throw ContractError("mean of an empty tensor is undefined");
    return sum_all(x) / static_cast<double>(x.size());
}

Tensor softmax_lastaxis(const Tensor& x) {
    if (x.rank() == 0) throw ContractError("softmax requires rank >= 1");
    const std::size_t n = x.shape().back();
    if (n == 0) throw ContractError("softmax over an empty axis is undefined");
    const std::size_t rows = x.size() / n;
    Tensor out(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data().data() + r * n;
        double* y = out.data().data() + r * n;
        double mx = in[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = std::exp(in[j] - mx);
            denom += y[j];
        }
        for (std::size_t j = 0; j < n; ++j) y[j] /= denom;
    }
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    const Shape& base = parts.front().shape();
    if (axis >= base.size()) {
        throw DimensionError("concat axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(base));
    }
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != base.size()) {
            throw DimensionError("concat rank mismatch: " + shape_to_string(base) + " vs " +
                                 shape_to_string(p.shape()));
        }
        for (std::size_t a = 0; a < base.size(); ++a) {
            if (a != axis && p.shape()[a] != base[a]) {
                throw DimensionError("concat shape mismatch off the concat axis: " +
                                     shape_to_string(base) + " vs " + shape_to_string(p.shape()));
            }
        }
        total += p.shape()[axis];
    }
    Shape out_shape = base;
    out_shape[axis] = total;
    Tensor out(out_shape);

    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < base.size(); ++a) inner *= base[a];
    std::size_t outer = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= base[a];

    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        const std::size_t block = p.shape()[axis] * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(p.data().begin() + o * block, block,
                        out.data().begin() + o * total * inner + offset * inner);
        }
        offset += p.shape()[axis];
    }
    return out;
}

}  // namespace stf
