#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace stf {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense n-dimensional array of 64-bit floats in row-major order.
// A rank-0 tensor holds a single scalar.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);
    Tensor(Shape shape, double fill);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor row(std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(std::initializer_list<std::size_t> idx) const;
    double& at(std::initializer_list<std::size_t> idx);

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Reshape to a shape with the same total size; data order is preserved.
    Tensor reshaped(Shape shape) const;

    // Reorder axes; perm must be a permutation of [0, rank).
    Tensor permuted(const std::vector<std::size_t>& perm) const;

    // Half-open range along one axis.
    Tensor sliced(std::size_t axis, std::size_t start, std::size_t stop) const;

    Tensor transposed() const;  // rank-2 only

    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Row-major strides for a shape.
std::vector<std::size_t> row_major_strides(const Shape& shape);

// ---------------------------------------------------------------------------
// Plain (non-differentiable) tensor math, shared by metrics and analysis.
// The differentiable versions live in autodiff.hpp.
// ---------------------------------------------------------------------------

// Shape broadcasting follows the usual right-aligned rule: trailing axes
// must match or be 1. Throws DimensionError naming both shapes.
Shape broadcast_shapes(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);  // rank-2 x rank-2
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);

// y[t] = sum_k x[t + k - K/2] * kernel[k], out-of-range x treated as zero.
// x may be [len] or [rows, len]; the kernel length must be odd.
Tensor conv1d_same(const Tensor& x, const Tensor& kernel);

Tensor mean_over_axis(const Tensor& x, std::size_t axis, bool keepdim);
// Sample standard deviation (n-1 denominator) along one axis.
Tensor std_over_axis(const Tensor& x, std::size_t axis, bool keepdim);

double sum_all(const Tensor& x);
double mean_all(const Tensor& x);

Tensor softmax_lastaxis(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

}  // namespace stf
