#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "dscnn/errors.hpp"

namespace dscnn {

// Axis lengths of a dense row-major array. Rank 0 is a scalar.
class Shape {
public:
  Shape() = default;
  Shape(std::initializer_list<int64_t> dims) : Shape(std::vector<int64_t>(dims)) {}
  explicit Shape(std::vector<int64_t> dims);

  int64_t rank() const { return static_cast<int64_t>(dims_.size()); }
  int64_t numel() const;
  int64_t operator[](int64_t axis) const;
  const std::vector<int64_t>& dims() const { return dims_; }
  bool operator==(const Shape&) const = default;
  std::string str() const;

private:
  std::vector<int64_t> dims_;
};

// Dense N-dimensional array of doubles, row-major (last axis fastest).
// Values are shareable for reading; mutation happens only through data()
// on exclusively owned instances (optimizer updates, batch assembly).
class Tensor {
public:
  Tensor() : data_(1, 0.0) {}  // rank-0 scalar, value 0
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return shape_.rank(); }
  int64_t dim(int64_t axis) const { return shape_[axis]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Value of a single-element tensor.
  double item() const;

  bool all_finite() const;

private:
  Shape shape_;
  std::vector<double> data_;
};

// Elementwise operations; tensor-tensor forms require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Reductions over the listed axes; reduced axes are removed from the shape.
// Variance is the population variance (divide by the element count).
Tensor reduce_mean(const Tensor& a, std::vector<int64_t> axes);
Tensor reduce_var(const Tensor& a, std::vector<int64_t> axes);

// Row-major linearization to rank 1.
Tensor flatten(const Tensor& a);
// Same data, new shape with equal element count.
Tensor reshape(const Tensor& a, Shape new_shape);

}  // namespace dscnn
