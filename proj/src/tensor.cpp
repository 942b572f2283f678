#include "dscnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dscnn {

Shape::Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) {
  for (int64_t d : dims_) {
    if (d < 1) throw ShapeError("axis lengths must be >= 1, got " + str());
  }
}

int64_t Shape::numel() const {
  int64_t n = 1;
  for (int64_t d : dims_) n *= d;
  return n;
}

int64_t Shape::operator[](int64_t axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + str());
  }
  return dims_[static_cast<size_t>(axis)];
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ',';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_.numel()), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (static_cast<int64_t>(data_.size()) != shape_.numel()) {
    throw ShapeError("value count " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t;
  t.data_[0] = value;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_.str());
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f, const char* op) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x + y; }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x - y; }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x * y; }, "mul");
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * factor;
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul requires rank-2 operands, got " + a.shape().str() + " and " +
                     b.shape().str());
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul inner dimension mismatch: " + a.shape().str() + " x " +
                     b.shape().str());
  }
  Tensor out(Shape{m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

namespace {

struct ReducePlan {
  std::vector<int64_t> axes;   // sorted, unique
  Shape out_shape;
  int64_t count = 1;           // elements reduced per output slot
};

ReducePlan plan_reduction(const Tensor& a, std::vector<int64_t> axes) {
  if (axes.empty()) throw ShapeError("reduce: empty axis list");
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  for (int64_t ax : axes) {
    if (ax < 0 || ax >= a.rank()) {
      throw ShapeError("reduce: axis " + std::to_string(ax) + " out of range for " +
                       a.shape().str());
    }
  }
  ReducePlan plan;
  plan.axes = std::move(axes);
  std::vector<int64_t> kept;
  size_t next = 0;
  for (int64_t ax = 0; ax < a.rank(); ++ax) {
    if (next < plan.axes.size() && plan.axes[next] == ax) {
      plan.count *= a.dim(ax);
      ++next;
    } else {
      kept.push_back(a.dim(ax));
    }
  }
  plan.out_shape = Shape(kept);
  return plan;
}

// Accumulates f(value) into out[slot] where slot is the row-major offset of
// the kept axes. Walks the input once with an odometer index.
template <class F>
void for_each_with_slot(const Tensor& a, const ReducePlan& plan, F f) {
  const int64_t rank = a.rank();
  std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
  std::vector<bool> reduced(static_cast<size_t>(rank), false);
  for (int64_t ax : plan.axes) reduced[static_cast<size_t>(ax)] = true;

  std::vector<int64_t> slot_stride(static_cast<size_t>(rank), 0);
  int64_t stride = 1;
  for (int64_t ax = rank - 1; ax >= 0; --ax) {
    if (!reduced[static_cast<size_t>(ax)]) {
      slot_stride[static_cast<size_t>(ax)] = stride;
      stride *= a.dim(ax);
    }
  }

  const double* pa = a.data();
  const int64_t n = a.numel();
  int64_t slot = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    f(slot, pa[flat]);
    for (int64_t ax = rank - 1; ax >= 0; --ax) {
      const size_t axs = static_cast<size_t>(ax);
      ++idx[axs];
      slot += slot_stride[axs];
      if (idx[axs] < a.dim(ax)) break;
      slot -= slot_stride[axs] * a.dim(ax);
      idx[axs] = 0;
    }
  }
}

}  // namespace

Tensor reduce_mean(const Tensor& a, std::vector<int64_t> axes) {
  ReducePlan plan = plan_reduction(a, std::move(axes));
  Tensor out(plan.out_shape);
  double* po = out.data();
  for_each_with_slot(a, plan, [po](int64_t slot, double v) { po[slot] += v; });
  const double inv = 1.0 / static_cast<double>(plan.count);
  for (int64_t i = 0; i < out.numel(); ++i) po[i] *= inv;
  return out;
}

Tensor reduce_var(const Tensor& a, std::vector<int64_t> axes) {
  ReducePlan plan = plan_reduction(a, axes);
  Tensor mean = reduce_mean(a, std::move(axes));
  Tensor out(plan.out_shape);
  double* po = out.data();
  const double* pm = mean.data();
  for_each_with_slot(a, plan, [po, pm](int64_t slot, double v) {
    const double d = v - pm[slot];
    po[slot] += d * d;
  });
  const double inv = 1.0 / static_cast<double>(plan.count);
  for (int64_t i = 0; i < out.numel(); ++i) po[i] *= inv;
  return out;
}

Tensor flatten(const Tensor& a) {
  return reshape(a, Shape{a.numel()});
}

Tensor reshape(const Tensor& a, Shape new_shape) {
  if (new_shape.numel() != a.numel()) {
    throw ShapeError("reshape: element count mismatch, " + a.shape().str() + " -> " +
                     new_shape.str());
  }
  std::vector<double> values(a.data(), a.data() + a.numel());
  return Tensor(std::move(new_shape), std::move(values));
}

}  // namespace dscnn
