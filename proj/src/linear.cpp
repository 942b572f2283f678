#include "dscnn/linear.hpp"

namespace dscnn {

Tensor Linear::forward(const Tensor& input, Cache* cache) const {
  if (input.rank() != 2) throw ShapeError("linear expects [N,in], got " + input.shape().str());
  const int64_t n = input.dim(0), in = in_features(), out = out_features();
  if (input.dim(1) != in) {
    throw ShapeError("linear input width " + std::to_string(input.dim(1)) + " != " +
                     std::to_string(in));
  }
  Tensor y(Shape{n, out});
  const double* x = input.data();
  const double* w = weight.data();
  const double* b = bias.data();
  double* py = y.data();
  for (int64_t r = 0; r < n; ++r) {
    const double* xr = x + r * in;
    double* yr = py + r * out;
    for (int64_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double acc = b[o];
      for (int64_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
  if (cache) cache->input = input;
  return y;
}

Linear::Grads Linear::backward(const Cache& cache, const Tensor& grad_output) const {
  const Tensor& x = cache.input;
  const int64_t n = x.dim(0), in = in_features(), out = out_features();
  if (!(grad_output.shape() == Shape{n, out})) {
    throw ShapeError("linear backward: grad shape " + grad_output.shape().str() +
                     " does not match cached forward");
  }
  Tensor gx(Shape{n, in});
  Tensor gw(weight.shape());
  Tensor gb(bias.shape());
  const double* gy = grad_output.data();
  const double* px = x.data();
  const double* w = weight.data();
  double* pgx = gx.data();
  double* pgw = gw.data();
  double* pgb = gb.data();
  for (int64_t r = 0; r < n; ++r) {
    const double* gyr = gy + r * out;
    const double* xr = px + r * in;
    double* gxr = pgx + r * in;
    for (int64_t o = 0; o < out; ++o) {
      const double g = gyr[o];
      if (g == 0.0) continue;
      pgb[o] += g;
      const double* wr = w + o * in;
      double* gwr = pgw + o * in;
      for (int64_t i = 0; i < in; ++i) {
        gwr[i] += g * xr[i];
        gxr[i] += g * wr[i];
      }
    }
  }
  return Grads{std::move(gx), std::move(gw), std::move(gb)};
}

Tensor Relu::forward(const Tensor& input, Cache* cache) {
  Tensor y(input.shape());
  const double* x = input.data();
  double* py = y.data();
  for (int64_t i = 0; i < input.numel(); ++i) py[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (cache) cache->input = input;
  return y;
}

Tensor Relu::backward(const Cache& cache, const Tensor& grad_output) {
  if (!(grad_output.shape() == cache.input.shape())) {
    throw ShapeError("relu backward: grad shape does not match cached forward");
  }
  Tensor gx(grad_output.shape());
  const double* x = cache.input.data();
  const double* gy = grad_output.data();
  double* p = gx.data();
  for (int64_t i = 0; i < grad_output.numel(); ++i) p[i] = x[i] > 0.0 ? gy[i] : 0.0;
  return gx;
}

}  // namespace dscnn
