#include "dscnn/pooling.hpp"

namespace dscnn {

int64_t pool_out_len(int64_t in_len, int64_t kernel, int64_t stride) {
  if (kernel > in_len) {
    throw ShapeError("pooling window " + std::to_string(kernel) + " larger than input extent " +
                     std::to_string(in_len));
  }
  return (in_len - kernel) / stride + 1;
}

Tensor MaxPool2d::forward(const Tensor& input, Cache* cache) const {
  if (input.rank() != 4) throw ShapeError("maxpool2d expects [N,C,H,W], got " + input.shape().str());
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int64_t ho = pool_out_len(h, kernel, stride);
  const int64_t wo = pool_out_len(w, kernel, stride);

  Tensor out(Shape{n, c, ho, wo});
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  const double* x = input.data();
  double* y = out.data();
  int64_t oi = 0;
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const int64_t base = nc * h * w;
    for (int64_t i = 0; i < ho; ++i) {
      for (int64_t j = 0; j < wo; ++j) {
        int64_t best_idx = base + i * stride * w + j * stride;
        double best = x[best_idx];
        for (int64_t s = 0; s < kernel; ++s) {
          const int64_t row = base + (i * stride + s) * w + j * stride;
          for (int64_t t = 0; t < kernel; ++t) {
            if (x[row + t] > best) {
              best = x[row + t];
              best_idx = row + t;
            }
          }
        }
        y[oi] = best;
        argmax[static_cast<size_t>(oi)] = best_idx;
        ++oi;
      }
    }
  }
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->input_shape = input.shape();
  }
  return out;
}

Tensor MaxPool2d::backward(const Cache& cache, const Tensor& grad_output) const {
  if (grad_output.numel() != static_cast<int64_t>(cache.argmax.size())) {
    throw ShapeError("maxpool2d backward: grad count does not match cached forward");
  }
  Tensor gx(cache.input_shape);
  const double* gy = grad_output.data();
  double* p = gx.data();
  for (int64_t i = 0; i < grad_output.numel(); ++i) {
    p[cache.argmax[static_cast<size_t>(i)]] += gy[i];
  }
  return gx;
}

Tensor MaxPool3d::forward(const Tensor& input, Cache* cache) const {
  if (input.rank() != 5) throw ShapeError("maxpool3d expects [N,C,D,H,W], got " + input.shape().str());
  const int64_t n = input.dim(0), c = input.dim(1);
  const int64_t d = input.dim(2), h = input.dim(3), w = input.dim(4);
  const int64_t d_o = pool_out_len(d, kernel_depth, stride);
  const int64_t ho = pool_out_len(h, kernel, stride);
  const int64_t wo = pool_out_len(w, kernel, stride);

  Tensor out(Shape{n, c, d_o, ho, wo});
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  const double* x = input.data();
  double* y = out.data();
  int64_t oi = 0;
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const int64_t base = nc * d * h * w;
    for (int64_t od = 0; od < d_o; ++od) {
      for (int64_t i = 0; i < ho; ++i) {
        for (int64_t j = 0; j < wo; ++j) {
          int64_t best_idx = base + (od * stride * h + i * stride) * w + j * stride;
          double best = x[best_idx];
          for (int64_t u = 0; u < kernel_depth; ++u) {
            for (int64_t s = 0; s < kernel; ++s) {
              const int64_t row =
                  base + ((od * stride + u) * h + i * stride + s) * w + j * stride;
              for (int64_t t = 0; t < kernel; ++t) {
                if (x[row + t] > best) {
                  best = x[row + t];
                  best_idx = row + t;
                }
              }
            }
          }
          y[oi] = best;
          argmax[static_cast<size_t>(oi)] = best_idx;
          ++oi;
        }
      }
    }
  }
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->input_shape = input.shape();
  }
  return out;
}

Tensor MaxPool3d::backward(const Cache& cache, const Tensor& grad_output) const {
  if (grad_output.numel() != static_cast<int64_t>(cache.argmax.size())) {
    throw ShapeError("maxpool3d backward: grad count does not match cached forward");
  }
  Tensor gx(cache.input_shape);
  const double* gy = grad_output.data();
  double* p = gx.data();
  for (int64_t i = 0; i < grad_output.numel(); ++i) {
    p[cache.argmax[static_cast<size_t>(i)]] += gy[i];
  }
  return gx;
}

}  // namespace dscnn
