#include "dscnn/conv.hpp"

#include <cstring>

namespace dscnn {

int64_t conv_out_len(int64_t in_len, int64_t kernel, int64_t stride, int64_t padding) {
  const int64_t padded = in_len + 2 * padding;
  if (padded < kernel) {
    throw ShapeError("convolution window " + std::to_string(kernel) +
                     " does not fit padded extent " + std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

namespace {

Tensor pad2d(const Tensor& in, int64_t p) {
  if (p == 0) return in;
  const int64_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  Tensor out(Shape{n, c, h + 2 * p, w + 2 * p});
  const int64_t wp = w + 2 * p, hp = h + 2 * p;
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = in.data() + nc * h * w;
    double* dst = out.data() + nc * hp * wp + p * wp + p;
    for (int64_t i = 0; i < h; ++i) {
      std::memcpy(dst + i * wp, src + i * w, static_cast<size_t>(w) * sizeof(double));
    }
  }
  return out;
}

Tensor pad3d(const Tensor& in, int64_t p) {
  if (p == 0) return in;
  const int64_t n = in.dim(0), c = in.dim(1), d = in.dim(2), h = in.dim(3), w = in.dim(4);
  const int64_t dp = d + 2 * p, hp = h + 2 * p, wp = w + 2 * p;
  Tensor out(Shape{n, c, dp, hp, wp});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = in.data() + nc * d * h * w;
    double* dst = out.data() + nc * dp * hp * wp;
    for (int64_t k = 0; k < d; ++k) {
      for (int64_t i = 0; i < h; ++i) {
        std::memcpy(dst + ((k + p) * hp + (i + p)) * wp + p, src + (k * h + i) * w,
                    static_cast<size_t>(w) * sizeof(double));
      }
    }
  }
  return out;
}

Tensor crop2d(const Tensor& padded, int64_t p, const Shape& target) {
  if (p == 0) return padded;
  const int64_t n = target[0], c = target[1], h = target[2], w = target[3];
  const int64_t hp = padded.dim(2), wp = padded.dim(3);
  Tensor out(target);
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = padded.data() + nc * hp * wp + p * wp + p;
    double* dst = out.data() + nc * h * w;
    for (int64_t i = 0; i < h; ++i) {
      std::memcpy(dst + i * w, src + i * wp, static_cast<size_t>(w) * sizeof(double));
    }
  }
  return out;
}

Tensor crop3d(const Tensor& padded, int64_t p, const Shape& target) {
  if (p == 0) return padded;
  const int64_t n = target[0], c = target[1], d = target[2], h = target[3], w = target[4];
  const int64_t dp = padded.dim(2), hp = padded.dim(3), wp = padded.dim(4);
  Tensor out(target);
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const double* src = padded.data() + nc * dp * hp * wp;
    double* dst = out.data() + nc * d * h * w;
    for (int64_t k = 0; k < d; ++k) {
      for (int64_t i = 0; i < h; ++i) {
        std::memcpy(dst + (k * h + i) * w, src + ((k + p) * hp + (i + p)) * wp + p,
                    static_cast<size_t>(w) * sizeof(double));
      }
    }
  }
  return out;
}

}  // namespace

Tensor Conv2d::forward(const Tensor& input, Cache* cache) const {
  if (input.rank() != 4) throw ShapeError("conv2d expects [N,C,H,W], got " + input.shape().str());
  const int64_t p_out = kernels.dim(0), m = kernels.dim(1);
  const int64_t kh = kernels.dim(2), kw = kernels.dim(3);
  if (input.dim(1) != m) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.dim(1)) +
                     ", kernels expect " + std::to_string(m));
  }
  const int64_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const int64_t ho = conv_out_len(h, kh, stride, padding);
  const int64_t wo = conv_out_len(w, kw, stride, padding);
  const int64_t hp = h + 2 * padding, wp = w + 2 * padding;

  Tensor padded = pad2d(input, padding);
  Tensor out(Shape{n, p_out, ho, wo});
  const double* x = padded.data();
  const double* k = kernels.data();
  const double* b = bias.data();
  double* y = out.data();

  for (int64_t in = 0; in < n; ++in) {
    for (int64_t pc = 0; pc < p_out; ++pc) {
      double* yrow = y + (in * p_out + pc) * ho * wo;
      const double bp = b[pc];
      for (int64_t i = 0; i < ho; ++i) {
        for (int64_t j = 0; j < wo; ++j) {
          double acc = bp;
          for (int64_t mc = 0; mc < m; ++mc) {
            const double* xc = x + (in * m + mc) * hp * wp + i * stride * wp + j * stride;
            const double* kc = k + (pc * m + mc) * kh * kw;
            for (int64_t s = 0; s < kh; ++s) {
              const double* xr = xc + s * wp;
              const double* kr = kc + s * kw;
              for (int64_t t = 0; t < kw; ++t) acc += kr[t] * xr[t];
            }
          }
          yrow[i * wo + j] = acc;
        }
      }
    }
  }
  if (cache) {
    cache->input_shape = input.shape();
    cache->padded = std::move(padded);
  }
  return out;
}

Conv2d::Grads Conv2d::backward(const Cache& cache, const Tensor& grad_output) const {
  const Tensor& x = cache.padded;
  const int64_t p_out = kernels.dim(0), m = kernels.dim(1);
  const int64_t kh = kernels.dim(2), kw = kernels.dim(3);
  const int64_t n = x.dim(0), hp = x.dim(2), wp = x.dim(3);
  const int64_t ho = (hp - kh) / stride + 1, wo = (wp - kw) / stride + 1;
  const Shape expected{n, p_out, ho, wo};
  if (!(grad_output.shape() == expected)) {
    throw ShapeError("conv2d backward: grad shape " + grad_output.shape().str() +
                     " does not match cached forward " + expected.str());
  }

  Tensor gpad(x.shape());
  Tensor gk(kernels.shape());
  Tensor gb(bias.shape());
  const double* gy = grad_output.data();
  const double* px = x.data();
  const double* pk = kernels.data();
  double* pgx = gpad.data();
  double* pgk = gk.data();
  double* pgb = gb.data();

  for (int64_t in = 0; in < n; ++in) {
    for (int64_t pc = 0; pc < p_out; ++pc) {
      const double* grow = gy + (in * p_out + pc) * ho * wo;
      for (int64_t i = 0; i < ho; ++i) {
        for (int64_t j = 0; j < wo; ++j) {
          const double g = grow[i * wo + j];
          if (g == 0.0) continue;
          pgb[pc] += g;
          for (int64_t mc = 0; mc < m; ++mc) {
            const double* xc = px + (in * m + mc) * hp * wp + i * stride * wp + j * stride;
            double* gxc = pgx + (in * m + mc) * hp * wp + i * stride * wp + j * stride;
            const double* kc = pk + (pc * m + mc) * kh * kw;
            double* gkc = pgk + (pc * m + mc) * kh * kw;
            for (int64_t s = 0; s < kh; ++s) {
              const double* xr = xc + s * wp;
              double* gxr = gxc + s * wp;
              const double* kr = kc + s * kw;
              double* gkr = gkc + s * kw;
              for (int64_t t = 0; t < kw; ++t) {
                gkr[t] += g * xr[t];
                gxr[t] += g * kr[t];
              }
            }
          }
        }
      }
    }
  }
  return Grads{crop2d(gpad, padding, cache.input_shape), std::move(gk), std::move(gb)};
}

Tensor Conv3d::forward(const Tensor& input, Cache* cache) const {
  if (input.rank() != 5) throw ShapeError("conv3d expects [N,C,D,H,W], got " + input.shape().str());
  const int64_t p_out = kernels.dim(0), m = kernels.dim(1);
  const int64_t kd = kernels.dim(2), kh = kernels.dim(3), kw = kernels.dim(4);
  if (input.dim(1) != m) {
    throw ShapeError("conv3d channel mismatch: input has " + std::to_string(input.dim(1)) +
                     ", kernels expect " + std::to_string(m));
  }
  const int64_t n = input.dim(0), d = input.dim(2), h = input.dim(3), w = input.dim(4);
  const int64_t d_o = conv_out_len(d, kd, stride, padding);
  const int64_t ho = conv_out_len(h, kh, stride, padding);
  const int64_t wo = conv_out_len(w, kw, stride, padding);
  const int64_t dp = d + 2 * padding, hp = h + 2 * padding, wp = w + 2 * padding;

  Tensor padded = pad3d(input, padding);
  Tensor out(Shape{n, p_out, d_o, ho, wo});
  const double* x = padded.data();
  const double* k = kernels.data();
  const double* b = bias.data();
  double* y = out.data();

  for (int64_t in = 0; in < n; ++in) {
    for (int64_t pc = 0; pc < p_out; ++pc) {
      double* yc = y + (in * p_out + pc) * d_o * ho * wo;
      const double bp = b[pc];
      for (int64_t od = 0; od < d_o; ++od) {
        for (int64_t i = 0; i < ho; ++i) {
          for (int64_t j = 0; j < wo; ++j) {
            double acc = bp;
            for (int64_t mc = 0; mc < m; ++mc) {
              const double* xc =
                  x + (in * m + mc) * dp * hp * wp + (od * stride * hp + i * stride) * wp + j * stride;
              const double* kc = k + (pc * m + mc) * kd * kh * kw;
              for (int64_t u = 0; u < kd; ++u) {
                for (int64_t s = 0; s < kh; ++s) {
                  const double* xr = xc + (u * hp + s) * wp;
                  const double* kr = kc + (u * kh + s) * kw;
                  for (int64_t t = 0; t < kw; ++t) acc += kr[t] * xr[t];
                }
              }
            }
            yc[(od * ho + i) * wo + j] = acc;
          }
        }
      }
    }
  }
  if (cache) {
    cache->input_shape = input.shape();
    cache->padded = std::move(padded);
  }
  return out;
}

Conv3d::Grads Conv3d::backward(const Cache& cache, const Tensor& grad_output) const {
  const Tensor& x = cache.padded;
  const int64_t p_out = kernels.dim(0), m = kernels.dim(1);
  const int64_t kd = kernels.dim(2), kh = kernels.dim(3), kw = kernels.dim(4);
  const int64_t n = x.dim(0), dp = x.dim(2), hp = x.dim(3), wp = x.dim(4);
  const int64_t d_o = (dp - kd) / stride + 1;
  const int64_t ho = (hp - kh) / stride + 1, wo = (wp - kw) / stride + 1;
  const Shape expected{n, p_out, d_o, ho, wo};
  if (!(grad_output.shape() == expected)) {
    throw ShapeError("conv3d backward: grad shape " + grad_output.shape().str() +
                     " does not match cached forward " + expected.str());
  }

  Tensor gpad(x.shape());
  Tensor gk(kernels.shape());
  Tensor gb(bias.shape());
  const double* gy = grad_output.data();
  const double* px = x.data();
  const double* pk = kernels.data();
  double* pgx = gpad.data();
  double* pgk = gk.data();
  double* pgb = gb.data();

  for (int64_t in = 0; in < n; ++in) {
    for (int64_t pc = 0; pc < p_out; ++pc) {
      const double* gc = gy + (in * p_out + pc) * d_o * ho * wo;
      for (int64_t od = 0; od < d_o; ++od) {
        for (int64_t i = 0; i < ho; ++i) {
          for (int64_t j = 0; j < wo; ++j) {
            const double g = gc[(od * ho + i) * wo + j];
            if (g == 0.0) continue;
            pgb[pc] += g;
            for (int64_t mc = 0; mc < m; ++mc) {
              const int64_t base =
                  (in * m + mc) * dp * hp * wp + (od * stride * hp + i * stride) * wp + j * stride;
              const double* kc = pk + (pc * m + mc) * kd * kh * kw;
              double* gkc = pgk + (pc * m + mc) * kd * kh * kw;
              for (int64_t u = 0; u < kd; ++u) {
                for (int64_t s = 0; s < kh; ++s) {
                  const double* xr = px + base + (u * hp + s) * wp;
                  double* gxr = pgx + base + (u * hp + s) * wp;
                  const double* kr = kc + (u * kh + s) * kw;
                  double* gkr = gkc + (u * kh + s) * kw;
                  for (int64_t t = 0; t < kw; ++t) {
                    gkr[t] += g * xr[t];
                    gxr[t] += g * kr[t];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return Grads{crop3d(gpad, padding, cache.input_shape), std::move(gk), std::move(gb)};
}

}  // namespace dscnn
