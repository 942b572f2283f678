#include "dscnn/batchnorm.hpp"

#include <cmath>

namespace dscnn {

BatchNorm BatchNorm::make(int64_t channels, double eps, double momentum) {
  BatchNorm bn;
  bn.gamma = Tensor::full(Shape{channels}, 1.0);
  bn.beta = Tensor::zeros(Shape{channels});
  bn.running_mean = Tensor::zeros(Shape{channels});
  bn.running_var = Tensor::full(Shape{channels}, 1.0);
  bn.eps = eps;
  bn.momentum = momentum;
  return bn;
}

Tensor BatchNorm::forward(const Tensor& input, bool training, Cache* cache) {
  if (input.rank() < 2) {
    throw ShapeError("batchnorm expects [N,C,...], got " + input.shape().str());
  }
  const int64_t n = input.dim(0), c = input.dim(1);
  if (c != channels()) {
    throw ShapeError("batchnorm channel mismatch: input has " + std::to_string(c) +
                     ", layer has " + std::to_string(channels()));
  }
  if (training && n < 2) {
    throw Error("batchnorm training mode requires a batch of at least 2 samples");
  }
  const int64_t inner = input.numel() / (n * c);
  const int64_t m = n * inner;

  Tensor mean(Shape{c});
  Tensor var(Shape{c});
  if (training) {
    double* pm = mean.data();
    double* pv = var.data();
    const double* x = input.data();
    for (int64_t in = 0; in < n; ++in) {
      for (int64_t ic = 0; ic < c; ++ic) {
        const double* row = x + (in * c + ic) * inner;
        double s = 0.0;
        for (int64_t j = 0; j < inner; ++j) s += row[j];
        pm[ic] += s;
      }
    }
    for (int64_t ic = 0; ic < c; ++ic) pm[ic] /= static_cast<double>(m);
    for (int64_t in = 0; in < n; ++in) {
      for (int64_t ic = 0; ic < c; ++ic) {
        const double* row = x + (in * c + ic) * inner;
        const double mu = pm[ic];
        double s = 0.0;
        for (int64_t j = 0; j < inner; ++j) {
          const double d = row[j] - mu;
          s += d * d;
        }
        pv[ic] += s;
      }
    }
    for (int64_t ic = 0; ic < c; ++ic) pv[ic] /= static_cast<double>(m);
  } else {
    mean = running_mean;
    var = running_var;
  }

  Tensor inv_std(Shape{c});
  for (int64_t ic = 0; ic < c; ++ic) inv_std[ic] = 1.0 / std::sqrt(var[ic] + eps);

  Tensor normalized(input.shape());
  Tensor out(input.shape());
  const double* x = input.data();
  double* xhat = normalized.data();
  double* y = out.data();
  for (int64_t in = 0; in < n; ++in) {
    for (int64_t ic = 0; ic < c; ++ic) {
      const int64_t off = (in * c + ic) * inner;
      const double mu = mean[ic], istd = inv_std[ic];
      const double g = gamma[ic], bt = beta[ic];
      for (int64_t j = 0; j < inner; ++j) {
        const double z = (x[off + j] - mu) * istd;
        xhat[off + j] = z;
        y[off + j] = g * z + bt;
      }
    }
  }

  if (training) {
    for (int64_t ic = 0; ic < c; ++ic) {
      running_mean[ic] = (1.0 - momentum) * running_mean[ic] + momentum * mean[ic];
      running_var[ic] = (1.0 - momentum) * running_var[ic] + momentum * var[ic];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->reduce_count = m;
    cache->training = training;
  }
  return out;
}

BatchNorm::Grads BatchNorm::backward(const Cache& cache, const Tensor& grad_output) const {
  if (!cache.training) {
    throw Error("batchnorm backward requires a training-mode cache");
  }
  if (!(grad_output.shape() == cache.normalized.shape())) {
    throw ShapeError("batchnorm backward: grad shape " + grad_output.shape().str() +
                     " does not match cached forward " + cache.normalized.shape().str());
  }
  const int64_t n = grad_output.dim(0), c = grad_output.dim(1);
  const int64_t inner = grad_output.numel() / (n * c);
  const double m = static_cast<double>(cache.reduce_count);

  Tensor ggamma(Shape{c});
  Tensor gbeta(Shape{c});
  const double* gy = grad_output.data();
  const double* xhat = cache.normalized.data();
  for (int64_t in = 0; in < n; ++in) {
    for (int64_t ic = 0; ic < c; ++ic) {
      const int64_t off = (in * c + ic) * inner;
      double sg = 0.0, sb = 0.0;
      for (int64_t j = 0; j < inner; ++j) {
        sg += gy[off + j] * xhat[off + j];
        sb += gy[off + j];
      }
      ggamma[ic] += sg;
      gbeta[ic] += sb;
    }
  }

  // dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy * xhat))
  Tensor gx(cache.normalized.shape());
  double* pgx = gx.data();
  for (int64_t in = 0; in < n; ++in) {
    for (int64_t ic = 0; ic < c; ++ic) {
      const int64_t off = (in * c + ic) * inner;
      const double k = gamma[ic] * cache.inv_std[ic];
      const double mean_dy = gbeta[ic] / m;
      const double mean_dy_xhat = ggamma[ic] / m;
      for (int64_t j = 0; j < inner; ++j) {
        pgx[off + j] = k * (gy[off + j] - mean_dy - xhat[off + j] * mean_dy_xhat);
      }
    }
  }
  return Grads{std::move(gx), std::move(ggamma), std::move(gbeta)};
}

}  // namespace dscnn
