#pragma once

#include "dscnn/tensor.hpp"

namespace dscnn {

// Affine layer: y = x * W^T + b, weight [out, in], input [N, in].
struct Linear {
  Tensor weight;
  Tensor bias;

  struct Cache {
    Tensor input;
  };
  struct Grads {
    Tensor input;
    Tensor weight;
    Tensor bias;
  };

  Tensor forward(const Tensor& input, Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& grad_output) const;

  int64_t out_features() const { return weight.dim(0); }
  int64_t in_features() const { return weight.dim(1); }
};

// y = max(x, 0); the subgradient at exactly 0 is defined as 0.
struct Relu {
  struct Cache {
    Tensor input;
  };
  static Tensor forward(const Tensor& input, Cache* cache = nullptr);
  static Tensor backward(const Cache& cache, const Tensor& grad_output);
};

}  // namespace dscnn
