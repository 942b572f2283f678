#pragma once

#include "dscnn/tensor.hpp"

namespace dscnn {

// Batch normalization over axis 1 of an [N, C, ...] tensor. Training mode
// normalizes with per-channel batch statistics (population variance over
// batch and all trailing axes) and updates the running estimates as
//   running <- (1 - momentum) * running + momentum * batch.
// Inference mode normalizes with the running estimates.
struct BatchNorm {
  Tensor gamma;         // [C]
  Tensor beta;          // [C]
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNorm make(int64_t channels, double eps = 1e-5, double momentum = 0.1);

  struct Cache {
    Tensor normalized;  // (x - mean) * inv_std
    Tensor inv_std;     // [C]
    int64_t reduce_count = 0;
    bool training = false;
  };
  struct Grads {
    Tensor input;
    Tensor gamma;
    Tensor beta;
  };

  Tensor forward(const Tensor& input, bool training, Cache* cache = nullptr);
  Grads backward(const Cache& cache, const Tensor& grad_output) const;

  int64_t channels() const { return gamma.dim(0); }
};

}  // namespace dscnn
