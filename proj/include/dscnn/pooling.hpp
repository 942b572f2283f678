#pragma once

#include <vector>

#include "dscnn/tensor.hpp"

namespace dscnn {

// Max pooling, no padding, channel count preserved. The forward pass records
// the flat input index of each window maximum; ties go to the first maximal
// element in row-major scan order so the backward pass is deterministic.
struct MaxPool2d {
  int64_t kernel = 3;
  int64_t stride = 1;

  struct Cache {
    std::vector<int64_t> argmax;  // flat input index per output element
    Shape input_shape;
  };

  Tensor forward(const Tensor& input, Cache* cache = nullptr) const;  // [N,C,H,W]
  Tensor backward(const Cache& cache, const Tensor& grad_output) const;
};

// 3D max pooling; the depth axis may use a different window than the two
// spatial axes (the network clamps it on shallow inputs).
struct MaxPool3d {
  int64_t kernel_depth = 3;
  int64_t kernel = 3;
  int64_t stride = 1;

  struct Cache {
    std::vector<int64_t> argmax;
    Shape input_shape;
  };

  Tensor forward(const Tensor& input, Cache* cache = nullptr) const;  // [N,C,D,H,W]
  Tensor backward(const Cache& cache, const Tensor& grad_output) const;
};

// Output length of one pooled axis; throws if the window exceeds the input.
int64_t pool_out_len(int64_t in_len, int64_t kernel, int64_t stride);

}  // namespace dscnn
