#pragma once

#include "dscnn/tensor.hpp"

namespace dscnn {

// 2D convolution with zero padding and a shared stride on both spatial axes.
// kernels [P, M, KH, KW], bias [P]; input [N, M, H, W] -> [N, P, H', W'] with
// H' = (H + 2*padding - KH) / stride + 1.
struct Conv2d {
  Tensor kernels;
  Tensor bias;
  int64_t stride = 1;
  int64_t padding = 0;

  struct Cache {
    Tensor padded;  // zero-padded input [N, M, H+2p, W+2p]
    Shape input_shape;
  };
  struct Grads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
  };

  Tensor forward(const Tensor& input, Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& grad_output) const;

  int64_t out_channels() const { return kernels.dim(0); }
  int64_t in_channels() const { return kernels.dim(1); }
};

// 3D convolution; all three axes (depth, height, width) share the stride and
// zero-padding width. kernels [P, M, KD, KH, KW]; input [N, M, D, H, W].
struct Conv3d {
  Tensor kernels;
  Tensor bias;
  int64_t stride = 1;
  int64_t padding = 0;

  struct Cache {
    Tensor padded;  // [N, M, D+2p, H+2p, W+2p]
    Shape input_shape;
  };
  struct Grads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
  };

  Tensor forward(const Tensor& input, Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& grad_output) const;

  int64_t out_channels() const { return kernels.dim(0); }
  int64_t in_channels() const { return kernels.dim(1); }
};

// Output length of one convolved axis; throws if the window does not fit.
int64_t conv_out_len(int64_t in_len, int64_t kernel, int64_t stride, int64_t padding);

}  // namespace dscnn
