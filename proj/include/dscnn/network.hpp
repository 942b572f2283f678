#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dscnn/batchnorm.hpp"
#include "dscnn/conv.hpp"
#include "dscnn/linear.hpp"
#include "dscnn/pooling.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

enum class Variant { Cnn2d, Cnn3dTime, Cnn3dVert };
enum class Activation { None, Relu };

std::string variant_str(Variant v);
Variant parse_variant(const std::string& s);
std::string activation_str(Activation a);
Activation parse_activation(const std::string& s);
bool variant_is_3d(Variant v);

// Architecture: conv -> BN (-> act) -> conv -> BN (-> act) -> max pool ->
// flatten -> FC (-> act) -> FC(1). The 3D variants use the same structure
// with 3D convolution and pooling.
struct NetworkConfig {
  Variant variant = Variant::Cnn2d;
  int64_t conv_channels1 = 32;
  int64_t conv_channels2 = 64;
  int64_t kernel_size = 3;
  int64_t stride = 1;
  int64_t padding = 1;
  int64_t pool_kernel = 3;
  int64_t pool_stride = 1;
  int64_t fc_hidden = 64;
  Activation activation = Activation::Relu;

  void validate() const;
};

struct LayerShape {
  std::string name;
  Shape shape;
};

// Per-layer output shapes for a single sample ([C,H,W] for the 2D variant,
// [C,D,H,W] for 3D). The pool window is applied as configured on every axis;
// any non-positive intermediate dimension throws ShapeError. The network
// builder may pass a clamped depth window via depth_pool_kernel.
std::vector<LayerShape> infer_shapes(const NetworkConfig& config, const Shape& input_shape,
                                     std::optional<int64_t> depth_pool_kernel = std::nullopt);

// Closed-form learnable-parameter count for a config and input shape.
int64_t parameter_count(const NetworkConfig& config, const Shape& input_shape);

struct ParamRef {
  std::string name;
  Tensor* tensor;
};

// Parameter and state snapshot (learnable tensors + BN running statistics).
struct NetworkState {
  std::vector<std::pair<std::string, Tensor>> entries;

  const Tensor* find(const std::string& name) const;
};

class Network {
public:
  // Initializes weights uniformly in +/- sqrt(6 / fan_in), biases at zero,
  // BN at gamma=1, beta=0, running stats (0, 1). Draw order is fixed
  // (conv1, conv2, fc1, fc2), so equal seeds give bitwise-equal networks.
  // For 3D inputs whose depth is shallower than the pool window, the depth
  // window is clamped to the depth and the clamp is reported via
  // depth_pool_clamped().
  static Network build(const NetworkConfig& config, const Shape& input_shape, Rng& rng);

  struct Tape;

  // batch [N, <input_shape>] -> predictions [N]. Training mode uses batch
  // statistics in BN and records what backward() needs into the tape.
  Tensor forward(const Tensor& batch, bool training, Tape* tape = nullptr);

  // Gradients of a scalar loss w.r.t. every learnable parameter, aligned
  // with params(); grad_predictions is dLoss/dPredictions [N].
  std::vector<Tensor> backward(const Tape& tape, const Tensor& grad_predictions);

  std::vector<ParamRef> params();

  NetworkState state() const;
  void set_state(const NetworkState& state);

  const NetworkConfig& config() const { return config_; }
  const Shape& input_shape() const { return input_shape_; }
  bool depth_pool_clamped() const { return depth_pool_clamped_; }
  int64_t depth_pool_kernel() const { return depth_pool_kernel_; }
  int64_t flat_features() const { return flat_features_; }

private:
  Network() = default;

  NetworkConfig config_;
  Shape input_shape_;
  bool depth_pool_clamped_ = false;
  int64_t depth_pool_kernel_ = 0;
  int64_t flat_features_ = 0;
  Shape pooled_shape_;  // per-sample shape entering flatten

  std::optional<Conv2d> conv1_2d_, conv2_2d_;
  std::optional<Conv3d> conv1_3d_, conv2_3d_;
  std::optional<MaxPool2d> pool_2d_;
  std::optional<MaxPool3d> pool_3d_;
  BatchNorm bn1_, bn2_;
  Linear fc1_, fc2_;
};

struct Network::Tape {
  Conv2d::Cache conv1_2d, conv2_2d;
  Conv3d::Cache conv1_3d, conv2_3d;
  MaxPool2d::Cache pool_2d;
  MaxPool3d::Cache pool_3d;
  BatchNorm::Cache bn1, bn2;
  Relu::Cache act1, act2, act3;
  Linear::Cache fc1, fc2;
  Shape pre_flatten;
  int64_t batch = 0;
};

}  // namespace dscnn
