#include "dscnn/network.hpp"

#include <cmath>

namespace dscnn {

std::string variant_str(Variant v) {
  switch (v) {
    case Variant::Cnn2d: return "2d";
    case Variant::Cnn3dTime: return "3d-time";
    case Variant::Cnn3dVert: return "3d-vert";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "2d") return Variant::Cnn2d;
  if (s == "3d-time") return Variant::Cnn3dTime;
  if (s == "3d-vert") return Variant::Cnn3dVert;
  throw ConfigError("unknown variant '" + s + "', expected 2d | 3d-time | 3d-vert");
}

std::string activation_str(Activation a) {
  return a == Activation::Relu ? "relu" : "none";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  throw ConfigError("unknown activation '" + s + "', expected relu | none");
}

bool variant_is_3d(Variant v) {
  return v != Variant::Cnn2d;
}

void NetworkConfig::validate() const {
  if (conv_channels1 < 1 || conv_channels2 < 1) throw ConfigError("conv channel counts must be >= 1");
  if (fc_hidden < 1) throw ConfigError("fc_hidden must be >= 1");
  if (kernel_size < 1 || pool_kernel < 1) throw ConfigError("kernel sizes must be >= 1");
  if (stride < 1 || pool_stride < 1) throw ConfigError("strides must be >= 1");
  if (padding < 0) throw ConfigError("padding must be >= 0");
}

std::vector<LayerShape> infer_shapes(const NetworkConfig& config, const Shape& input_shape,
                                     std::optional<int64_t> depth_pool_kernel) {
  config.validate();
  const bool is3d = variant_is_3d(config.variant);
  const int64_t want_rank = is3d ? 4 : 3;
  if (input_shape.rank() != want_rank) {
    throw ShapeError("variant " + variant_str(config.variant) + " expects a rank-" +
                     std::to_string(want_rank) + " sample, got " + input_shape.str());
  }

  std::vector<LayerShape> shapes;
  const int64_t k = config.kernel_size;
  auto conv_spatial = [&](const std::vector<int64_t>& dims) {
    std::vector<int64_t> out = dims;
    for (size_t i = 1; i < out.size(); ++i) {
      out[i] = conv_out_len(out[i], k, config.stride, config.padding);
    }
    return out;
  };

  std::vector<int64_t> cur = input_shape.dims();
  cur = conv_spatial(cur);
  cur[0] = config.conv_channels1;
  shapes.push_back({"conv1", Shape(cur)});
  shapes.push_back({"bn1", Shape(cur)});
  if (config.activation != Activation::None) shapes.push_back({"act1", Shape(cur)});

  cur = conv_spatial(cur);
  cur[0] = config.conv_channels2;
  shapes.push_back({"conv2", Shape(cur)});
  shapes.push_back({"bn2", Shape(cur)});
  if (config.activation != Activation::None) shapes.push_back({"act2", Shape(cur)});

  for (size_t i = 1; i < cur.size(); ++i) {
    const bool depth_axis = is3d && i == 1;
    const int64_t window =
        depth_axis && depth_pool_kernel ? *depth_pool_kernel : config.pool_kernel;
    cur[i] = pool_out_len(cur[i], window, config.pool_stride);
  }
  shapes.push_back({"pool", Shape(cur)});

  int64_t flat = 1;
  for (int64_t d : cur) flat *= d;
  shapes.push_back({"flatten", Shape{flat}});
  shapes.push_back({"fc1", Shape{config.fc_hidden}});
  if (config.activation != Activation::None) shapes.push_back({"act3", Shape{config.fc_hidden}});
  shapes.push_back({"fc2", Shape{1}});
  return shapes;
}

namespace {

int64_t find_flat(const std::vector<LayerShape>& shapes) {
  for (const LayerShape& ls : shapes) {
    if (ls.name == "flatten") return ls.shape[0];
  }
  throw Error("layer list missing flatten");
}

int64_t resolve_depth_pool(const NetworkConfig& config, const Shape& input_shape, bool* clamped) {
  *clamped = false;
  if (!variant_is_3d(config.variant)) return config.pool_kernel;
  // depth after the conv stack (convs pad all axes uniformly)
  int64_t depth = input_shape[1];
  depth = conv_out_len(depth, config.kernel_size, config.stride, config.padding);
  depth = conv_out_len(depth, config.kernel_size, config.stride, config.padding);
  if (config.pool_kernel > depth) {
    *clamped = true;
    return depth;
  }
  return config.pool_kernel;
}

}  // namespace

int64_t parameter_count(const NetworkConfig& config, const Shape& input_shape) {
  bool clamped = false;
  const int64_t depth_pool = resolve_depth_pool(config, input_shape, &clamped);
  const auto shapes = infer_shapes(config, input_shape, depth_pool);
  const int64_t kvol = variant_is_3d(config.variant)
                           ? config.kernel_size * config.kernel_size * config.kernel_size
                           : config.kernel_size * config.kernel_size;
  const int64_t c_in = input_shape[0];
  const int64_t c1 = config.conv_channels1, c2 = config.conv_channels2;
  const int64_t flat = find_flat(shapes);
  int64_t count = 0;
  count += c1 * c_in * kvol + c1;  // conv1
  count += 2 * c1;                 // bn1
  count += c2 * c1 * kvol + c2;    // conv2
  count += 2 * c2;                 // bn2
  count += config.fc_hidden * flat + config.fc_hidden;
  count += config.fc_hidden + 1;
  return count;
}

const Tensor* NetworkState::find(const std::string& name) const {
  for (const auto& [key, value] : entries) {
    if (key == name) return &value;
  }
  return nullptr;
}

Network Network::build(const NetworkConfig& config, const Shape& input_shape, Rng& rng) {
  Network net;
  net.config_ = config;
  net.input_shape_ = input_shape;

  bool clamped = false;
  const int64_t depth_pool = resolve_depth_pool(config, input_shape, &clamped);
  net.depth_pool_clamped_ = clamped;
  net.depth_pool_kernel_ = depth_pool;

  const auto shapes = infer_shapes(config, input_shape, depth_pool);
  net.flat_features_ = find_flat(shapes);
  for (const LayerShape& ls : shapes) {
    if (ls.name == "pool") net.pooled_shape_ = ls.shape;
  }

  const bool is3d = variant_is_3d(config.variant);
  const int64_t k = config.kernel_size;
  const int64_t kvol = is3d ? k * k * k : k * k;
  const int64_t c_in = input_shape[0];
  const int64_t c1 = config.conv_channels1, c2 = config.conv_channels2;

  auto init_uniform = [&rng](Shape shape, int64_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    return uniform_tensor(rng, std::move(shape), -bound, bound);
  };

  if (is3d) {
    net.conv1_3d_ = Conv3d{init_uniform(Shape{c1, c_in, k, k, k}, c_in * kvol),
                           Tensor::zeros(Shape{c1}), config.stride, config.padding};
    net.conv2_3d_ = Conv3d{init_uniform(Shape{c2, c1, k, k, k}, c1 * kvol),
                           Tensor::zeros(Shape{c2}), config.stride, config.padding};
    net.pool_3d_ = MaxPool3d{depth_pool, config.pool_kernel, config.pool_stride};
  } else {
    net.conv1_2d_ = Conv2d{init_uniform(Shape{c1, c_in, k, k}, c_in * kvol),
                           Tensor::zeros(Shape{c1}), config.stride, config.padding};
    net.conv2_2d_ = Conv2d{init_uniform(Shape{c2, c1, k, k}, c1 * kvol),
                           Tensor::zeros(Shape{c2}), config.stride, config.padding};
    net.pool_2d_ = MaxPool2d{config.pool_kernel, config.pool_stride};
  }
  net.bn1_ = BatchNorm::make(c1);
  net.bn2_ = BatchNorm::make(c2);
  net.fc1_ = Linear{init_uniform(Shape{config.fc_hidden, net.flat_features_}, net.flat_features_),
                    Tensor::zeros(Shape{config.fc_hidden})};
  net.fc2_ = Linear{init_uniform(Shape{1, config.fc_hidden}, config.fc_hidden),
                    Tensor::zeros(Shape{1})};
  return net;
}

Tensor Network::forward(const Tensor& batch, bool training, Tape* tape) {
  const int64_t want_rank = input_shape_.rank() + 1;
  if (batch.rank() != want_rank) {
    throw ShapeError("batch rank " + std::to_string(batch.rank()) + " does not match sample shape " +
                     input_shape_.str());
  }
  for (int64_t i = 0; i < input_shape_.rank(); ++i) {
    if (batch.dim(i + 1) != input_shape_[i]) {
      throw ShapeError("batch shape " + batch.shape().str() + " does not match sample shape " +
                       input_shape_.str());
    }
  }
  const int64_t n = batch.dim(0);
  const bool act = config_.activation == Activation::Relu;
  const bool is3d = variant_is_3d(config_.variant);

  Tensor x;
  if (is3d) {
    x = conv1_3d_->forward(batch, tape ? &tape->conv1_3d : nullptr);
  } else {
    x = conv1_2d_->forward(batch, tape ? &tape->conv1_2d : nullptr);
  }
  x = bn1_.forward(x, training, tape ? &tape->bn1 : nullptr);
  if (act) x = Relu::forward(x, tape ? &tape->act1 : nullptr);

  if (is3d) {
    x = conv2_3d_->forward(x, tape ? &tape->conv2_3d : nullptr);
  } else {
    x = conv2_2d_->forward(x, tape ? &tape->conv2_2d : nullptr);
  }
  x = bn2_.forward(x, training, tape ? &tape->bn2 : nullptr);
  if (act) x = Relu::forward(x, tape ? &tape->act2 : nullptr);

  if (is3d) {
    x = pool_3d_->forward(x, tape ? &tape->pool_3d : nullptr);
  } else {
    x = pool_2d_->forward(x, tape ? &tape->pool_2d : nullptr);
  }
  if (tape) {
    tape->pre_flatten = x.shape();
    tape->batch = n;
  }
  x = reshape(x, Shape{n, flat_features_});
  x = fc1_.forward(x, tape ? &tape->fc1 : nullptr);
  if (act) x = Relu::forward(x, tape ? &tape->act3 : nullptr);
  x = fc2_.forward(x, tape ? &tape->fc2 : nullptr);
  return reshape(x, Shape{n});
}

std::vector<Tensor> Network::backward(const Tape& tape, const Tensor& grad_predictions) {
  if (grad_predictions.numel() != tape.batch) {
    throw ShapeError("grad_predictions length does not match taped batch");
  }
  const bool act = config_.activation == Activation::Relu;
  const bool is3d = variant_is_3d(config_.variant);

  Tensor g = reshape(grad_predictions, Shape{tape.batch, 1});
  Linear::Grads fc2g = fc2_.backward(tape.fc2, g);
  g = std::move(fc2g.input);
  if (act) g = Relu::backward(tape.act3, g);
  Linear::Grads fc1g = fc1_.backward(tape.fc1, g);
  g = reshape(fc1g.input, tape.pre_flatten);

  if (is3d) {
    g = pool_3d_->backward(tape.pool_3d, g);
  } else {
    g = pool_2d_->backward(tape.pool_2d, g);
  }
  if (act) g = Relu::backward(tape.act2, g);
  BatchNorm::Grads bn2g = bn2_.backward(tape.bn2, g);
  g = std::move(bn2g.input);

  Tensor conv2_k, conv2_b, conv1_k, conv1_b;
  if (is3d) {
    Conv3d::Grads c2g = conv2_3d_->backward(tape.conv2_3d, g);
    g = std::move(c2g.input);
    conv2_k = std::move(c2g.kernels);
    conv2_b = std::move(c2g.bias);
  } else {
    Conv2d::Grads c2g = conv2_2d_->backward(tape.conv2_2d, g);
    g = std::move(c2g.input);
    conv2_k = std::move(c2g.kernels);
    conv2_b = std::move(c2g.bias);
  }
  if (act) g = Relu::backward(tape.act1, g);
  BatchNorm::Grads bn1g = bn1_.backward(tape.bn1, g);
  g = std::move(bn1g.input);
  if (is3d) {
    Conv3d::Grads c1g = conv1_3d_->backward(tape.conv1_3d, g);
    conv1_k = std::move(c1g.kernels);
    conv1_b = std::move(c1g.bias);
  } else {
    Conv2d::Grads c1g = conv1_2d_->backward(tape.conv1_2d, g);
    conv1_k = std::move(c1g.kernels);
    conv1_b = std::move(c1g.bias);
  }

  std::vector<Tensor> grads;
  grads.reserve(12);
  grads.push_back(std::move(conv1_k));
  grads.push_back(std::move(conv1_b));
  grads.push_back(std::move(bn1g.gamma));
  grads.push_back(std::move(bn1g.beta));
  grads.push_back(std::move(conv2_k));
  grads.push_back(std::move(conv2_b));
  grads.push_back(std::move(bn2g.gamma));
  grads.push_back(std::move(bn2g.beta));
  grads.push_back(std::move(fc1g.weight));
  grads.push_back(std::move(fc1g.bias));
  grads.push_back(std::move(fc2g.weight));
  grads.push_back(std::move(fc2g.bias));
  return grads;
}

std::vector<ParamRef> Network::params() {
  const bool is3d = variant_is_3d(config_.variant);
  Tensor* c1k = is3d ? &conv1_3d_->kernels : &conv1_2d_->kernels;
  Tensor* c1b = is3d ? &conv1_3d_->bias : &conv1_2d_->bias;
  Tensor* c2k = is3d ? &conv2_3d_->kernels : &conv2_2d_->kernels;
  Tensor* c2b = is3d ? &conv2_3d_->bias : &conv2_2d_->bias;
  return {
      {"conv1.kernels", c1k}, {"conv1.bias", c1b},
      {"bn1.gamma", &bn1_.gamma}, {"bn1.beta", &bn1_.beta},
      {"conv2.kernels", c2k}, {"conv2.bias", c2b},
      {"bn2.gamma", &bn2_.gamma}, {"bn2.beta", &bn2_.beta},
      {"fc1.weight", &fc1_.weight}, {"fc1.bias", &fc1_.bias},
      {"fc2.weight", &fc2_.weight}, {"fc2.bias", &fc2_.bias},
  };
}

NetworkState Network::state() const {
  Network& self = const_cast<Network&>(*this);
  NetworkState st;
  for (const ParamRef& p : self.params()) st.entries.emplace_back(p.name, *p.tensor);
  st.entries.emplace_back("bn1.running_mean", bn1_.running_mean);
  st.entries.emplace_back("bn1.running_var", bn1_.running_var);
  st.entries.emplace_back("bn2.running_mean", bn2_.running_mean);
  st.entries.emplace_back("bn2.running_var", bn2_.running_var);
  return st;
}

void Network::set_state(const NetworkState& state) {
  auto assign = [&state](const std::string& name, Tensor& dst) {
    const Tensor* src = state.find(name);
    if (!src) throw DataError("network state missing tensor '" + name + "'");
    if (!(src->shape() == dst.shape())) {
      throw ShapeError("network state tensor '" + name + "' has shape " + src->shape().str() +
                       ", expected " + dst.shape().str());
    }
    dst = *src;
  };
  for (const ParamRef& p : params()) assign(p.name, *p.tensor);
  assign("bn1.running_mean", bn1_.running_mean);
  assign("bn1.running_var", bn1_.running_var);
  assign("bn2.running_mean", bn2_.running_mean);
  assign("bn2.running_var", bn2_.running_var);
}

}  // namespace dscnn
