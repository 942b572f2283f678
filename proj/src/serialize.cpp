#include "dscnn/serialize.hpp"

#include <fstream>

namespace dscnn {

using nlohmann::json;

json to_json(const Shape& shape) {
  return json(shape.dims());
}

Shape shape_from_json(const json& j) {
  return Shape(j.get<std::vector<int64_t>>());
}

json to_json(const NetworkConfig& c) {
  return json{{"variant", variant_str(c.variant)},
              {"conv_channels", {c.conv_channels1, c.conv_channels2}},
              {"kernel_size", c.kernel_size},
              {"stride", c.stride},
              {"padding", c.padding},
              {"pool_kernel", c.pool_kernel},
              {"pool_stride", c.pool_stride},
              {"fc_hidden", c.fc_hidden},
              {"activation", activation_str(c.activation)}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  const auto channels = j.at("conv_channels").get<std::vector<int64_t>>();
  if (channels.size() != 2) throw DataError("conv_channels must list two counts");
  c.conv_channels1 = channels[0];
  c.conv_channels2 = channels[1];
  c.kernel_size = j.at("kernel_size").get<int64_t>();
  c.stride = j.at("stride").get<int64_t>();
  c.padding = j.at("padding").get<int64_t>();
  c.pool_kernel = j.at("pool_kernel").get<int64_t>();
  c.pool_stride = j.at("pool_stride").get<int64_t>();
  c.fc_hidden = j.at("fc_hidden").get<int64_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"patience", c.patience},
              {"max_epochs", c.max_epochs},
              {"restarts", c.restarts},
              {"base_seed", c.base_seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int64_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.patience = j.at("patience").get<int64_t>();
  c.max_epochs = j.at("max_epochs").get<int64_t>();
  c.restarts = j.at("restarts").get<int64_t>();
  c.base_seed = j.at("base_seed").get<uint64_t>();
  c.validate();
  return c;
}

json to_json(const SplitSpec& s) {
  return json{{"train", {s.train.start.str(), s.train.end.str()}},
              {"validation", {s.validation.start.str(), s.validation.end.str()}},
              {"test", {s.test.start.str(), s.test.end.str()}}};
}

SplitSpec split_spec_from_json(const json& j) {
  auto range = [&j](const char* key) {
    const auto pair = j.at(key).get<std::vector<std::string>>();
    if (pair.size() != 2) throw DataError(std::string("split range '") + key + "' must be [start, end]");
    return DateRange{Date::parse(pair[0]), Date::parse(pair[1])};
  };
  return SplitSpec{range("train"), range("validation"), range("test")};
}

json to_json(const ExperimentSpec& e) {
  return json{{"timesteps", time_selector_str(e.timesteps)},
              {"levels_hpa", e.levels_hpa},
              {"splits", to_json(e.splits)},
              {"label", e.label}};
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec e;
  e.timesteps = parse_time_selector(j.at("timesteps").get<std::string>());
  e.levels_hpa = j.at("levels_hpa").get<std::vector<double>>();
  e.splits = split_spec_from_json(j.at("splits"));
  e.label = j.at("label").get<std::string>();
  return e;
}

json read_json_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot open " + file.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& file, const json& j) {
  std::ofstream os(file);
  if (!os) throw DataError("cannot open " + file.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw DataError("failed writing " + file.string());
}

}  // namespace dscnn
