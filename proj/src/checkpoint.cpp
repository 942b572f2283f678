#include "dscnn/checkpoint.hpp"

#include <cstring>

#include "dscnn/blob.hpp"
#include "dscnn/serialize.hpp"

namespace dscnn {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kParamsFile = "params.bin";

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const auto& [name, tensor] : ckpt.state.entries) tensors.emplace_back(name, &tensor);
  tensors.emplace_back("stats.channel_mean", &ckpt.channel_stats.mean);
  tensors.emplace_back("stats.channel_std", &ckpt.channel_stats.stddev);
  Tensor constant_flags(Shape{static_cast<int64_t>(ckpt.channel_stats.constant.size())});
  for (size_t i = 0; i < ckpt.channel_stats.constant.size(); ++i) {
    constant_flags[static_cast<int64_t>(i)] = ckpt.channel_stats.constant[i] ? 1.0 : 0.0;
  }
  tensors.emplace_back("stats.channel_constant", &constant_flags);

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "checkpoint";
  manifest["config"] = to_json(ckpt.config);
  manifest["input_shape"] = to_json(ckpt.input_shape);
  manifest["seed"] = ckpt.seed;
  manifest["depth_pool_clamped"] = ckpt.depth_pool_clamped;
  manifest["depth_pool_kernel"] = ckpt.depth_pool_kernel;
  manifest["training"] = {{"best_val_loss", ckpt.best_val_loss},
                          {"best_epoch", ckpt.best_epoch},
                          {"epochs_run", ckpt.epochs_run}};
  manifest["target_stats"] = {{"mean", ckpt.target_stats.mean},
                              {"stddev", ckpt.target_stats.stddev},
                              {"constant", ckpt.target_stats.constant}};
  manifest["experiment"] = to_json(ckpt.experiment);
  manifest["precision"] = precision_str(Precision::F64);
  manifest["params_file"] = kParamsFile;

  json tensor_list = json::array();
  std::vector<double> blob;
  for (const auto& [name, tensor] : tensors) {
    tensor_list.push_back({{"name", name}, {"shape", to_json(tensor->shape())}});
    blob.insert(blob.end(), tensor->data(), tensor->data() + tensor->numel());
  }
  manifest["tensors"] = tensor_list;

  write_json_file(dir / "checkpoint.json", manifest);
  write_blob(dir / kParamsFile, "PRM1", blob.data(), static_cast<int64_t>(blob.size()),
             Precision::F64);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const json manifest = read_json_file(dir / "checkpoint.json");
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.config = network_config_from_json(manifest.at("config"));
    ckpt.input_shape = shape_from_json(manifest.at("input_shape"));
    ckpt.seed = manifest.at("seed").get<uint64_t>();
    ckpt.depth_pool_clamped = manifest.at("depth_pool_clamped").get<bool>();
    ckpt.depth_pool_kernel = manifest.at("depth_pool_kernel").get<int64_t>();
    const json& training = manifest.at("training");
    // NaN (untrained checkpoint) serializes as null
    ckpt.best_val_loss = training.at("best_val_loss").is_number()
                             ? training.at("best_val_loss").get<double>()
                             : std::numeric_limits<double>::quiet_NaN();
    ckpt.best_epoch = training.at("best_epoch").get<int64_t>();
    ckpt.epochs_run = training.at("epochs_run").get<int64_t>();
    const json& tstats = manifest.at("target_stats");
    ckpt.target_stats.mean = tstats.at("mean").get<double>();
    ckpt.target_stats.stddev = tstats.at("stddev").get<double>();
    ckpt.target_stats.constant = tstats.at("constant").get<bool>();
    ckpt.experiment = experiment_from_json(manifest.at("experiment"));

    const Precision precision = parse_precision(manifest.at("precision").get<std::string>());
    const json& tensor_list = manifest.at("tensors");
    int64_t total = 0;
    std::vector<std::pair<std::string, Shape>> entries;
    for (const json& item : tensor_list) {
      entries.emplace_back(item.at("name").get<std::string>(), shape_from_json(item.at("shape")));
      total += entries.back().second.numel();
    }
    const std::vector<double> blob =
        read_blob(dir / manifest.at("params_file").get<std::string>(), "PRM1", total, precision);

    Tensor channel_constant;
    int64_t offset = 0;
    for (const auto& [name, shape] : entries) {
      std::vector<double> values(blob.begin() + offset, blob.begin() + offset + shape.numel());
      offset += shape.numel();
      Tensor tensor(shape, std::move(values));
      if (name == "stats.channel_mean") {
        ckpt.channel_stats.mean = std::move(tensor);
      } else if (name == "stats.channel_std") {
        ckpt.channel_stats.stddev = std::move(tensor);
      } else if (name == "stats.channel_constant") {
        channel_constant = std::move(tensor);
      } else {
        ckpt.state.entries.emplace_back(name, std::move(tensor));
      }
    }
    if (ckpt.channel_stats.mean.numel() != ckpt.channel_stats.stddev.numel() ||
        ckpt.channel_stats.mean.numel() != channel_constant.numel()) {
      throw DataError("checkpoint stats tensors are inconsistent");
    }
    ckpt.channel_stats.constant.resize(static_cast<size_t>(channel_constant.numel()));
    for (int64_t i = 0; i < channel_constant.numel(); ++i) {
      ckpt.channel_stats.constant[static_cast<size_t>(i)] = channel_constant[i] != 0.0 ? 1 : 0;
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError(dir.string() + "/checkpoint.json: " + e.what());
  }
}

Network restore_network(const Checkpoint& ckpt) {
  Rng rng(ckpt.seed);
  Network net = Network::build(ckpt.config, ckpt.input_shape, rng);
  net.set_state(ckpt.state);
  return net;
}

}  // namespace dscnn
