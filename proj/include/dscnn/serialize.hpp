#pragma once

#include <json.hpp>

#include "dscnn/experiment.hpp"
#include "dscnn/network.hpp"
#include "dscnn/trainer.hpp"

namespace dscnn {

nlohmann::json to_json(const Shape& shape);
Shape shape_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SplitSpec& spec);
SplitSpec split_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& file);
void write_json_file(const std::filesystem::path& file, const nlohmann::json& j);

}  // namespace dscnn
