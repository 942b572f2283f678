#pragma once

#include <filesystem>
#include <limits>

#include "dscnn/experiment.hpp"
#include "dscnn/network.hpp"

namespace dscnn {

// Everything needed to rebuild a trained model and reproduce its predictions:
// architecture, parameters and BN running statistics, the standardization
// statistics of its training split, the experiment definition, and the run
// seed. Stored as checkpoint.json plus a PRM1 scalar blob (always f64 so a
// save/load round trip reproduces forward outputs bit-exactly).
struct Checkpoint {
  NetworkConfig config;
  Shape input_shape;
  uint64_t seed = 0;
  bool depth_pool_clamped = false;
  int64_t depth_pool_kernel = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  int64_t best_epoch = 0;
  int64_t epochs_run = 0;
  NetworkState state;
  ChannelStats channel_stats;
  TargetStats target_stats;
  ExperimentSpec experiment;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Rebuilds the network and installs the stored parameters and running stats.
Network restore_network(const Checkpoint& ckpt);

}  // namespace dscnn
