#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dscnn/network.hpp"

namespace dscnn {

struct TrainConfig {
  int64_t batch_size = 512;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t patience = 40;   // epochs without a new validation minimum
  int64_t max_epochs = 1000;
  int64_t restarts = 200;
  uint64_t base_seed = 0;

  void validate() const;
};

// Mean square error over equal-length vectors; when grad_pred is non-null it
// receives dMSE/dpred = 2 (pred - target) / N.
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred = nullptr);

// A seeded permutation of [0, n) chunked into batches. The final short chunk
// is kept unless it has fewer than 2 samples (batch norm needs 2), in which
// case it is dropped for that epoch.
std::vector<std::vector<int64_t>> shuffle_batches(int64_t n_samples, int64_t batch_size, Rng& rng);

// Adam with bias correction; moments are zero-initialized per parameter.
// Throws NonFiniteGradient (naming the parameter) on NaN/Inf gradients.
class Adam {
public:
  Adam(std::vector<ParamRef> params, const TrainConfig& config);
  void step(const std::vector<Tensor>& grads);
  int64_t steps() const { return t_; }
  const Tensor& first_moment(size_t i) const { return m_[i]; }
  const Tensor& second_moment(size_t i) const { return v_[i]; }

private:
  std::vector<ParamRef> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

// Inputs plus standardized targets for one split.
struct SplitTensors {
  Tensor inputs;
  Tensor targets;
  int64_t samples() const { return targets.numel(); }
};

// Inference-mode MSE over a split, evaluated in fixed-size chunks.
double evaluate_mse(Network& net, const Tensor& inputs, const Tensor& targets,
                    int64_t chunk = 512);

struct EpochPoint {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct RunResult {
  uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int64_t best_epoch = 0;
  int64_t epochs_run = 0;
  NetworkState best_state;
  std::vector<EpochPoint> curve;
  double wall_seconds = 0.0;
};

// Replaces the default validation evaluation (inference-mode MSE over the
// validation split); used by protocol tests to script loss sequences.
using ValEvaluator = std::function<double(Network& net, int64_t epoch)>;

// One training run: shuffled mini-batches with BN in training mode, one Adam
// step per batch, validation loss per epoch with BN in inference mode. Stops
// once (epoch - best_epoch) > patience or at max_epochs, and returns the
// parameter snapshot of the best epoch. Divergence (non-finite loss or
// gradient) marks the run failed instead of throwing.
RunResult fit(Network& net, const SplitTensors& train, const SplitTensors& val,
              const TrainConfig& config, Rng& rng, const ValEvaluator& val_eval = {});

using NetworkBuilder = std::function<Network(Rng& rng)>;
using EvaluatorFactory = std::function<ValEvaluator(int64_t run_index)>;

struct SweepResult {
  int64_t selected = -1;
  std::vector<RunResult> runs;

  const RunResult& best() const { return runs[static_cast<size_t>(selected)]; }
};

// config.restarts independent runs; run i draws everything (weights and
// batch order) from seed base_seed + i. Selects the lowest best_val_loss
// among non-failed runs (ties -> lowest run index), independent of how runs
// are scheduled across jobs worker threads.
SweepResult multi_restart_fit(const NetworkBuilder& builder, const SplitTensors& train,
                              const SplitTensors& val, const TrainConfig& config,
                              int64_t jobs = 1, const EvaluatorFactory& eval_factory = {});

}  // namespace dscnn
