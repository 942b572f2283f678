#include "dscnn/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

namespace dscnn {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch norm constraint)");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
}

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_pred) {
  if (pred.rank() != 1 || target.rank() != 1 || pred.numel() != target.numel()) {
    throw ShapeError("mse_loss: shapes " + pred.shape().str() + " vs " + target.shape().str());
  }
  const int64_t n = pred.numel();
  if (n < 1) throw ShapeError("mse_loss: empty input");
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double e = pred[i] - target[i];
    sum += e * e;
  }
  const double loss = sum / static_cast<double>(n);
  if (grad_pred) {
    Tensor g(pred.shape());
    const double k = 2.0 / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) g[i] = k * (pred[i] - target[i]);
    *grad_pred = std::move(g);
  }
  return loss;
}

std::vector<std::vector<int64_t>> shuffle_batches(int64_t n_samples, int64_t batch_size, Rng& rng) {
  if (n_samples < 1) throw ConfigError("shuffle_batches: need at least one sample");
  if (batch_size < 1) throw ConfigError("shuffle_batches: batch_size must be >= 1");
  std::vector<int64_t> perm(static_cast<size_t>(n_samples));
  for (int64_t i = 0; i < n_samples; ++i) perm[static_cast<size_t>(i)] = i;
  rng.shuffle(perm);

  std::vector<std::vector<int64_t>> batches;
  for (int64_t start = 0; start < n_samples; start += batch_size) {
    const int64_t end = std::min(start + batch_size, n_samples);
    if (end - start < 2) break;  // drop a trailing singleton
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

Adam::Adam(std::vector<ParamRef> params, const TrainConfig& config)
    : params_(std::move(params)),
      lr_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ParamRef& p : params_) {
    m_.push_back(Tensor::zeros(p.tensor->shape()));
    v_.push_back(Tensor::zeros(p.tensor->shape()));
  }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != params_.size()) {
    throw ShapeError("adam step: gradient count does not match parameter count");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!grads[i].all_finite()) {
      throw NonFiniteGradient("non-finite gradient for parameter '" + params_[i].name + "'");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    double* theta = params_[i].tensor->data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const double* g = grads[i].data();
    const int64_t n = params_[i].tensor->numel();
    for (int64_t j = 0; j < n; ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      theta[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

namespace {

Tensor gather_rows(const Tensor& inputs, const std::vector<int64_t>& rows) {
  const int64_t per_sample = inputs.numel() / inputs.dim(0);
  std::vector<int64_t> dims = inputs.shape().dims();
  dims[0] = static_cast<int64_t>(rows.size());
  Tensor out{Shape(dims)};
  for (size_t r = 0; r < rows.size(); ++r) {
    std::memcpy(out.data() + static_cast<int64_t>(r) * per_sample,
                inputs.data() + rows[r] * per_sample,
                static_cast<size_t>(per_sample) * sizeof(double));
  }
  return out;
}

Tensor gather_values(const Tensor& values, const std::vector<int64_t>& rows) {
  Tensor out(Shape{static_cast<int64_t>(rows.size())});
  for (size_t r = 0; r < rows.size(); ++r) out[static_cast<int64_t>(r)] = values[rows[r]];
  return out;
}

}  // namespace

double evaluate_mse(Network& net, const Tensor& inputs, const Tensor& targets, int64_t chunk) {
  const int64_t n = targets.numel();
  if (n < 1) throw ShapeError("evaluate_mse: empty split");
  const int64_t per_sample = inputs.numel() / inputs.dim(0);
  double sum = 0.0;
  std::vector<int64_t> dims = inputs.shape().dims();
  for (int64_t start = 0; start < n; start += chunk) {
    const int64_t end = std::min(start + chunk, n);
    dims[0] = end - start;
    Tensor part{Shape(dims)};
    std::memcpy(part.data(), inputs.data() + start * per_sample,
                static_cast<size_t>((end - start) * per_sample) * sizeof(double));
    const Tensor pred = net.forward(part, /*training=*/false);
    for (int64_t i = 0; i < end - start; ++i) {
      const double e = pred[i] - targets[start + i];
      sum += e * e;
    }
  }
  return sum / static_cast<double>(n);
}

RunResult fit(Network& net, const SplitTensors& train, const SplitTensors& val,
              const TrainConfig& config, Rng& rng, const ValEvaluator& val_eval) {
  config.validate();
  const int64_t n_train = train.samples();
  if (n_train < 2) throw ConfigError("fit: training split needs at least 2 samples");
  if (!val_eval && val.samples() < 1) throw ConfigError("fit: validation split is empty");

  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  Adam adam(net.params(), config);

  for (int64_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = shuffle_batches(n_train, config.batch_size, rng);
    if (batches.empty()) {
      result.failed = true;
      result.failure = "no usable batches (all chunks smaller than 2)";
      break;
    }
    double epoch_loss = 0.0;
    int64_t epoch_count = 0;
    bool diverged = false;
    for (const std::vector<int64_t>& batch : batches) {
      const Tensor x = gather_rows(train.inputs, batch);
      const Tensor y = gather_values(train.targets, batch);
      Network::Tape tape;
      const Tensor pred = net.forward(x, /*training=*/true, &tape);
      Tensor grad_pred;
      const double loss = mse_loss(pred, y, &grad_pred);
      if (!std::isfinite(loss)) {
        result.failed = true;
        result.failure = "non-finite training loss at epoch " + std::to_string(epoch);
        diverged = true;
        break;
      }
      try {
        adam.step(net.backward(tape, grad_pred));
      } catch (const NonFiniteGradient& e) {
        result.failed = true;
        result.failure = e.what();
        diverged = true;
        break;
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      epoch_count += static_cast<int64_t>(batch.size());
    }
    if (diverged) break;
    epoch_loss /= static_cast<double>(epoch_count);

    const double val_loss = val_eval ? val_eval(net, epoch)
                                     : evaluate_mse(net, val.inputs, val.targets);
    if (!std::isfinite(val_loss)) {
      result.failed = true;
      result.failure = "non-finite validation loss at epoch " + std::to_string(epoch);
      break;
    }
    result.curve.push_back(EpochPoint{epoch, epoch_loss, val_loss});
    result.epochs_run = epoch;

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best_state = net.state();
    }
    if (epoch - result.best_epoch > config.patience) break;
  }

  if (!result.failed && result.best_epoch == 0) {
    result.failed = true;
    if (result.failure.empty()) result.failure = "no epoch produced a finite validation loss";
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

SweepResult multi_restart_fit(const NetworkBuilder& builder, const SplitTensors& train,
                              const SplitTensors& val, const TrainConfig& config, int64_t jobs,
                              const EvaluatorFactory& eval_factory) {
  config.validate();
  const int64_t n = config.restarts;
  SweepResult sweep;
  sweep.runs.resize(static_cast<size_t>(n));

  auto run_one = [&](int64_t i) {
    const uint64_t seed = config.base_seed + static_cast<uint64_t>(i);
    Rng rng(seed);
    Network net = builder(rng);
    RunResult r = fit(net, train, val, config, rng, eval_factory ? eval_factory(i) : ValEvaluator{});
    r.seed = seed;
    sweep.runs[static_cast<size_t>(i)] = std::move(r);
  };

  if (jobs <= 1 || n == 1) {
    for (int64_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<int64_t> next{0};
    const int64_t workers = std::min<int64_t>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int64_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int64_t i; (i = next.fetch_add(1)) < n;) run_one(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (int64_t i = 0; i < n; ++i) {
    const RunResult& r = sweep.runs[static_cast<size_t>(i)];
    if (r.failed) continue;
    if (sweep.selected < 0 || r.best_val_loss < sweep.best().best_val_loss) sweep.selected = i;
  }
  if (sweep.selected < 0) throw TrainError("all " + std::to_string(n) + " restarts failed");
  return sweep;
}

}  // namespace dscnn
