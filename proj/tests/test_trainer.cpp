#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dscnn/trainer.hpp"

using namespace dscnn;

namespace {

NetworkConfig tiny_config(Variant v = Variant::Cnn2d) {
  NetworkConfig c;
  c.variant = v;
  c.conv_channels1 = 2;
  c.conv_channels2 = 2;
  c.fc_hidden = 4;
  return c;
}

SplitTensors random_split(Rng& rng, int64_t n, const Shape& sample) {
  std::vector<int64_t> dims{n};
  for (int64_t d : sample.dims()) dims.push_back(d);
  return SplitTensors{uniform_tensor(rng, Shape(dims), -1, 1), uniform_tensor(rng, Shape{n}, -1, 1)};
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

double fingerprint(Network& net) {
  double acc = 0.0;
  int64_t k = 1;
  for (const ParamRef& p : net.params()) {
    for (int64_t i = 0; i < p.tensor->numel(); ++i) acc += (*p.tensor)[i] * static_cast<double>(k++ % 97);
  }
  return acc;
}

double state_fingerprint(const NetworkState& st, const NetworkConfig& cfg, const Shape& in) {
  Rng rng(0);
  Network net = Network::build(cfg, in, rng);
  net.set_state(st);
  return fingerprint(net);
}

}  // namespace

TEST_CASE("mse examples") {
  const Tensor a(Shape{3}, {1, 2, 3});
  CHECK(mse_loss(a, a) == 0.0);

  const Tensor pred(Shape{3}, {0, 10, 26});
  const Tensor target(Shape{3}, {0, 10, 20});
  CHECK(mse_loss(pred, target) == 12.0);

  CHECK_THROWS_AS(mse_loss(a, Tensor::zeros(Shape{2})), ShapeError);
}

TEST_CASE("mse gradient matches finite differences") {
  Rng rng(3);
  Tensor pred = uniform_tensor(rng, Shape{7}, -2, 2);
  const Tensor target = uniform_tensor(rng, Shape{7}, -2, 2);
  Tensor grad;
  mse_loss(pred, target, &grad);
  const double h = 1e-6;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double saved = pred[i];
    pred[i] = saved + h;
    const double up = mse_loss(pred, target);
    pred[i] = saved - h;
    const double down = mse_loss(pred, target);
    pred[i] = saved;
    const double fd = (up - down) / (2 * h);
    CHECK(std::abs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("shuffle_batches chunk sizes") {
  Rng rng(1);
  const auto a = shuffle_batches(1030, 512, rng);
  REQUIRE(a.size() == 3);
  CHECK(a[0].size() == 512);
  CHECK(a[1].size() == 512);
  CHECK(a[2].size() == 6);

  const auto b = shuffle_batches(1025, 512, rng);
  REQUIRE(b.size() == 2);  // trailing singleton dropped
  CHECK(b[0].size() == 512);
  CHECK(b[1].size() == 512);
}

TEST_CASE("shuffle_batches covers every index exactly once") {
  Rng rng(9);
  const auto batches = shuffle_batches(100, 16, rng);
  std::vector<int64_t> seen;
  for (const auto& batch : batches)
    for (int64_t i : batch) seen.push_back(i);
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == 100);
  for (int64_t i = 0; i < 100; ++i) CHECK(seen[static_cast<size_t>(i)] == i);
}

TEST_CASE("adam zero gradient is a bitwise fixed point") {
  Rng rng(5);
  Tensor theta = uniform_tensor(rng, Shape{8}, -1, 1);
  const Tensor before = theta;
  TrainConfig cfg;
  Adam adam({{"theta", &theta}}, cfg);
  for (int step = 0; step < 5; ++step) adam.step({Tensor::zeros(Shape{8})});
  CHECK(bitwise_equal(theta, before));
  CHECK(adam.steps() == 5);
}

TEST_CASE("first adam step moves by about -lr") {
  Tensor theta(Shape{4}, {1, 2, 3, 4});
  const Tensor before = theta;
  TrainConfig cfg;
  Adam adam({{"theta", &theta}}, cfg);
  adam.step({Tensor::full(Shape{4}, 0.5)});
  for (int64_t i = 0; i < 4; ++i) {
    const double delta = theta[i] - before[i];
    // hand evaluation: -lr * 0.5 / (0.5 + eps) = -9.99999980e-4
    CHECK(delta == doctest::Approx(-9.9999998e-4).epsilon(1e-9));
    CHECK(std::abs(delta + cfg.learning_rate) <= 1e-6 * cfg.learning_rate);
  }

  // second constant-gradient step also moves by about -lr
  const Tensor mid = theta;
  adam.step({Tensor::full(Shape{4}, 0.5)});
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(std::abs(theta[i] - mid[i] + cfg.learning_rate) <= 2e-6 * cfg.learning_rate);
  }
}

TEST_CASE("adam with lr=0 freezes parameters but advances moments") {
  Tensor theta(Shape{2}, {1, -1});
  const Tensor before = theta;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  Adam adam({{"theta", &theta}}, cfg);
  adam.step({Tensor::full(Shape{2}, 0.25)});
  adam.step({Tensor::full(Shape{2}, 0.25)});
  CHECK(bitwise_equal(theta, before));
  CHECK(adam.first_moment(0)[0] > 0.0);
  CHECK(adam.second_moment(0)[0] > 0.0);
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
  Tensor theta(Shape{2}, {1, 2});
  TrainConfig cfg;
  Adam adam({{"conv1.kernels", &theta}}, cfg);
  Tensor bad(Shape{2}, {1.0, std::nan("")});
  try {
    adam.step({bad});
    FAIL("expected NonFiniteGradient");
  } catch (const NonFiniteGradient& e) {
    CHECK(std::string(e.what()).find("conv1.kernels") != std::string::npos);
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.patience = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("fit follows a scripted validation sequence") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(11);
  const SplitTensors train = random_split(data_rng, 8, sample);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 4;
  cfg.max_epochs = 100;

  // best at epoch 3, then rising: stop at epoch 3 + patience + 1 = 8
  std::vector<double> fingerprints(1, 0.0);  // 1-based epochs
  auto scripted = [&](Network& net, int64_t epoch) {
    fingerprints.push_back(fingerprint(net));
    const double losses[] = {5.0, 4.0, 3.0};
    return epoch <= 3 ? losses[epoch - 1] : 3.0 + 0.1 * static_cast<double>(epoch);
  };

  Rng rng(42);
  Network net = Network::build(ncfg, sample, rng);
  const RunResult r = fit(net, train, SplitTensors{}, cfg, rng, scripted);
  CHECK_FALSE(r.failed);
  CHECK(r.best_epoch == 3);
  CHECK(r.best_val_loss == 3.0);
  CHECK(r.epochs_run == 8);
  CHECK(r.curve.size() == 8);
  // returned snapshot is the epoch-3 parameters
  CHECK(state_fingerprint(r.best_state, ncfg, sample) ==
        doctest::Approx(fingerprints[3]).epsilon(1e-15));
}

TEST_CASE("fit runs to max_epochs while the validation loss keeps falling") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(13);
  const SplitTensors train = random_split(data_rng, 6, sample);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 3;
  cfg.max_epochs = 12;
  auto falling = [](Network&, int64_t epoch) { return 10.0 - static_cast<double>(epoch); };

  Rng rng(7);
  Network net = Network::build(ncfg, sample, rng);
  const RunResult r = fit(net, train, SplitTensors{}, cfg, rng, falling);
  CHECK(r.epochs_run == 12);
  CHECK(r.best_epoch == 12);
}

TEST_CASE("fit is deterministic for a fixed seed and reproduces its best loss") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(17);
  const SplitTensors train = random_split(data_rng, 12, sample);
  const SplitTensors val = random_split(data_rng, 6, sample);

  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.patience = 3;
  cfg.max_epochs = 10;

  auto run = [&] {
    Rng rng(99);
    Network net = Network::build(ncfg, sample, rng);
    return fit(net, train, val, cfg, rng);
  };
  const RunResult a = run();
  const RunResult b = run();
  CHECK_FALSE(a.failed);
  CHECK(a.best_val_loss == b.best_val_loss);
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.epochs_run == b.epochs_run);
  REQUIRE(a.curve.size() == b.curve.size());
  for (size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].train_loss == b.curve[i].train_loss);
    CHECK(a.curve[i].val_loss == b.curve[i].val_loss);
  }
  CHECK(state_fingerprint(a.best_state, ncfg, sample) ==
        state_fingerprint(b.best_state, ncfg, sample));

  // re-evaluating the snapshot reproduces best_val_loss
  Rng rng(0);
  Network restored = Network::build(ncfg, sample, rng);
  restored.set_state(a.best_state);
  const double re = evaluate_mse(restored, val.inputs, val.targets);
  CHECK(std::abs(re - a.best_val_loss) <= 1e-6 * std::max(1.0, a.best_val_loss));
}

TEST_CASE("early stopping waits out the full patience") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(19);
  const SplitTensors train = random_split(data_rng, 6, sample);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 5;
  cfg.max_epochs = 50;
  auto flat = [](Network&, int64_t epoch) { return epoch == 1 ? 1.0 : 2.0; };

  Rng rng(3);
  Network net = Network::build(ncfg, sample, rng);
  const RunResult r = fit(net, train, SplitTensors{}, cfg, rng, flat);
  CHECK(r.best_epoch == 1);
  CHECK(r.epochs_run == 1 + cfg.patience + 1);
}

TEST_CASE("multi_restart_fit selects the argmin and excludes failures") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(23);
  const SplitTensors train = random_split(data_rng, 6, sample);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 1;
  cfg.max_epochs = 1;
  cfg.restarts = 3;
  cfg.base_seed = 100;

  auto builder = [&](Rng& rng) { return Network::build(ncfg, sample, rng); };
  const double scripted[] = {3.0, 2.5, 2.7};
  auto factory = [&](int64_t run) {
    return [&, run](Network&, int64_t) { return scripted[run]; };
  };
  const SweepResult serial = multi_restart_fit(builder, train, SplitTensors{}, cfg, 1, factory);
  CHECK(serial.selected == 1);
  CHECK(serial.best().seed == 101);
  CHECK(serial.runs.size() == 3);

  const SweepResult parallel = multi_restart_fit(builder, train, SplitTensors{}, cfg, 3, factory);
  CHECK(parallel.selected == serial.selected);
  CHECK(parallel.best().seed == serial.best().seed);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(parallel.runs[i].best_val_loss == serial.runs[i].best_val_loss);
  }

  // a diverged run (non-finite validation loss) is excluded
  auto factory_with_failure = [&](int64_t run) {
    return [&, run](Network&, int64_t) {
      return run == 1 ? std::numeric_limits<double>::quiet_NaN() : scripted[run];
    };
  };
  const SweepResult with_failure =
      multi_restart_fit(builder, train, SplitTensors{}, cfg, 1, factory_with_failure);
  CHECK(with_failure.runs[1].failed);
  CHECK(with_failure.selected == 2);  // argmin over {3.0, failed, 2.7}

  auto all_fail = [&](int64_t) {
    return [](Network&, int64_t) { return std::numeric_limits<double>::infinity(); };
  };
  CHECK_THROWS_AS(multi_restart_fit(builder, train, SplitTensors{}, cfg, 1, all_fail),
                  TrainError);
}

TEST_CASE("single restart returns that run") {
  const NetworkConfig ncfg = tiny_config();
  const Shape sample{2, 6, 6};
  Rng data_rng(29);
  const SplitTensors train = random_split(data_rng, 6, sample);
  const SplitTensors val = random_split(data_rng, 4, sample);

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patience = 1;
  cfg.max_epochs = 2;
  cfg.restarts = 1;
  auto builder = [&](Rng& rng) { return Network::build(ncfg, sample, rng); };
  const SweepResult sweep = multi_restart_fit(builder, train, val, cfg);
  CHECK(sweep.selected == 0);
  CHECK(sweep.runs.size() == 1);
}

TEST_CASE("one epoch touches every sample exactly once") {
  // observed through the batch partition: union of batches is a permutation
  Rng rng(31);
  for (int64_t n : {5, 16, 33}) {
    const auto batches = shuffle_batches(n, 8, rng);
    std::vector<int64_t> seen;
    for (const auto& b : batches)
      for (int64_t i : b) seen.push_back(i);
    std::sort(seen.begin(), seen.end());
    const int64_t expected = (n % 8 == 1) ? n - 1 : n;  // singleton dropped
    CHECK(static_cast<int64_t>(seen.size()) == expected);
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
}
