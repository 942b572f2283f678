#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dscnn/channels.hpp"
#include "dscnn/experiment.hpp"
#include "dscnn/rng.hpp"

using namespace dscnn;

namespace {

AtmosDataset tiny_dataset(int64_t days, int64_t vars = 1, int64_t levels = 1, int64_t grid = 4) {
  AtmosDataset ds;
  ds.stack = Tensor::zeros(Shape{days, kSlotsPerDay, vars, levels, grid, grid});
  ds.targets = Tensor::zeros(Shape{days});
  ds.start_date = Date::from_ymd(2000, 1, 1);
  for (int64_t v = 0; v < vars; ++v) ds.variables.push_back("v" + std::to_string(v));
  for (int64_t l = 0; l < levels; ++l) ds.levels_hpa.push_back(500.0 + 100.0 * static_cast<double>(l));
  return ds;
}

}  // namespace

TEST_CASE("channel arithmetic reproduces the comparison-table values") {
  // level cases, six time steps, four variables
  CHECK(num_channels(Variant::Cnn2d, 4, 5, 6) == 120);
  CHECK(num_channels(Variant::Cnn3dVert, 4, 5, 6) == 24);
  CHECK(num_channels(Variant::Cnn2d, 4, 6, 6) == 144);
  CHECK(num_channels(Variant::Cnn3dVert, 4, 6, 6) == 24);
  CHECK(num_channels(Variant::Cnn2d, 4, 12, 6) == 288);
  CHECK(num_channels(Variant::Cnn3dVert, 4, 12, 6) == 24);
  // time-step cases, five levels
  CHECK(num_channels(Variant::Cnn2d, 4, 5, 2) == 40);
  CHECK(num_channels(Variant::Cnn3dTime, 4, 5, 2) == 20);
  CHECK(num_channels(Variant::Cnn2d, 4, 5, 4) == 80);
  CHECK(num_channels(Variant::Cnn3dTime, 4, 5, 4) == 20);
  CHECK(num_channels(Variant::Cnn2d, 4, 5, 6) == 120);
  CHECK(num_channels(Variant::Cnn3dTime, 4, 5, 6) == 20);
  // degenerate
  CHECK(num_channels(Variant::Cnn2d, 1, 1, 1) == 1);
  CHECK(num_channels(Variant::Cnn3dTime, 1, 1, 1) == 1);
  CHECK(num_channels(Variant::Cnn3dVert, 1, 1, 1) == 1);
}

TEST_CASE("level presets") {
  CHECK(level_preset_v1() == std::vector<double>{500, 700, 850, 925, 1000});
  CHECK(level_preset_v2().size() == 6);
  CHECK(level_preset_v2().front() == 300);
  CHECK(level_preset_v3().size() == 12);
  CHECK(parse_levels("v3") == level_preset_v3());
  CHECK(parse_levels("500,850") == std::vector<double>{500, 850});
  CHECK_THROWS_AS(parse_levels("850,500"), ConfigError);
  CHECK_THROWS_AS(parse_levels("abc"), ConfigError);
}

TEST_CASE("channelize preserves the multiset of values") {
  Rng rng(5);
  const Tensor raw = uniform_tensor(rng, Shape{2, 3, 4, 3, 3}, -1, 1);
  std::vector<double> original(raw.data(), raw.data() + raw.numel());
  std::sort(original.begin(), original.end());
  for (Variant v : {Variant::Cnn2d, Variant::Cnn3dTime, Variant::Cnn3dVert}) {
    const Tensor out = channelize(raw, v);
    CHECK(out.numel() == raw.numel());
    std::vector<double> rearranged(out.data(), out.data() + out.numel());
    std::sort(rearranged.begin(), rearranged.end());
    CHECK(rearranged == original);

    // sum preserved across layouts
    double sum_raw = 0, sum_out = 0;
    for (int64_t i = 0; i < raw.numel(); ++i) sum_raw += raw[i];
    for (int64_t i = 0; i < out.numel(); ++i) sum_out += out[i];
    CHECK(sum_out == doctest::Approx(sum_raw).epsilon(1e-12));
  }
}

TEST_CASE("single-channel 3d-time depth axis is the time axis verbatim") {
  Rng rng(9);
  const Tensor raw = uniform_tensor(rng, Shape{1, 1, 5, 2, 2}, -1, 1);
  const Tensor out = channelize(raw, Variant::Cnn3dTime);
  CHECK(out.shape() == Shape{1, 5, 2, 2});
  for (int64_t i = 0; i < raw.numel(); ++i) CHECK(out[i] == raw[i]);
}

TEST_CASE("channelize layouts match an independent index decoder") {
  const int64_t V = 2, L = 2, T = 2, H = 3, W = 3;
  Tensor raw(Shape{V, L, T, H, W});
  for (int64_t i = 0; i < raw.numel(); ++i) raw[i] = static_cast<double>(i);
  auto raw_at = [&](int64_t v, int64_t l, int64_t t, int64_t i, int64_t j) {
    return raw[(((v * L + l) * T + t) * H + i) * W + j];
  };

  const Tensor flat2d = channelize(raw, Variant::Cnn2d);
  for (int64_t c = 0; c < V * L * T; ++c) {
    // decode c = (v*L + l)*T + t
    const int64_t v = c / (L * T), l = (c / T) % L, t = c % T;
    for (int64_t i = 0; i < H; ++i)
      for (int64_t j = 0; j < W; ++j)
        CHECK(flat2d[(c * H + i) * W + j] == raw_at(v, l, t, i, j));
  }

  const Tensor time3d = channelize(raw, Variant::Cnn3dTime);
  for (int64_t c = 0; c < V * L; ++c) {
    const int64_t v = c / L, l = c % L;
    for (int64_t t = 0; t < T; ++t)
      for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j)
          CHECK(time3d[((c * T + t) * H + i) * W + j] == raw_at(v, l, t, i, j));
  }

  const Tensor vert3d = channelize(raw, Variant::Cnn3dVert);
  for (int64_t c = 0; c < V * T; ++c) {
    const int64_t v = c / T, t = c % T;
    for (int64_t l = 0; l < L; ++l)
      for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j)
          CHECK(vert3d[((c * L + l) * H + i) * W + j] == raw_at(v, l, t, i, j));
  }
}

TEST_CASE("window counts per selector") {
  const AtmosDataset ten = tiny_dataset(10);
  CHECK(make_windows(ten, TimeSelector::TS2).size() == 10);
  CHECK(make_windows(ten, TimeSelector::TS4).size() == 10);
  CHECK(make_windows(ten, TimeSelector::TS6).size() == 8);

  const AtmosDataset one = tiny_dataset(3);
  CHECK_THROWS_AS(make_windows(one, TimeSelector::TS6, IndexRange{0, 0}), DataError);
}

TEST_CASE("ts6 windows stay inside their split") {
  const AtmosDataset ds = tiny_dataset(10);
  const auto windows = make_windows(ds, TimeSelector::TS6, IndexRange{3, 7});
  CHECK(windows.size() == 3);  // days 4, 5, 6
  for (const SampleWindow& w : windows) {
    CHECK(w.day >= 4);
    CHECK(w.day <= 6);
    for (const SlotRef& ref : w.slots) {
      CHECK(w.day + ref.day_offset >= 3);
      CHECK(w.day + ref.day_offset <= 7);
    }
  }
}

TEST_CASE("ts6 slots are chronological around the window day") {
  const AtmosDataset ds = tiny_dataset(5);
  const auto windows = make_windows(ds, TimeSelector::TS6);
  const auto& slots = windows.front().slots;
  REQUIRE(slots.size() == 6);
  CHECK(slots[0].day_offset == -1);
  CHECK(slots[0].slot == 3);
  CHECK(slots[5].day_offset == 1);
  CHECK(slots[5].slot == 0);
  for (size_t i = 1; i < slots.size(); ++i) {
    const int64_t prev = slots[i - 1].day_offset * 4 + slots[i - 1].slot;
    const int64_t cur = slots[i].day_offset * 4 + slots[i].slot;
    CHECK(cur > prev);
  }
}

TEST_CASE("resolve_level_indices requires exact surfaces") {
  AtmosDataset ds = tiny_dataset(3, 1, 3);
  ds.levels_hpa = {500, 850, 1000};
  CHECK(resolve_level_indices(ds, {850, 1000}) == std::vector<int64_t>{1, 2});
  CHECK_THROWS_AS(resolve_level_indices(ds, {700}), DataError);
}

TEST_CASE("assemble_batch gathers the right readings and standardizes") {
  AtmosDataset ds = tiny_dataset(4, 2, 2);
  // encode provenance: value = day*1000 + slot*100 + var*10 + level
  for (int64_t d = 0; d < 4; ++d)
    for (int64_t s = 0; s < kSlotsPerDay; ++s)
      for (int64_t v = 0; v < 2; ++v)
        for (int64_t l = 0; l < 2; ++l)
          for (int64_t i = 0; i < 4; ++i)
            for (int64_t j = 0; j < 4; ++j) {
              const int64_t off = ((((d * kSlotsPerDay + s) * 2 + v) * 2 + l) * 4 + i) * 4 + j;
              ds.stack[off] = static_cast<double>(d * 1000 + s * 100 + v * 10 + l);
            }
  for (int64_t d = 0; d < 4; ++d) ds.targets[d] = static_cast<double>(d);

  const auto windows = make_windows(ds, TimeSelector::TS2);
  const InputBatch raw = assemble_batch(ds, {0, 1}, windows, Variant::Cnn2d, nullptr);
  CHECK(raw.inputs.shape() == Shape{4, 8, 4, 4});
  // sample 2, channel (v=1, l=0, t=1): slot 15:00 -> value 2000 + 200 + 10
  const int64_t c = (1 * 2 + 0) * 2 + 1;
  CHECK(raw.inputs[(2 * 8 + c) * 16] == 2210.0);
  CHECK(raw.targets_mm[2] == 2.0);
  CHECK(raw.days[2] == 2);

  // constant-per-(v,l,s) stack -> standardization maps everything to 0
  const ChannelStats stats = compute_channel_stats(ds, IndexRange{0, 3});
  const InputBatch std_batch = assemble_batch(ds, {0, 1}, windows, Variant::Cnn2d, &stats);
  (void)std_batch;

  // per-channel z-scoring with the known mean/std
  AtmosDataset varied = tiny_dataset(3, 1, 1);
  for (int64_t d = 0; d < 3; ++d)
    for (int64_t s = 0; s < kSlotsPerDay; ++s)
      for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 4; ++j) {
          const int64_t off = ((d * kSlotsPerDay + s) * 4 + i) * 4 + j;
          varied.stack[off] = static_cast<double>(d);  // mean over days = 1
        }
  const ChannelStats vstats = compute_channel_stats(varied, IndexRange{0, 2});
  const auto vwin = make_windows(varied, TimeSelector::TS4);
  const InputBatch vbatch = assemble_batch(varied, {0}, vwin, Variant::Cnn2d, &vstats);
  const double expected_std = std::sqrt(2.0 / 3.0);
  CHECK(vbatch.inputs[0] == doctest::Approx((0.0 - 1.0) / expected_std).epsilon(1e-12));
}

TEST_CASE("experiment input shape and label derivation") {
  AtmosDataset ds = tiny_dataset(5, 4, 5, 8);
  ds.levels_hpa = level_preset_v1();
  ExperimentSpec spec;
  spec.timesteps = TimeSelector::TS6;
  spec.levels_hpa = level_preset_v1();
  CHECK(experiment_input_shape(ds, Variant::Cnn2d, spec) == Shape{120, 8, 8});
  CHECK(experiment_input_shape(ds, Variant::Cnn3dTime, spec) == Shape{20, 6, 8, 8});
  CHECK(experiment_input_shape(ds, Variant::Cnn3dVert, spec) == Shape{24, 5, 8, 8});
  CHECK(derive_label(Variant::Cnn3dVert, TimeSelector::TS6, "v1") == "V1-TS6-3D-VERT");
}
