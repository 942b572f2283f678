#include "dscnn/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "dscnn/rng.hpp"

namespace dscnn {

void SyntheticSpec::validate() const {
  if (days < 3) throw ConfigError("synthetic dataset needs at least 3 days");
  if (height < 4 || width < 4) throw ConfigError("synthetic grid must be at least 4x4");
  if (variables < 1) throw ConfigError("synthetic dataset needs at least 1 variable");
  if (levels_hpa.empty()) throw ConfigError("synthetic dataset needs at least 1 level");
  for (size_t i = 1; i < levels_hpa.size(); ++i) {
    if (levels_hpa[i] <= levels_hpa[i - 1]) {
      throw ConfigError("synthetic levels must be strictly increasing in pressure");
    }
  }
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
}

int64_t nearest_level_index(const std::vector<double>& levels_hpa, double wanted) {
  int64_t best = 0;
  double best_dist = std::abs(levels_hpa[0] - wanted);
  for (size_t i = 1; i < levels_hpa.size(); ++i) {
    const double dist = std::abs(levels_hpa[i] - wanted);
    if (dist < best_dist) {
      best = static_cast<int64_t>(i);
      best_dist = dist;
    }
  }
  return best;
}

namespace {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double mask_mean(const AtmosDataset& ds, int64_t day, int64_t slot, int64_t var, int64_t level) {
  const int64_t h = ds.height(), w = ds.width();
  const int64_t i0 = h / 4, i1 = h - h / 4;
  const int64_t j0 = w / 4, j1 = w - w / 4;
  double sum = 0.0;
  for (int64_t i = i0; i < i1; ++i) {
    for (int64_t j = j0; j < j1; ++j) sum += ds.at(day, slot, var, level, i, j);
  }
  return sum / static_cast<double>((i1 - i0) * (j1 - j0));
}

struct FieldMode {
  double amplitude;
  double omega;  // rad per day
  double kx, ky; // rad per grid cell
  double phase;
};

}  // namespace

AtmosDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  AtmosDataset ds;
  ds.start_date = spec.start_date;
  ds.levels_hpa = spec.levels_hpa;
  ds.precision = spec.precision;
  ds.variables.reserve(static_cast<size_t>(spec.variables));
  for (int64_t v = 0; v < spec.variables; ++v) {
    // variable 0 plays the humidity role, the last one the temperature role
    if (v == 0) {
      ds.variables.push_back("q");
    } else if (v == spec.variables - 1 && spec.variables > 1) {
      ds.variables.push_back("t");
    } else {
      ds.variables.push_back("w" + std::to_string(v));
    }
  }

  const int64_t d = spec.days, v = spec.variables;
  const int64_t l = static_cast<int64_t>(spec.levels_hpa.size());
  const int64_t h = spec.height, w = spec.width;
  ds.stack = Tensor(Shape{d, kSlotsPerDay, v, l, h, w});
  ds.targets = Tensor(Shape{d});

  Rng rng(spec.seed);
  const double slot_hours[kSlotsPerDay] = {3.0, 9.0, 15.0, 21.0};

  for (int64_t iv = 0; iv < v; ++iv) {
    for (int64_t il = 0; il < l; ++il) {
      FieldMode modes[kFieldModes];
      for (FieldMode& mode : modes) {
        mode.amplitude = rng.uniform(0.3, 1.0);
        mode.omega = two_pi / rng.uniform(5.0, 60.0);
        mode.kx = rng.uniform(-0.6, 0.6);
        mode.ky = rng.uniform(-0.6, 0.6);
        mode.phase = rng.uniform(0.0, two_pi);
      }
      for (int64_t id = 0; id < d; ++id) {
        for (int64_t is = 0; is < kSlotsPerDay; ++is) {
          const double tau = static_cast<double>(id) + slot_hours[is] / 24.0;
          for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
              double value = 0.0;
              for (const FieldMode& mode : modes) {
                value += mode.amplitude * std::sin(mode.omega * tau + mode.kx * static_cast<double>(i) +
                                                   mode.ky * static_cast<double>(j) + mode.phase);
              }
              value += kFieldNoiseStd * rng.normal();
              const int64_t off = ((((id * kSlotsPerDay + is) * v + iv) * l + il) * h + i) * w + j;
              ds.stack[off] = value;
            }
          }
        }
      }
    }
  }

  if (spec.precision == Precision::F32) {
    quantize_f32(ds.stack.data(), ds.stack.numel());
  }

  const SyntheticMapping& map = spec.mapping;
  const int64_t q_var = 0;
  const int64_t t_var = v - 1;
  const int64_t low = nearest_level_index(spec.levels_hpa, map.low_level_hpa);
  const int64_t mid = nearest_level_index(spec.levels_hpa, map.mid_level_hpa);
  const int64_t temp = nearest_level_index(spec.levels_hpa, map.temperature_level_hpa);
  const int64_t slot_morning = 0;   // 03:00
  const int64_t slot_afternoon = 2; // 15:00

  for (int64_t id = 0; id < d; ++id) {
    const double q_low = mask_mean(ds, id, slot_afternoon, q_var, low);
    const double q_mid = mask_mean(ds, id, slot_afternoon, q_var, mid);
    const double t_850 = mask_mean(ds, id, slot_afternoon, t_var, temp);
    const double q_morning = mask_mean(ds, id, slot_morning, q_var, low);
    const double z = map.humidity_coeff * q_low + map.vertical_coeff * (q_low - q_mid) * t_850 +
                     map.tendency_coeff * (q_low - q_morning);
    double value = softplus(z);
    if (spec.noise_std > 0.0) value += spec.noise_std * rng.normal();
    ds.targets[id] = std::max(value, 0.0);
  }

  if (spec.precision == Precision::F32) {
    quantize_f32(ds.targets.data(), ds.targets.numel());
  }
  ds.validate();
  return ds;
}

}  // namespace dscnn
