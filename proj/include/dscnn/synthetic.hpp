#pragma once

#include "dscnn/channels.hpp"
#include "dscnn/dataset.hpp"

namespace dscnn {

// Target mapping of the synthetic generator:
//
//   precip_d = softplus( a * <q(925, 15:00)>
//                      + b * <q(925, 15:00) - q(500, 15:00)> * <T(850, 15:00)>
//                      + c * (<q(925, 15:00)> - <q(925, 03:00)>) )  [+ noise, clamped at 0]
//
// where <.> is the mean over the central mask (rows [H/4, H-H/4), cols
// [W/4, W-W/4)), q is variable 0 (humidity role), T is the last variable
// (temperature role), and the named pressures map to the nearest surface in
// the dataset. softplus(z) = max(z,0) + log1p(exp(-|z|)). The b term is a
// vertical-difference signal and the c term a temporal-difference signal.
struct SyntheticMapping {
  double humidity_coeff = 3.0;   // a
  double vertical_coeff = 12.0;  // b
  double tendency_coeff = 5.0;   // c
  double low_level_hpa = 925.0;
  double mid_level_hpa = 500.0;
  double temperature_level_hpa = 850.0;
};

inline constexpr double kFieldNoiseStd = 0.05;
inline constexpr int64_t kFieldModes = 4;

struct SyntheticSpec {
  int64_t days = 365;
  int64_t height = 8;
  int64_t width = 8;
  std::vector<double> levels_hpa = level_preset_v1();
  int64_t variables = 4;
  Date start_date = Date::from_ymd(1980, 1, 1);
  uint64_t seed = 0;
  double noise_std = 0.0;  // std of additive target noise, mm/day
  Precision precision = Precision::F64;
  SyntheticMapping mapping;

  void validate() const;
};

// Deterministic synthetic dataset: every (variable, level) field is a sum of
// kFieldModes low-frequency sinusoids in (time, lat, lon) plus white noise
// of std kFieldNoiseStd; targets come from the mapping above. Equal specs
// produce bitwise-equal datasets.
AtmosDataset generate_synthetic(const SyntheticSpec& spec);

// Nearest dataset level to the requested pressure (ties -> lower pressure).
int64_t nearest_level_index(const std::vector<double>& levels_hpa, double wanted);

}  // namespace dscnn
