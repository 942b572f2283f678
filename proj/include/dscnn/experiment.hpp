#pragma once

#include "dscnn/channels.hpp"

namespace dscnn {

// One experiment case: which time steps and pressure surfaces feed the
// model, how the calendar is split, and the row label used in comparison
// tables.
struct ExperimentSpec {
  TimeSelector timesteps = TimeSelector::TS6;
  std::vector<double> levels_hpa = level_preset_v1();
  SplitSpec splits = default_split_spec();
  std::string label;
};

// Default table label, e.g. (3d-vert, ts6, "v1") -> "V1-TS6-3D-VERT".
std::string derive_label(Variant variant, TimeSelector timesteps, const std::string& levels_text);

// Per-sample input shape implied by a dataset + experiment combination.
Shape experiment_input_shape(const AtmosDataset& ds, Variant variant, const ExperimentSpec& spec);

// Standardized batches for the three periods. TS6 windows are confined to
// their split, so no sample reaches across a split boundary.
struct PeriodBatches {
  InputBatch train;
  InputBatch validation;
  InputBatch test;
};
PeriodBatches build_period_batches(const AtmosDataset& ds, Variant variant,
                                   const ExperimentSpec& spec, const ChannelStats& stats);

}  // namespace dscnn
