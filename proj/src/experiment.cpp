#include "dscnn/experiment.hpp"

#include <algorithm>
#include <cctype>

namespace dscnn {

std::string derive_label(Variant variant, TimeSelector timesteps, const std::string& levels_text) {
  std::string label = levels_text + "-" + time_selector_str(timesteps) + "-" + variant_str(variant);
  std::transform(label.begin(), label.end(), label.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return label;
}

Shape experiment_input_shape(const AtmosDataset& ds, Variant variant, const ExperimentSpec& spec) {
  const int64_t levels = static_cast<int64_t>(spec.levels_hpa.size());
  return channelized_shape(variant, ds.num_variables(), levels, time_step_count(spec.timesteps),
                           ds.height(), ds.width());
}

PeriodBatches build_period_batches(const AtmosDataset& ds, Variant variant,
                                   const ExperimentSpec& spec, const ChannelStats& stats) {
  const Splits ranges = split(ds, spec.splits);
  const std::vector<int64_t> level_idx = resolve_level_indices(ds, spec.levels_hpa);
  PeriodBatches out;
  out.train = assemble_batch(ds, level_idx, make_windows(ds, spec.timesteps, ranges.train),
                             variant, &stats);
  out.validation = assemble_batch(
      ds, level_idx, make_windows(ds, spec.timesteps, ranges.validation), variant, &stats);
  out.test = assemble_batch(ds, level_idx, make_windows(ds, spec.timesteps, ranges.test), variant,
                            &stats);
  return out;
}

}  // namespace dscnn
