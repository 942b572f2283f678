#pragma once

#include <string>
#include <vector>

#include "dscnn/dataset.hpp"
#include "dscnn/network.hpp"

namespace dscnn {

// Which sub-daily steps feed one sample. TS2 = {03:00, 15:00}; TS4 = all four
// slots of the day; TS6 adds 21:00 of the previous day and 03:00 of the next
// day, so TS6 samples exist only for days with both neighbours available.
enum class TimeSelector { TS2, TS4, TS6 };

std::string time_selector_str(TimeSelector t);
TimeSelector parse_time_selector(const std::string& s);
int64_t time_step_count(TimeSelector t);

// Named pressure-level presets (hPa, ascending pressure).
std::vector<double> level_preset_v1();  // 500/700/850/925/1000
std::vector<double> level_preset_v2();  // v1 + 300
std::vector<double> level_preset_v3();  // 200..1000, 12 surfaces
// Resolves "v1" | "v2" | "v3" | comma-separated hPa list.
std::vector<double> parse_levels(const std::string& text);

// Input channels fed to the first layer for each variant.
//   2d:      V*L*T   (one channel per variable, level, and step)
//   3d-time: V*L     (depth axis = time)
//   3d-vert: V*T     (depth axis = level)
int64_t num_channels(Variant variant, int64_t variables, int64_t levels, int64_t steps);

// Per-sample input shape ([C,H,W] or [C,D,H,W]) for a variant.
Shape channelized_shape(Variant variant, int64_t variables, int64_t levels, int64_t steps,
                        int64_t height, int64_t width);

// Rearranges one raw sample [V, L, T, H, W] into the variant layout. The
// channel axis is the row-major linearization of (variable, level, time) for
// 2d, (variable, level) for 3d-time, and (variable, time) for 3d-vert.
Tensor channelize(const Tensor& raw, Variant variant);

// One reading used by a sample: day offset relative to the window's day plus
// the slot index within that day.
struct SlotRef {
  int64_t day_offset;
  int64_t slot;
};

struct SampleWindow {
  int64_t day = 0;
  TimeSelector selector = TimeSelector::TS4;
  std::vector<SlotRef> slots;  // chronological
};

// Windows for every eligible day of the whole record.
std::vector<SampleWindow> make_windows(const AtmosDataset& ds, TimeSelector selector);
// Windows confined to a day range; TS6 neighbours must fall inside the range
// too, so windows never reach across a split boundary.
std::vector<SampleWindow> make_windows(const AtmosDataset& ds, TimeSelector selector,
                                       IndexRange days);

// Dataset level indices for the requested surfaces; every requested value
// must be present exactly.
std::vector<int64_t> resolve_level_indices(const AtmosDataset& ds,
                                           const std::vector<double>& wanted_hpa);

// Channelized model input for a set of windows. Targets stay in mm/day.
struct InputBatch {
  Tensor inputs;
  Tensor targets_mm;
  std::vector<int64_t> days;  // window day index per sample
  std::string layout;
};

// Builds the batch for one variant; when stats is non-null every reading is
// standardized by its (variable, level, slot) channel.
InputBatch assemble_batch(const AtmosDataset& ds, const std::vector<int64_t>& level_indices,
                          const std::vector<SampleWindow>& windows, Variant variant,
                          const ChannelStats* stats);

}  // namespace dscnn
