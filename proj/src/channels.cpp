#include "dscnn/channels.hpp"

#include <cmath>
#include <sstream>

namespace dscnn {

std::string time_selector_str(TimeSelector t) {
  switch (t) {
    case TimeSelector::TS2: return "ts2";
    case TimeSelector::TS4: return "ts4";
    case TimeSelector::TS6: return "ts6";
  }
  return "?";
}

TimeSelector parse_time_selector(const std::string& s) {
  if (s == "ts2") return TimeSelector::TS2;
  if (s == "ts4") return TimeSelector::TS4;
  if (s == "ts6") return TimeSelector::TS6;
  throw ConfigError("unknown time-step selector '" + s + "', expected ts2 | ts4 | ts6");
}

int64_t time_step_count(TimeSelector t) {
  switch (t) {
    case TimeSelector::TS2: return 2;
    case TimeSelector::TS4: return 4;
    case TimeSelector::TS6: return 6;
  }
  return 0;
}

std::vector<double> level_preset_v1() {
  return {500, 700, 850, 925, 1000};
}

std::vector<double> level_preset_v2() {
  return {300, 500, 700, 850, 925, 1000};
}

std::vector<double> level_preset_v3() {
  return {200, 300, 400, 500, 600, 700, 750, 800, 850, 900, 950, 1000};
}

std::vector<double> parse_levels(const std::string& text) {
  if (text == "v1") return level_preset_v1();
  if (text == "v2") return level_preset_v2();
  if (text == "v3") return level_preset_v3();
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      const double value = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      levels.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse level list '" + text + "'");
    }
  }
  if (levels.empty()) throw ConfigError("level list '" + text + "' is empty");
  for (size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) {
      throw ConfigError("levels must be strictly increasing in pressure: '" + text + "'");
    }
  }
  return levels;
}

int64_t num_channels(Variant variant, int64_t variables, int64_t levels, int64_t steps) {
  if (variables < 1 || levels < 1 || steps < 1) {
    throw ConfigError("num_channels requires positive variable/level/step counts");
  }
  switch (variant) {
    case Variant::Cnn2d: return variables * levels * steps;
    case Variant::Cnn3dTime: return variables * levels;
    case Variant::Cnn3dVert: return variables * steps;
  }
  return 0;
}

Shape channelized_shape(Variant variant, int64_t variables, int64_t levels, int64_t steps,
                        int64_t height, int64_t width) {
  const int64_t c = num_channels(variant, variables, levels, steps);
  switch (variant) {
    case Variant::Cnn2d: return Shape{c, height, width};
    case Variant::Cnn3dTime: return Shape{c, steps, height, width};
    case Variant::Cnn3dVert: return Shape{c, levels, height, width};
  }
  return Shape{};
}

Tensor channelize(const Tensor& raw, Variant variant) {
  if (raw.rank() != 5) {
    throw ShapeError("channelize expects [V,L,T,H,W], got " + raw.shape().str());
  }
  const int64_t v = raw.dim(0), l = raw.dim(1), t = raw.dim(2);
  const int64_t h = raw.dim(3), w = raw.dim(4);
  const Shape out_shape = channelized_shape(variant, v, l, t, h, w);
  // (v,l,t) and (v,l) channel orders coincide with the row-major prefix of
  // the raw layout, so 2d and 3d-time are pure reshapes.
  if (variant == Variant::Cnn2d || variant == Variant::Cnn3dTime) {
    return reshape(raw, out_shape);
  }
  // 3d-vert swaps level and time: out[v*T+t, l, i, j] = raw[v, l, t, i, j]
  Tensor out(out_shape);
  const int64_t plane = h * w;
  const double* src = raw.data();
  double* dst = out.data();
  for (int64_t iv = 0; iv < v; ++iv) {
    for (int64_t il = 0; il < l; ++il) {
      for (int64_t it = 0; it < t; ++it) {
        const double* s = src + ((iv * l + il) * t + it) * plane;
        double* d = dst + ((iv * t + it) * l + il) * plane;
        for (int64_t p = 0; p < plane; ++p) d[p] = s[p];
      }
    }
  }
  return out;
}

namespace {

std::vector<SlotRef> selector_slots(TimeSelector selector) {
  switch (selector) {
    case TimeSelector::TS2:
      return {{0, 0}, {0, 2}};
    case TimeSelector::TS4:
      return {{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    case TimeSelector::TS6:
      return {{-1, 3}, {0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 0}};
  }
  return {};
}

}  // namespace

std::vector<SampleWindow> make_windows(const AtmosDataset& ds, TimeSelector selector) {
  return make_windows(ds, selector, IndexRange{0, ds.days() - 1});
}

std::vector<SampleWindow> make_windows(const AtmosDataset& ds, TimeSelector selector,
                                       IndexRange days) {
  if (days.first < 0 || days.last >= ds.days()) {
    throw DataError("window range exceeds dataset calendar");
  }
  const std::vector<SlotRef> slots = selector_slots(selector);
  std::vector<SampleWindow> windows;
  for (int64_t d = days.first; d <= days.last; ++d) {
    if (selector == TimeSelector::TS6 && (d - 1 < days.first || d + 1 > days.last)) continue;
    windows.push_back(SampleWindow{d, selector, slots});
  }
  if (windows.empty()) {
    throw DataError("no eligible sample windows for " + time_selector_str(selector) +
                    " in days " + std::to_string(days.first) + ".." + std::to_string(days.last));
  }
  return windows;
}

std::vector<int64_t> resolve_level_indices(const AtmosDataset& ds,
                                           const std::vector<double>& wanted_hpa) {
  std::vector<int64_t> indices;
  indices.reserve(wanted_hpa.size());
  for (double hpa : wanted_hpa) {
    int64_t found = -1;
    for (int64_t i = 0; i < ds.num_levels(); ++i) {
      if (std::abs(ds.levels_hpa[static_cast<size_t>(i)] - hpa) < 1e-9) {
        found = i;
        break;
      }
    }
    if (found < 0) {
      throw DataError("dataset has no " + std::to_string(hpa) + " hPa surface");
    }
    indices.push_back(found);
  }
  return indices;
}

InputBatch assemble_batch(const AtmosDataset& ds, const std::vector<int64_t>& level_indices,
                          const std::vector<SampleWindow>& windows, Variant variant,
                          const ChannelStats* stats) {
  if (windows.empty()) throw DataError("assemble_batch: empty window list");
  const int64_t v = ds.num_variables();
  const int64_t l = static_cast<int64_t>(level_indices.size());
  const int64_t t = static_cast<int64_t>(windows.front().slots.size());
  const int64_t h = ds.height(), w = ds.width();
  const int64_t n = static_cast<int64_t>(windows.size());

  const Shape sample_shape = channelized_shape(variant, v, l, t, h, w);
  std::vector<int64_t> batch_dims{n};
  for (int64_t d : sample_shape.dims()) batch_dims.push_back(d);

  InputBatch batch;
  batch.inputs = Tensor(Shape(batch_dims));
  batch.targets_mm = Tensor(Shape{n});
  batch.days.reserve(static_cast<size_t>(n));
  switch (variant) {
    case Variant::Cnn2d: batch.layout = "channels=(variable,level,time); axes=[N,C,H,W]"; break;
    case Variant::Cnn3dTime: batch.layout = "channels=(variable,level); axes=[N,C,time,H,W]"; break;
    case Variant::Cnn3dVert: batch.layout = "channels=(variable,time); axes=[N,C,level,H,W]"; break;
  }

  Tensor raw(Shape{v, l, t, h, w});
  const int64_t sample_elems = sample_shape.numel();
  for (int64_t s = 0; s < n; ++s) {
    const SampleWindow& win = windows[static_cast<size_t>(s)];
    double* p = raw.data();
    for (int64_t iv = 0; iv < v; ++iv) {
      for (int64_t il = 0; il < l; ++il) {
        const int64_t level = level_indices[static_cast<size_t>(il)];
        for (int64_t it = 0; it < t; ++it) {
          const SlotRef ref = win.slots[static_cast<size_t>(it)];
          const int64_t day = win.day + ref.day_offset;
          for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
              double x = ds.at(day, ref.slot, iv, level, i, j);
              if (stats) x = stats->z(x, iv, level, ref.slot);
              *p++ = x;
            }
          }
        }
      }
    }
    const Tensor sample = channelize(raw, variant);
    double* dst = batch.inputs.data() + s * sample_elems;
    const double* src = sample.data();
    for (int64_t i = 0; i < sample_elems; ++i) dst[i] = src[i];
    batch.targets_mm[s] = ds.targets[win.day];
    batch.days.push_back(win.day);
  }
  return batch;
}

}  // namespace dscnn
