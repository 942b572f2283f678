#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dscnn/blob.hpp"
#include "dscnn/date.hpp"
#include "dscnn/tensor.hpp"

namespace dscnn {

// The four sub-daily slots of every day, local time.
inline constexpr std::array<const char*, 4> kSlotLabels = {"03:00", "09:00", "15:00", "21:00"};
inline constexpr int64_t kSlotsPerDay = 4;

// Gridded multi-level atmospheric record plus the daily scalar target.
// stack axes: [day, slot, variable, level, lat, lon]; targets in mm/day.
struct AtmosDataset {
  Tensor stack;
  Tensor targets;
  Date start_date;
  std::vector<std::string> variables;
  std::vector<double> levels_hpa;  // strictly increasing pressure
  Precision precision = Precision::F64;

  int64_t days() const { return stack.dim(0); }
  int64_t num_variables() const { return stack.dim(2); }
  int64_t num_levels() const { return stack.dim(3); }
  int64_t height() const { return stack.dim(4); }
  int64_t width() const { return stack.dim(5); }
  Date end_date() const { return start_date.plus_days(days() - 1); }

  double at(int64_t day, int64_t slot, int64_t var, int64_t level, int64_t i, int64_t j) const;
  void validate() const;
};

// Directory container: manifest.json + AGR1 stack blob + TGT1 target blob.
void save_dataset(const std::filesystem::path& dir, const AtmosDataset& ds);
AtmosDataset load_dataset(const std::filesystem::path& dir);

// Inclusive day-index range; empty when last < first.
struct IndexRange {
  int64_t first = 0;
  int64_t last = -1;
  int64_t count() const { return last < first ? 0 : last - first + 1; }
  bool contains(int64_t i) const { return i >= first && i <= last; }
};

struct SplitSpec {
  DateRange train;
  DateRange validation;
  DateRange test;
};

// 1980-2005 / 2006-2010 / 2011-2015.
SplitSpec default_split_spec();

struct Splits {
  IndexRange train;
  IndexRange validation;
  IndexRange test;
};

// Partitions day indices by the spec's date ranges. Ranges must be
// non-empty, strictly ordered, pairwise disjoint, and fully covered by the
// dataset calendar.
Splits split(const AtmosDataset& ds, const SplitSpec& spec);

// Per (variable, level, slot) standardization statistics over the training
// days and all grid cells. Channels with (numerically) zero spread are
// flagged constant and their std is forced to 1.
struct ChannelStats {
  Tensor mean;    // [V, L, S]
  Tensor stddev;  // [V, L, S]
  std::vector<uint8_t> constant;

  double z(double x, int64_t var, int64_t level, int64_t slot) const;
  int64_t constant_count() const;
};

ChannelStats compute_channel_stats(const AtmosDataset& ds, IndexRange train_days);

struct TargetStats {
  double mean = 0.0;
  double stddev = 1.0;
  bool constant = false;

  double z(double mm) const { return (mm - mean) / stddev; }
  double mm(double z) const { return z * stddev + mean; }
};

TargetStats compute_target_stats(const AtmosDataset& ds, IndexRange train_days);

}  // namespace dscnn
