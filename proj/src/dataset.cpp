#include "dscnn/dataset.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dscnn/errors.hpp"

namespace dscnn {

using nlohmann::json;

double AtmosDataset::at(int64_t day, int64_t slot, int64_t var, int64_t level, int64_t i,
                        int64_t j) const {
  const int64_t s = stack.dim(1), v = stack.dim(2), l = stack.dim(3);
  const int64_t h = stack.dim(4), w = stack.dim(5);
  return stack[((((day * s + slot) * v + var) * l + level) * h + i) * w + j];
}

void AtmosDataset::validate() const {
  if (stack.rank() != 6) throw DataError("dataset stack must be rank 6, got " + stack.shape().str());
  if (stack.dim(1) != kSlotsPerDay) {
    throw DataError("dataset must have " + std::to_string(kSlotsPerDay) + " sub-daily slots");
  }
  if (targets.rank() != 1 || targets.dim(0) != days()) {
    throw DataError("targets must be [days], got " + targets.shape().str());
  }
  if (static_cast<int64_t>(variables.size()) != num_variables()) {
    throw DataError("variable name count does not match stack");
  }
  if (static_cast<int64_t>(levels_hpa.size()) != num_levels()) {
    throw DataError("level count does not match stack");
  }
  for (size_t i = 1; i < levels_hpa.size(); ++i) {
    if (levels_hpa[i] <= levels_hpa[i - 1]) {
      throw DataError("levels_hpa must be strictly increasing");
    }
  }
  if (!stack.all_finite()) throw DataError("dataset stack contains non-finite values");
  for (int64_t d = 0; d < days(); ++d) {
    if (!std::isfinite(targets[d]) || targets[d] < 0.0) {
      throw DataError("targets must be finite and >= 0 (day " + std::to_string(d) + ")");
    }
  }
}

namespace {

constexpr int kFormatVersion = 1;

json read_json_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot open " + file.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& file, const json& j) {
  std::ofstream os(file);
  if (!os) throw DataError("cannot open " + file.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw DataError("failed writing " + file.string());
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const AtmosDataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["dims"] = {{"D", ds.days()},        {"S", kSlotsPerDay},
                      {"V", ds.num_variables()}, {"L", ds.num_levels()},
                      {"H", ds.height()},       {"W", ds.width()}};
  manifest["variables"] = ds.variables;
  manifest["levels_hpa"] = ds.levels_hpa;
  manifest["start_date"] = ds.start_date.str();
  manifest["slots"] = kSlotLabels;
  manifest["precision"] = precision_str(ds.precision);
  manifest["stack_file"] = "stack.bin";
  manifest["target_file"] = "targets.bin";
  write_json_file(dir / "manifest.json", manifest);

  write_blob(dir / "stack.bin", "AGR1", ds.stack.data(), ds.stack.numel(), ds.precision);
  write_blob(dir / "targets.bin", "TGT1", ds.targets.data(), ds.targets.numel(), ds.precision);
}

AtmosDataset load_dataset(const std::filesystem::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("unsupported dataset format_version " + std::to_string(version));
    }
    const json& dims = manifest.at("dims");
    const int64_t d = dims.at("D").get<int64_t>();
    const int64_t s = dims.at("S").get<int64_t>();
    const int64_t v = dims.at("V").get<int64_t>();
    const int64_t l = dims.at("L").get<int64_t>();
    const int64_t h = dims.at("H").get<int64_t>();
    const int64_t w = dims.at("W").get<int64_t>();
    if (s != kSlotsPerDay) throw DataError("dataset must have 4 sub-daily slots");

    const auto slots = manifest.at("slots").get<std::vector<std::string>>();
    if (slots.size() != kSlotLabels.size()) throw DataError("manifest slots must list 4 entries");
    for (size_t i = 0; i < slots.size(); ++i) {
      if (slots[i] != kSlotLabels[i]) {
        throw DataError("unexpected slot label '" + slots[i] + "' (expected " + kSlotLabels[i] + ")");
      }
    }

    AtmosDataset ds;
    ds.precision = parse_precision(manifest.at("precision").get<std::string>());
    ds.start_date = Date::parse(manifest.at("start_date").get<std::string>());
    ds.variables = manifest.at("variables").get<std::vector<std::string>>();
    ds.levels_hpa = manifest.at("levels_hpa").get<std::vector<double>>();

    const Shape stack_shape{d, s, v, l, h, w};
    const std::filesystem::path stack_file = dir / manifest.at("stack_file").get<std::string>();
    const std::filesystem::path target_file = dir / manifest.at("target_file").get<std::string>();
    ds.stack = Tensor(stack_shape, read_blob(stack_file, "AGR1", stack_shape.numel(), ds.precision));
    ds.targets = Tensor(Shape{d}, read_blob(target_file, "TGT1", d, ds.precision));
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw DataError(dir.string() + "/manifest.json: " + e.what());
  }
}

SplitSpec default_split_spec() {
  return SplitSpec{
      {Date::parse("1980-01-01"), Date::parse("2005-12-31")},
      {Date::parse("2006-01-01"), Date::parse("2010-12-31")},
      {Date::parse("2011-01-01"), Date::parse("2015-12-31")},
  };
}

namespace {

IndexRange range_for(const AtmosDataset& ds, const DateRange& r, const char* name) {
  if (r.end < r.start) throw DataError(std::string(name) + " range is empty");
  if (r.start < ds.start_date || r.end > ds.end_date()) {
    throw DataError(std::string(name) + " range " + r.start.str() + ".." + r.end.str() +
                    " is not covered by the dataset calendar " + ds.start_date.str() + ".." +
                    ds.end_date().str());
  }
  return IndexRange{r.start - ds.start_date, r.end - ds.start_date};
}

}  // namespace

Splits split(const AtmosDataset& ds, const SplitSpec& spec) {
  Splits out;
  out.train = range_for(ds, spec.train, "train");
  out.validation = range_for(ds, spec.validation, "validation");
  out.test = range_for(ds, spec.test, "test");
  if (!(out.train.last < out.validation.first && out.validation.last < out.test.first)) {
    throw DataError("split ranges must be ordered train < validation < test and disjoint");
  }
  return out;
}

double ChannelStats::z(double x, int64_t var, int64_t level, int64_t slot) const {
  const int64_t l = mean.dim(1), s = mean.dim(2);
  const int64_t off = (var * l + level) * s + slot;
  return (x - mean[off]) / stddev[off];
}

int64_t ChannelStats::constant_count() const {
  int64_t n = 0;
  for (uint8_t f : constant) n += f;
  return n;
}

ChannelStats compute_channel_stats(const AtmosDataset& ds, IndexRange train_days) {
  if (train_days.count() < 1) throw DataError("channel stats need a non-empty training range");
  const int64_t v = ds.num_variables(), l = ds.num_levels();
  const int64_t h = ds.height(), w = ds.width();
  const double count = static_cast<double>(train_days.count() * h * w);

  ChannelStats stats;
  stats.mean = Tensor(Shape{v, l, kSlotsPerDay});
  stats.stddev = Tensor(Shape{v, l, kSlotsPerDay});
  stats.constant.assign(static_cast<size_t>(v * l * kSlotsPerDay), 0);

  for (int64_t iv = 0; iv < v; ++iv) {
    for (int64_t il = 0; il < l; ++il) {
      for (int64_t is = 0; is < kSlotsPerDay; ++is) {
        double sum = 0.0;
        for (int64_t d = train_days.first; d <= train_days.last; ++d) {
          for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) sum += ds.at(d, is, iv, il, i, j);
          }
        }
        const double mu = sum / count;
        double sq = 0.0;
        for (int64_t d = train_days.first; d <= train_days.last; ++d) {
          for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
              const double diff = ds.at(d, is, iv, il, i, j) - mu;
              sq += diff * diff;
            }
          }
        }
        const double sd = std::sqrt(sq / count);
        const int64_t off = (iv * l + il) * kSlotsPerDay + is;
        stats.mean[off] = mu;
        if (sd < 1e-12 * std::max(1.0, std::abs(mu))) {
          stats.stddev[off] = 1.0;
          stats.constant[static_cast<size_t>(off)] = 1;
        } else {
          stats.stddev[off] = sd;
        }
      }
    }
  }
  return stats;
}

TargetStats compute_target_stats(const AtmosDataset& ds, IndexRange train_days) {
  if (train_days.count() < 1) throw DataError("target stats need a non-empty training range");
  const double count = static_cast<double>(train_days.count());
  double sum = 0.0;
  for (int64_t d = train_days.first; d <= train_days.last; ++d) sum += ds.targets[d];
  const double mu = sum / count;
  double sq = 0.0;
  for (int64_t d = train_days.first; d <= train_days.last; ++d) {
    const double diff = ds.targets[d] - mu;
    sq += diff * diff;
  }
  const double sd = std::sqrt(sq / count);
  TargetStats stats;
  stats.mean = mu;
  if (sd < 1e-12 * std::max(1.0, std::abs(mu))) {
    stats.stddev = 1.0;
    stats.constant = true;
  } else {
    stats.stddev = sd;
  }
  return stats;
}

}  // namespace dscnn
