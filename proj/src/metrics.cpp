#include "dscnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "dscnn/trainer.hpp"

namespace dscnn {

using nlohmann::json;

double rmse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty()) {
    throw ShapeError("rmse: series lengths " + std::to_string(pred.size()) + " vs " +
                     std::to_string(obs.size()));
  }
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - obs[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double nse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty()) {
    throw ShapeError("nse: series lengths " + std::to_string(pred.size()) + " vs " +
                     std::to_string(obs.size()));
  }
  double mean = 0.0;
  for (double o : obs) mean += o;
  mean /= static_cast<double>(obs.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < obs.size(); ++i) {
    num += (obs[i] - pred[i]) * (obs[i] - pred[i]);
    den += (obs[i] - mean) * (obs[i] - mean);
  }
  if (den <= 0.0) throw Error("nse undefined: observations are constant");
  return 1.0 - num / den;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of empty input");
  if (q < 0.0 || q > 1.0) throw Error("percentile fraction must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

Rmse99 rmse99(std::span<const double> pred, std::span<const double> obs, double q) {
  if (pred.size() != obs.size() || pred.empty()) {
    throw ShapeError("rmse99: series lengths " + std::to_string(pred.size()) + " vs " +
                     std::to_string(obs.size()));
  }
  Rmse99 out;
  out.threshold = percentile(std::vector<double>(obs.begin(), obs.end()), q);
  std::vector<double> peak_pred, peak_obs;
  for (size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] >= out.threshold) {
      peak_pred.push_back(pred[i]);
      peak_obs.push_back(obs[i]);
    }
  }
  if (peak_obs.empty()) throw Error("rmse99: no observations at or above the threshold");
  out.subset_size = static_cast<int64_t>(peak_obs.size());
  out.value = rmse(peak_pred, peak_obs);
  return out;
}

std::string period_str(Period p) {
  switch (p) {
    case Period::Train: return "train";
    case Period::Validation: return "validation";
    case Period::Test: return "test";
  }
  return "?";
}

Period parse_period(const std::string& s) {
  if (s == "train") return Period::Train;
  if (s == "validation") return Period::Validation;
  if (s == "test") return Period::Test;
  throw ConfigError("unknown period '" + s + "', expected train | validation | test");
}

const PeriodMetrics& EvalReport::period(Period p) const {
  switch (p) {
    case Period::Train: return train;
    case Period::Validation: return validation;
    case Period::Test: return test;
  }
  return test;
}

namespace {

struct PeriodSeries {
  std::vector<int64_t> days;
  std::vector<double> obs_mm;
  std::vector<double> pred_mm;
  std::vector<double> pred_z;
  std::vector<double> obs_z;
};

PeriodSeries run_period(Network& net, const Checkpoint& ckpt, const AtmosDataset& ds,
                        const std::vector<int64_t>& level_idx, IndexRange days,
                        const EvalOptions& opts) {
  const auto windows = make_windows(ds, ckpt.experiment.timesteps, days);
  InputBatch batch =
      assemble_batch(ds, level_idx, windows, ckpt.config.variant, &ckpt.channel_stats);
  for (int64_t i = 0; i < ckpt.input_shape.rank(); ++i) {
    if (batch.inputs.dim(i + 1) != ckpt.input_shape[i]) {
      throw DataError("dataset/experiment input shape " +
                      Shape(std::vector<int64_t>(batch.inputs.shape().dims().begin() + 1,
                                                 batch.inputs.shape().dims().end()))
                          .str() +
                      " does not match checkpoint " + ckpt.input_shape.str());
    }
  }

  PeriodSeries series;
  series.days = batch.days;
  const int64_t n = batch.targets_mm.numel();
  const int64_t per_sample = batch.inputs.numel() / n;
  std::vector<int64_t> dims = batch.inputs.shape().dims();
  for (int64_t start = 0; start < n; start += opts.chunk) {
    const int64_t end = std::min(start + opts.chunk, n);
    dims[0] = end - start;
    Tensor part{Shape(dims)};
    std::memcpy(part.data(), batch.inputs.data() + start * per_sample,
                static_cast<size_t>((end - start) * per_sample) * sizeof(double));
    const Tensor pred = net.forward(part, /*training=*/false);
    for (int64_t i = 0; i < end - start; ++i) {
      const double z = pred[i];
      double mm = ckpt.target_stats.mm(z);
      if (opts.clamp_negative && mm < 0.0) mm = 0.0;
      series.pred_z.push_back(z);
      series.pred_mm.push_back(mm);
    }
  }
  for (int64_t i = 0; i < n; ++i) {
    series.obs_mm.push_back(batch.targets_mm[i]);
    series.obs_z.push_back(ckpt.target_stats.z(batch.targets_mm[i]));
  }
  return series;
}

PeriodMetrics metrics_for(const PeriodSeries& s) {
  PeriodMetrics m;
  m.n_samples = static_cast<int64_t>(s.obs_mm.size());
  m.rmse_mm = rmse(s.pred_mm, s.obs_mm);
  m.nse = nse(s.pred_mm, s.obs_mm);
  const Rmse99 peak = rmse99(s.pred_mm, s.obs_mm);
  m.rmse99_mm = peak.value;
  m.p99_threshold_mm = peak.threshold;
  m.n_peak_samples = peak.subset_size;
  double sum = 0.0;
  for (size_t i = 0; i < s.pred_z.size(); ++i) {
    const double e = s.pred_z[i] - s.obs_z[i];
    sum += e * e;
  }
  m.mse_std = sum / static_cast<double>(s.pred_z.size());
  return m;
}

}  // namespace

EvalReport evaluate(const Checkpoint& ckpt, const AtmosDataset& ds, const EvalOptions& opts) {
  Network net = restore_network(ckpt);
  const Splits ranges = split(ds, ckpt.experiment.splits);
  const std::vector<int64_t> level_idx = resolve_level_indices(ds, ckpt.experiment.levels_hpa);
  EvalReport report;
  report.train = metrics_for(run_period(net, ckpt, ds, level_idx, ranges.train, opts));
  report.validation = metrics_for(run_period(net, ckpt, ds, level_idx, ranges.validation, opts));
  report.test = metrics_for(run_period(net, ckpt, ds, level_idx, ranges.test, opts));
  return report;
}

std::vector<SeriesPoint> predict_series(const Checkpoint& ckpt, const AtmosDataset& ds,
                                        Period period, const EvalOptions& opts) {
  Network net = restore_network(ckpt);
  const Splits ranges = split(ds, ckpt.experiment.splits);
  const IndexRange days = period == Period::Train        ? ranges.train
                          : period == Period::Validation ? ranges.validation
                                                         : ranges.test;
  const std::vector<int64_t> level_idx = resolve_level_indices(ds, ckpt.experiment.levels_hpa);
  const PeriodSeries s = run_period(net, ckpt, ds, level_idx, days, opts);
  std::vector<SeriesPoint> points;
  points.reserve(s.days.size());
  for (size_t i = 0; i < s.days.size(); ++i) {
    points.push_back(SeriesPoint{ds.start_date.plus_days(s.days[i]), s.obs_mm[i], s.pred_mm[i]});
  }
  return points;
}

namespace {

std::string sig3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", value);
  return buf;
}

constexpr const char* kColumns[] = {"RMSE", "NSE", "RMSE99"};

std::vector<std::string> row_cells(const EvalReport& r) {
  std::vector<std::string> cells;
  for (const PeriodMetrics* m : {&r.train, &r.validation, &r.test}) {
    cells.push_back(sig3(m->rmse_mm));
    cells.push_back(sig3(m->nse));
    cells.push_back(sig3(m->rmse99_mm));
  }
  return cells;
}

}  // namespace

std::string render_comparison(const std::vector<std::pair<std::string, EvalReport>>& reports,
                              TableFormat format) {
  if (reports.empty()) throw Error("render_comparison: no reports");
  std::ostringstream os;
  std::vector<std::string> header{"Case"};
  for (const char* period : {"Training", "Validation", "Test"}) {
    for (const char* col : kColumns) header.push_back(std::string(period) + " " + col);
  }
  if (format == TableFormat::Csv) {
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& [label, report] : reports) {
      os << label;
      for (const std::string& cell : row_cells(report)) os << ',' << cell;
      os << '\n';
    }
  } else {
    os << '|';
    for (const std::string& h : header) os << ' ' << h << " |";
    os << "\n|";
    for (size_t i = 0; i < header.size(); ++i) os << " --- |";
    os << '\n';
    for (const auto& [label, report] : reports) {
      os << "| " << label << " |";
      for (const std::string& cell : row_cells(report)) os << ' ' << cell << " |";
      os << '\n';
    }
  }
  return os.str();
}

namespace {

json period_json(const PeriodMetrics& m) {
  return json{{"rmse_mm", m.rmse_mm},
              {"nse", m.nse},
              {"rmse99_mm", m.rmse99_mm},
              {"p99_threshold_mm", m.p99_threshold_mm},
              {"mse_std", m.mse_std},
              {"n_samples", m.n_samples},
              {"n_peak_samples", m.n_peak_samples}};
}

PeriodMetrics period_from_json(const json& j) {
  PeriodMetrics m;
  m.rmse_mm = j.at("rmse_mm").get<double>();
  m.nse = j.at("nse").get<double>();
  m.rmse99_mm = j.at("rmse99_mm").get<double>();
  m.p99_threshold_mm = j.at("p99_threshold_mm").get<double>();
  m.mse_std = j.at("mse_std").get<double>();
  m.n_samples = j.at("n_samples").get<int64_t>();
  m.n_peak_samples = j.at("n_peak_samples").get<int64_t>();
  return m;
}

}  // namespace

json report_to_json(const EvalReport& report) {
  return json{{"train", period_json(report.train)},
              {"validation", period_json(report.validation)},
              {"test", period_json(report.test)}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.train = period_from_json(j.at("train"));
    r.validation = period_from_json(j.at("validation"));
    r.test = period_from_json(j.at("test"));
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid evaluation report: ") + e.what());
  }
  return r;
}

}  // namespace dscnn
