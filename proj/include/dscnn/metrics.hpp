#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dscnn/checkpoint.hpp"

namespace dscnn {

// Root-mean-square error, same units as the series.
double rmse(std::span<const double> pred, std::span<const double> obs);

// Nash-Sutcliffe efficiency: 1 - sum((obs-pred)^2) / sum((obs-mean(obs))^2).
// Throws on constant observations (undefined denominator).
double nse(std::span<const double> pred, std::span<const double> obs);

// Linear-interpolation quantile: sort ascending, h = (n-1)q, interpolate
// between the bracketing order statistics.
double percentile(std::vector<double> values, double q);

// RMSE restricted to times when obs >= percentile(obs, q).
struct Rmse99 {
  double value = 0.0;
  double threshold = 0.0;
  int64_t subset_size = 0;
};
Rmse99 rmse99(std::span<const double> pred, std::span<const double> obs, double q = 0.99);

enum class Period { Train, Validation, Test };
std::string period_str(Period p);
Period parse_period(const std::string& s);

struct PeriodMetrics {
  double rmse_mm = 0.0;
  double nse = 0.0;
  double rmse99_mm = 0.0;
  double p99_threshold_mm = 0.0;
  double mse_std = 0.0;  // MSE in standardized target units (training loss scale)
  int64_t n_samples = 0;
  int64_t n_peak_samples = 0;
};

struct EvalReport {
  PeriodMetrics train;
  PeriodMetrics validation;
  PeriodMetrics test;

  const PeriodMetrics& period(Period p) const;
};

struct EvalOptions {
  bool clamp_negative = false;  // clamp predictions at 0 mm before metrics
  int64_t chunk = 512;
};

// Runs the checkpointed model over the three periods of its experiment
// splits (BN in inference mode), un-standardizes predictions to mm, and
// computes RMSE / NSE / RMSE99 per period. Channel-count or shape mismatch
// between checkpoint and dataset raises DataError.
EvalReport evaluate(const Checkpoint& ckpt, const AtmosDataset& ds, const EvalOptions& opts = {});

struct SeriesPoint {
  Date date;
  double obs_mm = 0.0;
  double pred_mm = 0.0;
};
std::vector<SeriesPoint> predict_series(const Checkpoint& ckpt, const AtmosDataset& ds,
                                        Period period, const EvalOptions& opts = {});

enum class TableFormat { Csv, Markdown };

// One row per case, columns = period x {RMSE, NSE, RMSE99}, numbers with 3
// significant figures.
std::string render_comparison(const std::vector<std::pair<std::string, EvalReport>>& reports,
                              TableFormat format);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace dscnn
