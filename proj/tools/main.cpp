// Experiment CLI: synthetic data generation, training sweeps, evaluation,
// comparison tables, prediction export, and gradient checking.
//
// Exit codes: 0 success, 1 usage error, 2 data/shape error, 3 training
// failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dscnn/checkpoint.hpp"
#include "dscnn/experiment.hpp"
#include "dscnn/gradcheck.hpp"
#include "dscnn/metrics.hpp"
#include "dscnn/serialize.hpp"
#include "dscnn/synthetic.hpp"
#include "dscnn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dscnn;

namespace {

constexpr const char* kOutRootEnv = "DSCNN_OUT_ROOT";

fs::path resolve_out(const std::string& out_flag, const char* command) {
  if (!out_flag.empty()) return out_flag;
  if (const char* root = std::getenv(kOutRootEnv)) return fs::path(root) / command;
  throw ConfigError(std::string("--out is required (or set ") + kOutRootEnv + ")");
}

std::pair<int64_t, int64_t> parse_grid(const std::string& text) {
  int64_t h = 0, w = 0;
  char x = '\0', tail = '\0';
  if (std::sscanf(text.c_str(), "%ld%c%ld%c", &h, &x, &w, &tail) != 3 || x != 'x') {
    throw ConfigError("cannot parse grid '" + text + "', expected HxW (e.g. 8x8)");
  }
  return {h, w};
}

DateRange parse_date_range(const std::string& text) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("cannot parse date range '" + text + "', expected START:END");
  }
  return DateRange{Date::parse(text.substr(0, colon)), Date::parse(text.substr(colon + 1))};
}

struct GenFlags {
  int64_t days = 365;
  std::string grid = "8x8";
  std::string levels = "v1";
  int64_t vars = 4;
  uint64_t seed = 0;
  double noise_std = 0.5;
  std::string start_date = "1980-01-01";
  std::string precision = "f64";
  std::string out;
};

int cmd_gen_synthetic(const GenFlags& flags) {
  SyntheticSpec spec;
  spec.days = flags.days;
  std::tie(spec.height, spec.width) = parse_grid(flags.grid);
  spec.levels_hpa = parse_levels(flags.levels);
  spec.variables = flags.vars;
  spec.seed = flags.seed;
  spec.noise_std = flags.noise_std;
  spec.start_date = Date::parse(flags.start_date);
  spec.precision = parse_precision(flags.precision);

  const fs::path out = resolve_out(flags.out, "gen-synthetic");
  const AtmosDataset ds = generate_synthetic(spec);
  save_dataset(out, ds);

  json manifest;
  manifest["format_version"] = 1;
  manifest["command"] = "gen-synthetic";
  manifest["flags"] = {{"days", flags.days},         {"grid", flags.grid},
                       {"levels", flags.levels},     {"vars", flags.vars},
                       {"seed", flags.seed},         {"noise_std", flags.noise_std},
                       {"start_date", flags.start_date}, {"precision", flags.precision}};
  manifest["mapping"] = {{"humidity_coeff", spec.mapping.humidity_coeff},
                         {"vertical_coeff", spec.mapping.vertical_coeff},
                         {"tendency_coeff", spec.mapping.tendency_coeff},
                         {"low_level_hpa", spec.mapping.low_level_hpa},
                         {"mid_level_hpa", spec.mapping.mid_level_hpa},
                         {"temperature_level_hpa", spec.mapping.temperature_level_hpa},
                         {"field_noise_std", kFieldNoiseStd},
                         {"mask", "rows [H/4, H-H/4), cols [W/4, W-W/4)"},
                         {"humidity_variable", 0},
                         {"temperature_variable", spec.variables - 1}};
  write_json_file(out / "gen_manifest.json", manifest);

  std::cout << "wrote dataset: " << out.string() << " (D=" << ds.days() << ", grid " << ds.height()
            << "x" << ds.width() << ", V=" << ds.num_variables() << ", L=" << ds.num_levels()
            << ", " << precision_str(ds.precision) << ")\n";
  return 0;
}

struct TrainFlags {
  std::string data;
  std::string variant;
  std::string timesteps = "ts6";
  std::string levels = "v1";
  std::string label;
  std::string split_train, split_val, split_test;
  std::string conv_channels = "32,64";
  int64_t fc_hidden = 64;
  int64_t kernel_size = 3;
  int64_t stride = 1;
  int64_t padding = 1;
  int64_t pool_kernel = 3;
  int64_t pool_stride = 1;
  std::string activation = "relu";
  int64_t batch_size = 512;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int64_t patience = 40;
  int64_t max_epochs = 1000;
  int64_t restarts = 200;
  uint64_t seed = 0;
  int64_t jobs = 1;
  std::string out;
};

std::pair<int64_t, int64_t> parse_channel_pair(const std::string& text) {
  int64_t a = 0, b = 0;
  char comma = '\0', tail = '\0';
  if (std::sscanf(text.c_str(), "%ld%c%ld%c", &a, &comma, &b, &tail) != 3 || comma != ',') {
    throw ConfigError("cannot parse --conv-channels '" + text + "', expected C1,C2");
  }
  return {a, b};
}

int cmd_train(const TrainFlags& flags) {
  const fs::path out = resolve_out(flags.out, "train");
  const AtmosDataset ds = load_dataset(flags.data);

  NetworkConfig ncfg;
  ncfg.variant = parse_variant(flags.variant);
  std::tie(ncfg.conv_channels1, ncfg.conv_channels2) = parse_channel_pair(flags.conv_channels);
  ncfg.fc_hidden = flags.fc_hidden;
  ncfg.kernel_size = flags.kernel_size;
  ncfg.stride = flags.stride;
  ncfg.padding = flags.padding;
  ncfg.pool_kernel = flags.pool_kernel;
  ncfg.pool_stride = flags.pool_stride;
  ncfg.activation = parse_activation(flags.activation);
  ncfg.validate();

  TrainConfig tcfg;
  tcfg.batch_size = flags.batch_size;
  tcfg.learning_rate = flags.lr;
  tcfg.adam_beta1 = flags.beta1;
  tcfg.adam_beta2 = flags.beta2;
  tcfg.adam_eps = flags.adam_eps;
  tcfg.patience = flags.patience;
  tcfg.max_epochs = flags.max_epochs;
  tcfg.restarts = flags.restarts;
  tcfg.base_seed = flags.seed;
  tcfg.validate();

  ExperimentSpec espec;
  espec.timesteps = parse_time_selector(flags.timesteps);
  espec.levels_hpa = parse_levels(flags.levels);
  if (!flags.split_train.empty()) espec.splits.train = parse_date_range(flags.split_train);
  if (!flags.split_val.empty()) espec.splits.validation = parse_date_range(flags.split_val);
  if (!flags.split_test.empty()) espec.splits.test = parse_date_range(flags.split_test);
  espec.label = flags.label.empty()
                    ? derive_label(ncfg.variant, espec.timesteps, flags.levels)
                    : flags.label;

  const Splits ranges = split(ds, espec.splits);
  const Shape input_shape = experiment_input_shape(ds, ncfg.variant, espec);
  std::cout << "experiment " << espec.label << ": input " << input_shape.str() << " ("
            << input_shape[0] << " channels), parameters "
            << parameter_count(ncfg, input_shape) << "\n";

  const ChannelStats cstats = compute_channel_stats(ds, ranges.train);
  const TargetStats tstats = compute_target_stats(ds, ranges.train);
  const PeriodBatches batches = build_period_batches(ds, ncfg.variant, espec, cstats);

  auto standardized = [&tstats](const InputBatch& b) {
    SplitTensors st;
    st.inputs = b.inputs;
    st.targets = Tensor(Shape{b.targets_mm.numel()});
    for (int64_t i = 0; i < st.targets.numel(); ++i) st.targets[i] = tstats.z(b.targets_mm[i]);
    return st;
  };
  const SplitTensors train = standardized(batches.train);
  const SplitTensors val = standardized(batches.validation);
  std::cout << "samples: train " << train.samples() << ", validation " << val.samples()
            << ", test " << batches.test.targets_mm.numel() << "\n";

  bool clamped = false;
  int64_t depth_kernel = ncfg.pool_kernel;
  {
    Rng probe(0);
    Network probe_net = Network::build(ncfg, input_shape, probe);
    clamped = probe_net.depth_pool_clamped();
    depth_kernel = probe_net.depth_pool_kernel();
  }
  if (clamped) {
    std::cout << "note: depth pool window clamped to " << depth_kernel
              << " for depth " << input_shape[1] << "\n";
  }

  auto builder = [&](Rng& rng) { return Network::build(ncfg, input_shape, rng); };
  const SweepResult sweep = multi_restart_fit(builder, train, val, tcfg, flags.jobs);

  fs::create_directories(out / "runs");
  json run_list = json::array();
  for (size_t i = 0; i < sweep.runs.size(); ++i) {
    const RunResult& r = sweep.runs[i];
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", i);
    const fs::path run_dir = out / "runs" / name;
    fs::create_directories(run_dir);

    std::ofstream curves(run_dir / "curves.csv");
    curves << "epoch,train_loss,val_loss\n";
    for (const EpochPoint& p : r.curve) {
      curves << p.epoch << ',' << p.train_loss << ',' << p.val_loss << '\n';
    }

    json entry{{"index", i},
               {"seed", r.seed},
               {"status", r.failed ? "failed" : "ok"},
               {"epochs_run", r.epochs_run},
               {"wall_time_sec", r.wall_seconds},
               {"curves", std::string("runs/") + name + "/curves.csv"}};
    if (r.failed) {
      entry["failure"] = r.failure;
    } else {
      entry["best_val_loss"] = r.best_val_loss;
      entry["best_epoch"] = r.best_epoch;

      Checkpoint ckpt;
      ckpt.config = ncfg;
      ckpt.input_shape = input_shape;
      ckpt.seed = r.seed;
      ckpt.depth_pool_clamped = clamped;
      ckpt.depth_pool_kernel = depth_kernel;
      ckpt.best_val_loss = r.best_val_loss;
      ckpt.best_epoch = r.best_epoch;
      ckpt.epochs_run = r.epochs_run;
      ckpt.state = r.best_state;
      ckpt.channel_stats = cstats;
      ckpt.target_stats = tstats;
      ckpt.experiment = espec;
      save_checkpoint(run_dir / "checkpoint", ckpt);
      entry["checkpoint"] = std::string("runs/") + name + "/checkpoint";
      if (static_cast<int64_t>(i) == sweep.selected) {
        save_checkpoint(out / "checkpoint", ckpt);
      }
    }
    run_list.push_back(entry);

    std::printf("run %3zu seed=%llu %s", i, static_cast<unsigned long long>(r.seed),
                r.failed ? "FAILED" : "ok");
    if (!r.failed) {
      std::printf(" best_val_loss=%.6g best_epoch=%lld epochs=%lld",
                  r.best_val_loss, static_cast<long long>(r.best_epoch),
                  static_cast<long long>(r.epochs_run));
    }
    std::printf(" (%.1fs)\n", r.wall_seconds);
  }

  const RunResult& best = sweep.best();
  json manifest;
  manifest["format_version"] = 1;
  manifest["command"] = "train";
  manifest["dataset"] = flags.data;
  manifest["experiment"] = to_json(espec);
  manifest["network_config"] = to_json(ncfg);
  manifest["train_config"] = to_json(tcfg);
  manifest["jobs"] = flags.jobs;
  manifest["input_shape"] = to_json(input_shape);
  manifest["num_channels"] = input_shape[0];
  manifest["depth_pool_clamped"] = clamped;
  manifest["effective_depth_pool"] = depth_kernel;
  manifest["constant_channels"] = cstats.constant_count();
  manifest["runs"] = run_list;
  manifest["selected"] = {{"index", sweep.selected},
                          {"seed", best.seed},
                          {"best_val_loss", best.best_val_loss},
                          {"best_epoch", best.best_epoch},
                          {"checkpoint", "checkpoint"}};
  write_json_file(out / "run_manifest.json", manifest);

  std::cout << "selected run " << sweep.selected << " (seed " << best.seed
            << ", val loss " << best.best_val_loss << ") -> "
            << (out / "checkpoint").string() << "\n";
  return 0;
}

struct EvalFlags {
  std::string run;
  std::string data;
  std::string out;
  bool clamp_negative = false;
};

int cmd_evaluate(const EvalFlags& flags) {
  const fs::path run_dir = flags.run;
  const fs::path out = flags.out.empty() ? run_dir : fs::path(flags.out);
  const Checkpoint ckpt = load_checkpoint(run_dir / "checkpoint");
  const AtmosDataset ds = load_dataset(flags.data);

  EvalOptions opts;
  opts.clamp_negative = flags.clamp_negative;
  const EvalReport report = evaluate(ckpt, ds, opts);

  fs::create_directories(out);
  json j;
  j["label"] = ckpt.experiment.label;
  j["metrics"] = report_to_json(report);
  write_json_file(out / "report.json", j);

  const std::vector<std::pair<std::string, EvalReport>> rows{{ckpt.experiment.label, report}};
  std::ofstream csv(out / "report.csv");
  csv << render_comparison(rows, TableFormat::Csv);
  std::ofstream md(out / "report.md");
  md << render_comparison(rows, TableFormat::Markdown);

  std::cout << render_comparison(rows, TableFormat::Markdown);
  std::cout << "wrote " << (out / "report.json").string() << "\n";
  return 0;
}

struct CompareFlags {
  std::vector<std::string> runs;
  std::string format = "csv";
  std::string out;
};

int cmd_compare(const CompareFlags& flags) {
  if (flags.runs.empty()) throw ConfigError("compare needs at least one --runs directory");
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const std::string& run : flags.runs) {
    const fs::path report_file = fs::path(run) / "report.json";
    if (!fs::exists(report_file)) {
      throw DataError(report_file.string() + " not found (run `evaluate` first)");
    }
    const json j = read_json_file(report_file);
    try {
      rows.emplace_back(j.at("label").get<std::string>(), report_from_json(j.at("metrics")));
    } catch (const json::exception& e) {
      throw DataError(report_file.string() + ": " + e.what());
    }
  }
  TableFormat format;
  if (flags.format == "csv") {
    format = TableFormat::Csv;
  } else if (flags.format == "markdown" || flags.format == "md") {
    format = TableFormat::Markdown;
  } else {
    throw ConfigError("unknown --format '" + flags.format + "', expected csv | markdown");
  }

  const std::string table = render_comparison(rows, format);
  const fs::path out = resolve_out(flags.out, "compare");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream os(out);
  os << table;
  std::cout << table;
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

struct ExportFlags {
  std::string run;
  std::string data;
  std::string period = "test";
  std::string out;
};

int cmd_export_predictions(const ExportFlags& flags) {
  const Checkpoint ckpt = load_checkpoint(fs::path(flags.run) / "checkpoint");
  const AtmosDataset ds = load_dataset(flags.data);
  const auto series = predict_series(ckpt, ds, parse_period(flags.period));

  const fs::path out = resolve_out(flags.out, "export-predictions");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream os(out);
  os << "date,obs_mm,pred_mm\n";
  char line[96];
  for (const SeriesPoint& p : series) {
    std::snprintf(line, sizeof(line), "%s,%.17g,%.17g\n", p.date.str().c_str(), p.obs_mm,
                  p.pred_mm);
    os << line;
  }
  std::cout << "wrote " << out.string() << " (" << series.size() << " rows, "
            << flags.period << " period)\n";
  return 0;
}

struct GradcheckFlags {
  int64_t instances = 20;
  uint64_t seed = 1;
  double step = 1e-5;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckFlags& flags) {
  GradCheckOptions opts;
  opts.instances = flags.instances;
  opts.seed = flags.seed;
  opts.step = flags.step;
  opts.tolerance = flags.tolerance;

  bool all_pass = true;
  for (const GradCheckCase& c : run_gradient_checks(opts)) {
    std::printf("%-22s %s  instances=%lld components=%lld skipped=%lld max_rel_err=%.3e\n",
                c.name.c_str(), c.pass ? "PASS" : "FAIL", static_cast<long long>(c.instances),
                static_cast<long long>(c.components), static_cast<long long>(c.skipped),
                c.max_rel_err);
    all_pass = all_pass && c.pass;
  }
  std::cout << (all_pass ? "gradcheck: all layers pass" : "gradcheck: FAILURES above") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN-based estimation of daily basin-average precipitation from gridded "
               "multi-level atmospheric time series (2D, 3D-time, 3D-vert variants)"};
  app.require_subcommand(1);

  GenFlags gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic dataset");
  gen_cmd->add_option("--days", gen.days, "Number of days")->required();
  gen_cmd->add_option("--grid", gen.grid, "Grid size HxW (default 8x8)");
  gen_cmd->add_option("--levels", gen.levels, "Level preset v1|v2|v3 or hPa list");
  gen_cmd->add_option("--vars", gen.vars, "Number of variables (default 4)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--noise-std", gen.noise_std, "Target noise std, mm/day (default 0.5)");
  gen_cmd->add_option("--start-date", gen.start_date, "Calendar start (default 1980-01-01)");
  gen_cmd->add_option("--precision", gen.precision, "f32|f64 (default f64)");
  gen_cmd->add_option("--out", gen.out, "Output dataset directory");

  TrainFlags tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Run a multi-restart training sweep");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--variant", tr.variant, "2d | 3d-time | 3d-vert")->required();
  train_cmd->add_option("--timesteps", tr.timesteps, "ts2 | ts4 | ts6 (default ts6)");
  train_cmd->add_option("--levels", tr.levels, "Level preset or hPa list (default v1)");
  train_cmd->add_option("--label", tr.label, "Case label for tables (default derived)");
  train_cmd->add_option("--split-train", tr.split_train, "Train range START:END");
  train_cmd->add_option("--split-val", tr.split_val, "Validation range START:END");
  train_cmd->add_option("--split-test", tr.split_test, "Test range START:END");
  train_cmd->add_option("--conv-channels", tr.conv_channels, "Kernel counts C1,C2 (default 32,64)");
  train_cmd->add_option("--fc-hidden", tr.fc_hidden, "Hidden FC width (default 64)");
  train_cmd->add_option("--kernel-size", tr.kernel_size, "Conv kernel size (default 3)");
  train_cmd->add_option("--stride", tr.stride, "Conv stride (default 1)");
  train_cmd->add_option("--padding", tr.padding, "Zero-padding width (default 1)");
  train_cmd->add_option("--pool-kernel", tr.pool_kernel, "Pool window (default 3)");
  train_cmd->add_option("--pool-stride", tr.pool_stride, "Pool stride (default 1)");
  train_cmd->add_option("--activation", tr.activation, "relu | none (default relu)");
  train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size (default 512)");
  train_cmd->add_option("--lr", tr.lr, "Learning rate (default 1e-3)");
  train_cmd->add_option("--beta1", tr.beta1, "Adam beta1 (default 0.9)");
  train_cmd->add_option("--beta2", tr.beta2, "Adam beta2 (default 0.999)");
  train_cmd->add_option("--adam-eps", tr.adam_eps, "Adam epsilon (default 1e-8)");
  train_cmd->add_option("--patience", tr.patience, "Early-stopping patience (default 40)");
  train_cmd->add_option("--max-epochs", tr.max_epochs, "Epoch cap (default 1000)");
  train_cmd->add_option("--restarts", tr.restarts, "Random restarts (default 200)");
  train_cmd->add_option("--seed", tr.seed, "Base seed; run i uses seed+i");
  train_cmd->add_option("--jobs", tr.jobs, "Parallel restart workers (default 1)");
  train_cmd->add_option("--out", tr.out, "Run output directory");

  EvalFlags ev;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained run per period");
  eval_cmd->add_option("--run", ev.run, "Run directory (from train)")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--out", ev.out, "Report directory (default: run dir)");
  eval_cmd->add_flag("--clamp-negative", ev.clamp_negative, "Clamp predictions at 0 mm");

  CompareFlags cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Tabulate evaluated runs side by side");
  cmp_cmd->add_option("--runs", cmp.runs, "Run directories (evaluated)")->required();
  cmp_cmd->add_option("--format", cmp.format, "csv | markdown (default csv)");
  cmp_cmd->add_option("--out", cmp.out, "Output table file");

  ExportFlags ex;
  CLI::App* ex_cmd = app.add_subcommand("export-predictions", "Write date,obs_mm,pred_mm CSV");
  ex_cmd->add_option("--run", ex.run, "Run directory")->required();
  ex_cmd->add_option("--data", ex.data, "Dataset directory")->required();
  ex_cmd->add_option("--period", ex.period, "train | validation | test (default test)");
  ex_cmd->add_option("--out", ex.out, "Output CSV path");

  GradcheckFlags gc;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all layers");
  gc_cmd->add_option("--instances", gc.instances, "Random instances per case (default 20)");
  gc_cmd->add_option("--seed", gc.seed, "Seed (default 1)");
  gc_cmd->add_option("--step", gc.step, "FD step (default 1e-5)");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Relative error bound (default 1e-4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_synthetic(gen);
    if (train_cmd->parsed()) return cmd_train(tr);
    if (eval_cmd->parsed()) return cmd_evaluate(ev);
    if (cmp_cmd->parsed()) return cmd_compare(cmp);
    if (ex_cmd->parsed()) return cmd_export_predictions(ex);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
