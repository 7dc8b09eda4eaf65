#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "welfarecast/composite.hpp"
#include "welfarecast/csv.hpp"
#include "welfarecast/date.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/gridmap.hpp"
#include "welfarecast/parallel.hpp"
#include "welfarecast/pipeline.hpp"
#include "welfarecast/synth.hpp"

namespace fs = std::filesystem;
using namespace welfarecast;

namespace {

constexpr int kUsageExit = 2;
constexpr int kInternalExit = 3;

std::string exit_code_table() {
  std::ostringstream out;
  out << "Exit codes:\n  0   success\n  " << kUsageExit << "   usage error\n  " << kInternalExit
      << "   internal error\n";
  for (int k = 0; k <= static_cast<int>(ErrorKind::Config); ++k) {
    const auto kind = static_cast<ErrorKind>(k);
    out << "  " << exit_code(kind) << "  " << error_name(kind) << "\n";
  }
  return out.str();
}

const char* kSchemas = R"(Input schemas (CSV with header; listed columns must come first, in order):
  visits.csv      ea_id,wave,visit,end_date,lat,lon               visit = PP|PH, wave 1..4
  households.csv  hh_id,ea_id,wave,visit,total_expenditure,household_size
  assets.csv      hh_id,source,survey_year,ea_id,<asset>...       source = GHS|DHS; 0, 1 or empty
  weather.csv     cell_id,date,precip_total_mm,temp_mean_c        cell_id = lat_lon of the 0.25 deg node
  features.csv    ea_id,wave,visit,f0001..f1024                   f0001..f0512 = MS, f0513..f1024 = NL
Run config: flat key=value lines (data_dir, visits, households, assets, weather,
  features, target, feature_set, folds, seed, lambda_grid, min_days_per_window,
  out). Command-line flags override the file.
Environment: WELFARECAST_THREADS caps worker threads.
)";

void report(const std::string& name, int code, const std::string& message) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error: " << name << " (exit " << code << "): " << flat << "\n";
}

// Flags shared by every subcommand that reads survey data.
struct RunFlags {
  std::string config;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app, bool with_model_flags) {
    app->add_option("--config", config, "key=value run configuration file");
    add(app, "--data-dir", "data_dir", "directory holding the five standard input CSVs");
    add(app, "--visits", "visits", "visits.csv");
    add(app, "--households", "households", "households.csv");
    add(app, "--assets", "assets", "assets.csv");
    add(app, "--weather-csv", "weather", "weather.csv");
    add(app, "--features-csv", "features", "image features.csv");
    add(app, "--min-days", "min_days_per_window", "minimum observed days per 30-day window");
    if (with_model_flags) {
      add(app, "--target", "target", "asset | consumption");
      add(app, "--features", "feature_set", "comma-separated subset of ms,nl,weather");
      add(app, "--folds", "folds", "number of group CV folds");
      add(app, "--seed", "seed", "seed for group fold assignment");
      add(app, "--lambda-grid", "lambda_grid", "comma-separated ridge penalties");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : read_run_config(config);
    if (auto it = overrides.find("data_dir"); it != overrides.end()) cfg.set("data_dir", it->second);
    for (const auto& [key, value] : overrides)
      if (key != "data_dir") cfg.set(key, value);
    return cfg;
  }


  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }
};

GridSpec parse_bbox(const std::string& text, double cell) {
  std::vector<double> v;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) v.push_back(csv::parse_real(item, "bbox"));
  if (v.size() != 4) fail(ErrorKind::InvalidSpec, "--bbox expects latmin,lonmin,latmax,lonmax");
  GridSpec spec;
  spec.lat_min = v[0];
  spec.lon_min = v[1];
  spec.lat_max = v[2];
  spec.lon_max = v[3];
  spec.cell_size = cell;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"welfarecast: survey-calibrated welfare prediction from imagery and weather features"};
  app.set_version_flag("--version", std::string("welfarecast ") + WELFARECAST_VERSION);
  app.footer(std::string("\n") + kSchemas + "\n" + exit_code_table());
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  std::string synth_config;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out;
  synth->add_option("--config", synth_config, "scenario key=value file");
  synth->add_option("--seed", synth_seed, "override the scenario seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "fit a ridge model with group-CV shrinkage");
  RunFlags train_flags;
  train_flags.attach(train, true);
  std::string train_out = "model.json";
  std::string train_cv;
  train->add_option("--out", train_out, "model JSON path");
  train->add_option("--cv-table", train_cv, "optional cv_table.csv path");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "out-of-fold R^2 for both targets over feature sets");
  RunFlags eval_flags;
  eval_flags.attach(evaluate, true);
  std::vector<std::string> eval_sets;
  std::string eval_out = "performance.csv";
  evaluate->add_option("--set", eval_sets, "feature set to compare (repeatable); default: configured set with and without weather");
  evaluate->add_option("--out", eval_out, "performance.csv path");

  // diagnostics
  auto* diagnostics = app.add_subcommand("diagnostics", "WSS/TSS ratios and their ECDF");
  RunFlags diag_flags;
  diag_flags.attach(diagnostics, false);
  std::string diag_out = ".";
  diagnostics->add_option("--out", diag_out, "output directory for wss_tss.csv and ecdf.csv");

  // predict-grid
  auto* grid = app.add_subcommand("predict-grid", "predict a fitted model over a regular lat/lon grid");
  std::string grid_model, grid_bbox, grid_dir, grid_out;
  double grid_cell = 0.1;
  std::vector<std::string> grid_periods;
  grid->add_option("--model", grid_model, "model JSON")->required();
  grid->add_option("--bbox", grid_bbox, "latmin,lonmin,latmax,lonmax")->required();
  grid->add_option("--cell", grid_cell, "cell size in degrees");
  grid->add_option("--period", grid_periods, "period label (repeatable)")->required();
  grid->add_option("--features-dir", grid_dir, "directory with image_features.csv / weather_features.csv")->required();
  grid->add_option("--out", grid_out, "raster CSV path")->required();

  // run
  auto* run = app.add_subcommand("run", "full pipeline: targets, features, model, evaluation, diagnostics");
  RunFlags run_flags;
  run_flags.attach(run, true);
  std::string run_out;
  run->add_option("--out", run_out, "artifact directory");

  // composite
  auto* composite = app.add_subcommand("composite", "median cloud-free composite of a tile stack");
  std::string comp_tiles, comp_end, comp_out, comp_csv;
  bool comp_crop = false;
  composite->add_option("--tiles", comp_tiles, "directory of observation sidecars")->required();
  composite->add_option("--end-date", comp_end, "window end (exclusive), YYYY-MM-DD")->required();
  composite->add_option("--out", comp_out, "output directory")->required();
  composite->add_flag("--crop", comp_crop, "center-crop 255x255 to 224x224");
  composite->add_option("--csv", comp_csv, "also write a per-pixel CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("UsageError", kUsageExit, e.what());
    return kUsageExit;
  }
  set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warning);

  try {
    if (synth->parsed()) {
      ScenarioConfig cfg = synth_config.empty() ? ScenarioConfig{} : read_scenario_config(synth_config);
      if (synth_seed) cfg.seed = *synth_seed;
      generate_scenario(cfg, synth_out);
    } else if (train->parsed()) {
      const RunConfig cfg = train_flags.resolve();
      const PreparedData data = prepare_data(cfg, cfg.feature_set);
      const TrainResult result = train_model(assemble_dataset(data, cfg.target, cfg.feature_set), cfg);
      write_model(result.model, train_out);
      if (!train_cv.empty()) write_cv_table(result.cv, train_cv);
    } else if (evaluate->parsed()) {
      const RunConfig cfg = eval_flags.resolve();
      std::vector<FeatureSet> sets;
      for (const auto& s : eval_sets) sets.push_back(parse_feature_set(s));
      if (sets.empty()) sets = comparison_sets(cfg.feature_set);
      FeatureSet required{};
      for (const auto& s : sets) {
        required.ms |= s.ms;
        required.nl |= s.nl;
        required.weather |= s.weather;
      }
      const PreparedData data = prepare_data(cfg, required);
      std::vector<EvaluationReport> reports;
      for (TargetKind target : {TargetKind::AssetIndex, TargetKind::LogPCConsumption})
        for (const auto& s : sets) reports.push_back(evaluate_out_of_fold(assemble_dataset(data, target, s), cfg));
      write_performance_csv(performance_table(std::move(reports)), eval_out);
    } else if (diagnostics->parsed()) {
      const RunConfig cfg = diag_flags.resolve();
      const PreparedData data = prepare_data(cfg, FeatureSet{});
      fs::create_directories(diag_out);
      write_variance_diagnostics(variance_diagnostics(data), diag_out);
    } else if (grid->parsed()) {
      const RidgeModel model = read_model(grid_model);
      const FeatureSet set = infer_feature_set(model);
      GridSpec spec = parse_bbox(grid_bbox, grid_cell);
      spec.periods = grid_periods;
      spec.validate();
      std::vector<RasterLayer> layers;
      for (const auto& period : spec.periods)
        layers.push_back(predict_grid(model, set, load_cell_features(grid_dir, spec, period), spec, period));
      export_raster(layers, grid_out);
    } else if (run->parsed()) {
      RunConfig cfg = run_flags.resolve();
      if (!run_out.empty()) cfg.out_dir = run_out;
      run_pipeline(cfg);
    } else if (composite->parsed()) {
      const Date end = parse_date(comp_end);
      CompositeTile tile = median_composite(read_tile_stack(comp_tiles), end);
      if (comp_crop) tile = center_crop(tile);
      write_composite(comp_out, "composite", tile, end);
      if (!comp_csv.empty()) write_composite_csv(tile, comp_csv);
    }
  } catch (const Error& e) {
    report(std::string(error_name(e.kind())), exit_code(e.kind()), e.detail());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    report(std::string(error_name(ErrorKind::Io)), exit_code(ErrorKind::Io), e.what());
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    report("InternalError", kInternalExit, e.what());
    return kInternalExit;
  }
  return 0;
}
