#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "welfarecast/diagnose.hpp"
#include "welfarecast/ingest.hpp"
#include "welfarecast/regress.hpp"
#include "welfarecast/weather.hpp"
#include "welfarecast/welfare.hpp"

namespace welfarecast {

struct RunConfig {
  std::filesystem::path visits;
  std::filesystem::path households;
  std::filesystem::path assets;
  std::filesystem::path weather;
  std::filesystem::path features;
  TargetKind target = TargetKind::LogPCConsumption;
  FeatureSet feature_set{true, true, true};
  int folds = 5;
  std::uint64_t seed = 42;
  std::vector<double> lambda_grid = default_lambda_grid();
  int min_days_per_window = 25;
  std::filesystem::path out_dir = "out";

  // Points every input at <dir>/{visits,households,assets,weather,features}.csv.
  void use_data_dir(const std::filesystem::path& dir);
  // One key=value setting; keys match the config file. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

// Flat key=value file; relative paths resolve against the file's directory.
RunConfig read_run_config(const std::filesystem::path& file);

// Everything loaded and derived once per run.
struct PreparedData {
  SurveyBundle survey;
  AssetIndexModel asset_model;
  std::vector<WelfareTarget> targets;  // asset index and log consumption
  bool has_weather = false;
  std::vector<KeyedWeatherFeatures> weather_features;
  bool has_images = false;
  std::vector<ImageFeatureRecord> images;
};

// Loads the survey bundle, builds both targets, weather features for every
// visit (when the weather file exists) and image features (when the features
// file exists). Throws MissingBlockError when `required` needs a block whose
// input file is absent.
PreparedData prepare_data(const RunConfig& config, FeatureSet required);

struct Dataset {
  TargetKind target = TargetKind::LogPCConsumption;
  FeatureSet feature_set;
  DesignMatrix x;
  Eigen::VectorXd y;
};

// Rows = visits carrying the target and every enabled block, in visit order.
Dataset assemble_dataset(const PreparedData& data, TargetKind target, FeatureSet set);

struct TrainResult {
  RidgeModel model;
  CvResult cv;
};

TrainResult train_model(const Dataset& data, const RunConfig& config);

// Cross-fitted R^2: every EA is predicted once by a model trained on the
// other outer group folds, with lambda chosen by group CV inside that
// training part. R^2 is computed over the pooled out-of-fold predictions.
EvaluationReport evaluate_out_of_fold(const Dataset& data, const RunConfig& config);

struct VarianceDiagnostics {
  std::vector<std::string> feature_names;
  std::vector<std::optional<double>> feature_ratios;
  std::optional<double> asset_index_ratio;
  std::optional<double> consumption_ratio;
  std::vector<EcdfPoint> ecdf;  // over the non-missing feature ratios
};

// WSS/TSS by EA over the visits that carry both targets and image features
// (weather features when no imagery is loaded).
VarianceDiagnostics variance_diagnostics(const PreparedData& data);

void write_variance_diagnostics(const VarianceDiagnostics& diag, const std::filesystem::path& dir);

// Feature sets compared in performance.csv: the configured set, plus the
// same set without weather when it also has imagery.
std::vector<FeatureSet> comparison_sets(FeatureSet configured);

// Full run. Artifacts are written to a staging directory inside out_dir and
// moved into place only after every stage succeeded:
// targets.csv, weather_features.csv, model.json, cv_table.csv,
// performance.csv, wss_tss.csv, ecdf.csv.
void run_pipeline(const RunConfig& config);

}  // namespace welfarecast
