#include "welfarecast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/parallel.hpp"
#include "welfarecast/rng.hpp"

namespace welfarecast {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) grid.push_back(csv::parse_real(trim(item), "lambda_grid"));
  return grid;
}

// Outer folds must not coincide with the inner ones.
constexpr std::uint64_t kOuterSalt = 0x4F55544552ULL;

}  // namespace

void RunConfig::use_data_dir(const std::filesystem::path& dir) {
  visits = dir / "visits.csv";
  households = dir / "households.csv";
  assets = dir / "assets.csv";
  weather = dir / "weather.csv";
  features = dir / "features.csv";
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "data_dir") use_data_dir(value);
    else if (key == "visits") visits = value;
    else if (key == "households") households = value;
    else if (key == "assets") assets = value;
    else if (key == "weather") weather = value;
    else if (key == "features") features = value;
    else if (key == "target") target = parse_target(value);
    else if (key == "feature_set") feature_set = parse_feature_set(value);
    else if (key == "folds") folds = static_cast<int>(csv::parse_int(value, key));
    else if (key == "seed") seed = static_cast<std::uint64_t>(csv::parse_int(value, key));
    else if (key == "lambda_grid") lambda_grid = parse_grid(value);
    else if (key == "min_days_per_window") min_days_per_window = static_cast<int>(csv::parse_int(value, key));
    else if (key == "out") out_dir = value;
    else fail(ErrorKind::Config, "unknown config key '" + key + "'");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  }
}

void RunConfig::validate() const {
  if (folds < 2) fail(ErrorKind::Config, "folds must be >= 2");
  if (lambda_grid.empty()) fail(ErrorKind::Config, "lambda_grid is empty");
  if (feature_set.empty()) fail(ErrorKind::Config, "feature_set is empty");
  if (min_days_per_window < 1 || min_days_per_window > kWindowDays)
    fail(ErrorKind::Config, "min_days_per_window must be in 1..30");
  for (const auto* p : {&visits, &households, &assets})
    if (p->empty()) fail(ErrorKind::Config, "survey input paths (visits, households, assets) are required");
}

RunConfig read_run_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + file.string() + "'");
  RunConfig config;
  const auto base = file.parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, file.string() + " line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    static const std::set<std::string> kPathKeys{"data_dir", "visits", "households", "assets",
                                                 "weather", "features", "out"};
    if (kPathKeys.contains(key) && std::filesystem::path(value).is_relative()) value = (base / value).string();
    config.set(key, value);
  }
  return config;
}

PreparedData prepare_data(const RunConfig& config, FeatureSet required) {
  config.validate();
  PreparedData data;
  const bool weather_present = !config.weather.empty() && std::filesystem::exists(config.weather);
  const bool images_present = !config.features.empty() && std::filesystem::exists(config.features);
  if (required.weather && !weather_present)
    fail(ErrorKind::MissingBlock, "weather features requested but weather file '" + config.weather.string() +
                                      "' is missing");
  if (required.needs_image() && !images_present)
    fail(ErrorKind::MissingBlock, "image features requested but features file '" + config.features.string() +
                                      "' is missing");

  data.survey = load_survey_bundle(config.visits, config.households, config.assets);
  log_info("loaded " + std::to_string(data.survey.visits.size()) + " visits, " +
           std::to_string(data.survey.households.size()) + " household rows, " +
           std::to_string(data.survey.assets.size()) + " asset inventories");

  data.asset_model = fit_asset_index(build_pooled_asset_matrix(data.survey.assets));
  data.targets = asset_index_targets(data.survey, data.asset_model);
  const auto consumption = log_consumption_targets(data.survey);
  data.targets.insert(data.targets.end(), consumption.begin(), consumption.end());

  if (weather_present) {
    const WeatherTable table = load_weather(config.weather);
    const WeatherOptions options{config.min_days_per_window};
    for (const auto& v : data.survey.visits) {
      try {
        data.weather_features.push_back(
            {v.key, build_weather_features(table, weather_cell_id(v.lat, v.lon), v.end_date, options)});
      } catch (const Error& e) {
        fail(e.kind(), to_string(v.key) + ": " + e.what());
      }
    }
    data.has_weather = true;
  }
  if (images_present) {
    data.images = load_image_features(config.features);
    data.has_images = true;
  }
  return data;
}

Dataset assemble_dataset(const PreparedData& data, TargetKind target, FeatureSet set) {
  if (set.weather && !data.has_weather) fail(ErrorKind::MissingBlock, "weather features are not loaded");
  if (set.needs_image() && !data.has_images) fail(ErrorKind::MissingBlock, "image features are not loaded");

  std::map<VisitKey, double> y_of;
  for (const auto& t : data.targets)
    if (t.kind == target) y_of.emplace(t.key, t.value);
  std::map<VisitKey, const ImageFeatureRecord*> images;
  for (const auto& rec : data.images) images.emplace(rec.key, &rec);
  std::map<VisitKey, const WeatherFeatureVector*> weather;
  for (const auto& rec : data.weather_features) weather.emplace(rec.key, &rec.features);

  std::vector<VisitKey> keys;
  std::vector<double> ys;
  std::size_t dropped = 0;
  for (const auto& v : data.survey.visits) {
    auto y = y_of.find(v.key);
    if (y == y_of.end()) continue;
    if ((set.needs_image() && !images.contains(v.key)) || (set.weather && !weather.contains(v.key))) {
      ++dropped;
      continue;
    }
    keys.push_back(v.key);
    ys.push_back(y->second);
  }
  if (dropped > 0)
    log_warning(std::to_string(dropped) + " visits with a " + std::string(target_code(target)) +
                " target lack features for '" + to_string(set) + "' and were skipped");

  Dataset out;
  out.target = target;
  out.feature_set = set;
  out.x = build_design_matrix(keys, images, weather, set);
  out.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return out;
}

TrainResult train_model(const Dataset& data, const RunConfig& config) {
  TrainResult result;
  result.cv = cv_select_lambda(data.x, data.y, config.lambda_grid, config.folds, config.seed);
  result.model = ridge_fit(data.x, data.y, result.cv.best_lambda);
  result.model.train_metadata = {
      {"target", std::string(target_code(data.target))},
      {"features", to_string(data.feature_set)},
      {"folds", std::to_string(config.folds)},
      {"seed", std::to_string(config.seed)},
      {"n_obs", std::to_string(data.x.rows())},
      {"cv_mean_r2", csv::format_real(result.cv.best_mean_r2)},
  };
  return result;
}

EvaluationReport evaluate_out_of_fold(const Dataset& data, const RunConfig& config) {
  const std::vector<int> outer = assign_group_folds(data.x.groups, config.folds, config.seed ^ kOuterSalt);
  std::vector<Eigen::VectorXd> fold_predictions(static_cast<std::size_t>(config.folds));
  std::vector<std::vector<Eigen::Index>> fold_rows(static_cast<std::size_t>(config.folds));
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) fold_rows[static_cast<std::size_t>(outer[static_cast<std::size_t>(i)])].push_back(i);

  parallel_for(fold_rows.size(), [&](std::size_t f) {
    std::vector<Eigen::Index> train_rows;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i)
      if (outer[static_cast<std::size_t>(i)] != static_cast<int>(f)) train_rows.push_back(i);
    const DesignMatrix x_train = select_rows(data.x, train_rows);
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y_train(static_cast<Eigen::Index>(i)) = data.y(train_rows[i]);
    const auto cv = cv_select_lambda(x_train, y_train, config.lambda_grid, config.folds, config.seed);
    fold_predictions[f] = predict(ridge_fit(x_train, y_train, cv.best_lambda), select_rows(data.x, fold_rows[f]));
  });

  Eigen::VectorXd yhat(data.x.rows());
  for (std::size_t f = 0; f < fold_rows.size(); ++f)
    for (std::size_t i = 0; i < fold_rows[f].size(); ++i) yhat(fold_rows[f][i]) = fold_predictions[f](static_cast<Eigen::Index>(i));
  const RSquared r2 = r_squared(std::span<const double>(data.y.data(), static_cast<std::size_t>(data.y.size())),
                                std::span<const double>(yhat.data(), static_cast<std::size_t>(yhat.size())));
  return {"ridge", std::string(target_code(data.target)), feature_set_label(data.feature_set), r2.r2_sse,
          r2.r2_pearson, r2.n};
}

VarianceDiagnostics variance_diagnostics(const PreparedData& data) {
  if (!data.has_images && !data.has_weather)
    fail(ErrorKind::MissingBlock, "variance diagnostics need image or weather features");
  const FeatureSet set = data.has_images ? FeatureSet{true, true, false} : FeatureSet{false, false, true};

  std::map<VisitKey, double> asset, consumption;
  for (const auto& t : data.targets)
    (t.kind == TargetKind::AssetIndex ? asset : consumption).emplace(t.key, t.value);

  std::map<VisitKey, const ImageFeatureRecord*> images;
  for (const auto& rec : data.images) images.emplace(rec.key, &rec);
  std::map<VisitKey, const WeatherFeatureVector*> weather;
  for (const auto& rec : data.weather_features) weather.emplace(rec.key, &rec.features);

  std::vector<VisitKey> keys;
  std::vector<double> asset_values, consumption_values;
  for (const auto& v : data.survey.visits) {
    if (!asset.contains(v.key) || !consumption.contains(v.key)) continue;
    if (set.needs_image() ? !images.contains(v.key) : !weather.contains(v.key)) continue;
    keys.push_back(v.key);
    asset_values.push_back(asset.at(v.key));
    consumption_values.push_back(consumption.at(v.key));
  }
  const DesignMatrix x = build_design_matrix(keys, images, weather, set);

  VarianceDiagnostics diag;
  diag.feature_names = x.feature_names;
  diag.feature_ratios = wss_tss_ratio(x.values, x.groups);
  diag.asset_index_ratio = wss_tss_ratio(asset_values, x.groups);
  diag.consumption_ratio = wss_tss_ratio(consumption_values, x.groups);
  std::vector<double> present;
  for (const auto& r : diag.feature_ratios)
    if (r) present.push_back(*r);
  if (!present.empty()) diag.ecdf = ecdf(present);
  return diag;
}

void write_variance_diagnostics(const VarianceDiagnostics& diag, const std::filesystem::path& dir) {
  auto names = diag.feature_names;
  auto ratios = diag.feature_ratios;
  names.push_back("target:" + std::string(target_code(TargetKind::AssetIndex)));
  ratios.push_back(diag.asset_index_ratio);
  names.push_back("target:" + std::string(target_code(TargetKind::LogPCConsumption)));
  ratios.push_back(diag.consumption_ratio);
  write_wss_tss_csv(names, ratios, dir / "wss_tss.csv");
  write_ecdf_csv(diag.ecdf, dir / "ecdf.csv");
}

std::vector<FeatureSet> comparison_sets(FeatureSet configured) {
  std::vector<FeatureSet> sets;
  if (configured.weather && configured.needs_image()) {
    FeatureSet without = configured;
    without.weather = false;
    sets.push_back(without);
  }
  sets.push_back(configured);
  return sets;
}

void run_pipeline(const RunConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const auto staging = config.out_dir / ".staging";
  std::filesystem::remove_all(staging);
  std::filesystem::create_directories(staging);
  try {
    const PreparedData data = prepare_data(config, config.feature_set);
    write_targets(data.targets, staging / "targets.csv");
    write_weather_features(data.weather_features, staging / "weather_features.csv");

    const Dataset primary = assemble_dataset(data, config.target, config.feature_set);
    const TrainResult trained = train_model(primary, config);
    write_model(trained.model, staging / "model.json");
    write_cv_table(trained.cv, staging / "cv_table.csv");
    log_info("trained " + std::string(target_code(config.target)) + " on " + to_string(config.feature_set) +
             ", lambda = " + csv::format_real(trained.model.lambda));

    std::vector<EvaluationReport> reports;
    for (TargetKind target : {TargetKind::AssetIndex, TargetKind::LogPCConsumption})
      for (FeatureSet set : comparison_sets(config.feature_set))
        reports.push_back(evaluate_out_of_fold(assemble_dataset(data, target, set), config));
    write_performance_csv(performance_table(std::move(reports)), staging / "performance.csv");

    write_variance_diagnostics(variance_diagnostics(data), staging);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove_all(staging, ignored);
    throw;
  }
  for (const auto& entry : std::filesystem::directory_iterator(staging))
    std::filesystem::rename(entry.path(), config.out_dir / entry.path().filename());
  std::filesystem::remove_all(staging);
}

}  // namespace welfarecast
