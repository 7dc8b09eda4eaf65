#include "welfarecast/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"
#include "welfarecast/parallel.hpp"
#include "welfarecast/rng.hpp"

namespace welfarecast {

namespace {

bool is_constant(double stdev, double mean) {
  return stdev <= 1e-12 * std::max(1.0, std::abs(mean));
}

}  // namespace

FeatureSet parse_feature_set(std::string_view text) {
  FeatureSet set;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of(",+", pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view token = text.substr(pos, end - pos);
    if (token == "ms")
      set.ms = true;
    else if (token == "nl")
      set.nl = true;
    else if (token == "weather")
      set.weather = true;
    else
      fail(ErrorKind::Config, "unknown feature block '" + std::string(token) + "' (expected ms, nl, weather)");
    pos = end + 1;
  }
  if (set.empty()) fail(ErrorKind::Config, "feature set is empty");
  return set;
}

std::string to_string(FeatureSet set) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(set.ms, "ms");
  add(set.nl, "nl");
  add(set.weather, "weather");
  return out;
}

std::string feature_set_label(FeatureSet set) {
  std::string out = to_string(set);
  std::replace(out.begin(), out.end(), ',', '+');
  return out;
}

std::vector<std::string> feature_names(FeatureSet set) {
  std::vector<std::string> names;
  names.reserve(set.width());
  if (set.ms)
    for (std::size_t j = 0; j < kImageFeatureDim; ++j) names.push_back(image_feature_name(j));
  if (set.nl)
    for (std::size_t j = 0; j < kImageFeatureDim; ++j) names.push_back(image_feature_name(kImageFeatureDim + j));
  if (set.weather)
    for (std::size_t j = 0; j < kWeatherFeatureDim; ++j) names.push_back(weather_feature_name(j));
  return names;
}

std::vector<double> fuse_features(const ImageFeatureRecord* image, const WeatherFeatureVector* weather,
                                  FeatureSet set) {
  if (set.empty()) fail(ErrorKind::Config, "feature set is empty");
  if (set.needs_image() && image == nullptr) fail(ErrorKind::MissingBlock, "image features required but absent");
  if (set.weather && weather == nullptr) fail(ErrorKind::MissingBlock, "weather features required but absent");
  std::vector<double> row;
  row.reserve(set.width());
  if (set.ms) row.insert(row.end(), image->ms.begin(), image->ms.end());
  if (set.nl) row.insert(row.end(), image->nl.begin(), image->nl.end());
  if (set.weather) row.insert(row.end(), weather->values.begin(), weather->values.end());
  return row;
}

DesignMatrix build_design_matrix(const std::vector<VisitKey>& keys,
                                 const std::map<VisitKey, const ImageFeatureRecord*>& images,
                                 const std::map<VisitKey, const WeatherFeatureVector*>& weather, FeatureSet set) {
  DesignMatrix x;
  x.keys = keys;
  x.feature_names = feature_names(set);
  x.values.resize(static_cast<Eigen::Index>(keys.size()), static_cast<Eigen::Index>(set.width()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto img = images.find(keys[i]);
    auto wx = weather.find(keys[i]);
    try {
      const auto row = fuse_features(img == images.end() ? nullptr : img->second,
                                     wx == weather.end() ? nullptr : wx->second, set);
      x.values.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
    } catch (const Error& e) {
      fail(e.kind(), to_string(keys[i]) + ": " + e.what());
    }
    x.groups.push_back(keys[i].ea_id);
  }
  return x;
}

DesignMatrix select_rows(const DesignMatrix& x, std::span<const Eigen::Index> rows) {
  DesignMatrix out;
  out.feature_names = x.feature_names;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = x.values.row(rows[i]);
    if (!x.keys.empty()) out.keys.push_back(x.keys[static_cast<std::size_t>(rows[i])]);
    if (!x.groups.empty()) out.groups.push_back(x.groups[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

RidgeProblem::RidgeProblem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) : n_(x.rows()), p_(x.cols()) {
  if (n_ < 2) fail(ErrorKind::Value, "ridge regression needs at least 2 rows");
  if (y.size() != n_) fail(ErrorKind::Dimension, "target length does not match design rows");
  if (!x.allFinite() || !y.allFinite()) fail(ErrorKind::NonFinite, "design or target contains non-finite values");

  const double n = static_cast<double>(n_);
  means_ = x.colwise().mean().transpose();
  stdevs_ = Eigen::VectorXd::Zero(p_);
  for (Eigen::Index j = 0; j < p_; ++j) {
    const double sd = std::sqrt((x.col(j).array() - means_(j)).square().sum() / n);
    if (!is_constant(sd, means_(j))) {
      stdevs_(j) = sd;
      kept_.push_back(j);
    }
  }

  const auto q = static_cast<Eigen::Index>(kept_.size());
  z_.resize(n_, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::Index j = kept_[static_cast<std::size_t>(k)];
    z_.col(k) = (x.col(j).array() - means_(j)) / stdevs_(j);
  }
  y_mean_ = y.mean();
  centered_y_ = y.array() - y_mean_;

  dual_ = q > n_;
  if (dual_) {
    gram_ = Eigen::MatrixXd::Zero(n_, n_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(z_);
  } else {
    gram_ = Eigen::MatrixXd::Zero(q, q);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(z_.transpose());
    zty_ = z_.transpose() * centered_y_;
  }
}

RidgeModel RidgeProblem::solve(double lambda, const std::vector<std::string>& names) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::Value, "lambda must be finite and >= 0");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p_)
    fail(ErrorKind::Dimension, "feature name count does not match design columns");

  RidgeModel model;
  model.lambda = lambda;
  model.feature_names = names;
  if (model.feature_names.empty())
    for (Eigen::Index j = 0; j < p_; ++j) model.feature_names.push_back("x" + std::to_string(j + 1));
  model.means = means_;
  model.stdevs = stdevs_;
  model.coefficients = Eigen::VectorXd::Zero(p_);
  model.intercept = y_mean_;
  if (kept_.empty()) return model;

  Eigen::MatrixXd system = gram_;
  system.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success ||
      (lambda == 0.0 && llt.rcond() < static_cast<double>(system.rows()) * std::numeric_limits<double>::epsilon()))
    fail(ErrorKind::SingularSystem, "ridge normal equations are singular (lambda = " + csv::format_real(lambda) +
                                        "); use lambda > 0 for collinear features");

  const Eigen::VectorXd beta = dual_ ? Eigen::VectorXd(z_.transpose() * llt.solve(centered_y_))
                                     : Eigen::VectorXd(llt.solve(zty_));
  for (std::size_t k = 0; k < kept_.size(); ++k) model.coefficients(kept_[k]) = beta(static_cast<Eigen::Index>(k));
  return model;
}

RidgeModel ridge_fit(const DesignMatrix& x, const Eigen::VectorXd& y, double lambda) {
  return RidgeProblem(x.values, y).solve(lambda, x.feature_names);
}

RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  return RidgeProblem(x, y).solve(lambda, {});
}

Eigen::VectorXd predict_aligned(const RidgeModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.coefficients.size())
    fail(ErrorKind::Dimension, "prediction rows have " + std::to_string(rows.cols()) + " columns, model has " +
                                   std::to_string(model.coefficients.size()));
  // Dropped columns carry coefficient 0; a unit divisor keeps them finite.
  const Eigen::RowVectorXd divisor = (model.stdevs.array() > 0.0).select(model.stdevs, 1.0).transpose();
  const Eigen::MatrixXd z =
      (rows.rowwise() - model.means.transpose()).array().rowwise() / divisor.array();
  Eigen::VectorXd out = (z * model.coefficients).array() + model.intercept;
  return out;
}

double predict_row(const RidgeModel& model, std::span<const double> row) {
  const Eigen::Map<const Eigen::RowVectorXd> mapped(row.data(), static_cast<Eigen::Index>(row.size()));
  return predict_aligned(model, Eigen::MatrixXd(mapped))(0);
}

Eigen::VectorXd predict(const RidgeModel& model, const DesignMatrix& rows) {
  if (rows.feature_names == model.feature_names) return predict_aligned(model, rows.values);
  std::map<std::string_view, Eigen::Index> column_of;
  for (std::size_t j = 0; j < rows.feature_names.size(); ++j)
    column_of.emplace(rows.feature_names[j], static_cast<Eigen::Index>(j));
  Eigen::MatrixXd aligned(rows.rows(), static_cast<Eigen::Index>(model.feature_names.size()));
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    auto it = column_of.find(model.feature_names[j]);
    if (it == column_of.end())
      fail(ErrorKind::MissingFeature, "rows lack model feature '" + model.feature_names[j] + "'");
    aligned.col(static_cast<Eigen::Index>(j)) = rows.values.col(it->second);
  }
  return predict_aligned(model, aligned);
}

double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() < 2) fail(ErrorKind::Dimension, "R^2 needs two equal-length vectors, n >= 2");
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) fail(ErrorKind::DegenerateTarget, "target has zero variance");
  const double ss_res = (y - yhat).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 16; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
  return grid;
}

std::vector<int> assign_group_folds(const std::vector<std::string>& groups, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::Config, "need at least 2 folds");
  std::vector<std::string> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < static_cast<std::size_t>(k))
    fail(ErrorKind::TooFewGroups, std::to_string(distinct.size()) + " groups cannot fill " + std::to_string(k) +
                                      " folds");
  Rng rng(seed);
  rng.shuffle(distinct);
  std::map<std::string_view, int> fold_of_group;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    fold_of_group.emplace(distinct[i], static_cast<int>(i % static_cast<std::size_t>(k)));
  std::vector<int> folds;
  folds.reserve(groups.size());
  for (const auto& g : groups) folds.push_back(fold_of_group.at(g));
  return folds;
}

CvResult cv_select_lambda(const DesignMatrix& x, const Eigen::VectorXd& y, std::span<const double> grid, int k,
                          std::uint64_t seed) {
  if (grid.empty()) fail(ErrorKind::Config, "lambda grid is empty");
  if (static_cast<Eigen::Index>(x.groups.size()) != x.rows())
    fail(ErrorKind::Dimension, "design matrix needs one group label per row");
  CvResult cv;
  cv.grid.assign(grid.begin(), grid.end());
  std::sort(cv.grid.begin(), cv.grid.end());
  for (double l : cv.grid)
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorKind::Config, "lambda grid values must be finite and >= 0");
  cv.fold_of_row = assign_group_folds(x.groups, k, seed);

  const std::size_t n_lambda = cv.grid.size();
  std::vector<double> scores(n_lambda * static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
    std::vector<Eigen::Index> train, valid;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      (cv.fold_of_row[static_cast<std::size_t>(i)] == static_cast<int>(fold) ? valid : train).push_back(i);
    if (train.size() < 2 || valid.size() < 2)
      fail(ErrorKind::TooFewGroups, "fold " + std::to_string(fold) + " leaves fewer than 2 rows on a side");
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.values.row(train[i]);
      y_train(static_cast<Eigen::Index>(i)) = y(train[i]);
    }
    Eigen::MatrixXd x_valid(static_cast<Eigen::Index>(valid.size()), x.cols());
    Eigen::VectorXd y_valid(static_cast<Eigen::Index>(valid.size()));
    for (std::size_t i = 0; i < valid.size(); ++i) {
      x_valid.row(static_cast<Eigen::Index>(i)) = x.values.row(valid[i]);
      y_valid(static_cast<Eigen::Index>(i)) = y(valid[i]);
    }
    const RidgeProblem problem(x_train, y_train);
    for (std::size_t l = 0; l < n_lambda; ++l) {
      const RidgeModel model = problem.solve(cv.grid[l], x.feature_names);
      scores[l * static_cast<std::size_t>(k) + fold] = r2_score(y_valid, predict_aligned(model, x_valid));
    }
  });

  cv.best_mean_r2 = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n_lambda; ++l) {
    double sum = 0.0;
    for (int f = 0; f < k; ++f) {
      const double r2 = scores[l * static_cast<std::size_t>(k) + static_cast<std::size_t>(f)];
      cv.table.push_back({cv.grid[l], f, r2});
      sum += r2;
    }
    const double mean = sum / k;
    cv.mean_r2.push_back(mean);
    if (mean >= cv.best_mean_r2) {
      cv.best_mean_r2 = mean;
      cv.best_lambda = cv.grid[l];
    }
  }
  return cv;
}

void write_cv_table(const CvResult& cv, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"lambda", "fold", "r2"});
  for (const auto& cell : cv.table)
    out.row({csv::format_real(cell.lambda), std::to_string(cell.fold), csv::format_real(cell.r2)});
  out.close();
}

void write_model(const RidgeModel& model, const std::filesystem::path& file) {
  auto to_array = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::ordered_json j;
  j["lambda"] = model.lambda;
  j["feature_names"] = model.feature_names;
  j["means"] = to_array(model.means);
  j["stdevs"] = to_array(model.stdevs);
  j["coefficients"] = to_array(model.coefficients);
  j["intercept"] = model.intercept;
  j["train_metadata"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : model.train_metadata) j["train_metadata"][key] = value;
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + file.string() + "'");
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed on '" + file.string() + "'");
}

RidgeModel read_model(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + file.string() + "'");
  RidgeModel model;
  try {
    const auto j = nlohmann::json::parse(in);
    auto to_vector = [](const std::vector<double>& v) {
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    model.lambda = j.at("lambda").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.means = to_vector(j.at("means").get<std::vector<double>>());
    model.stdevs = to_vector(j.at("stdevs").get<std::vector<double>>());
    model.coefficients = to_vector(j.at("coefficients").get<std::vector<double>>());
    model.intercept = j.at("intercept").get<double>();
    if (j.contains("train_metadata"))
      for (const auto& [key, value] : j.at("train_metadata").items())
        model.train_metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, file.string() + ": " + e.what());
  }
  const auto p = static_cast<Eigen::Index>(model.feature_names.size());
  if (model.means.size() != p || model.stdevs.size() != p || model.coefficients.size() != p)
    fail(ErrorKind::Schema, file.string() + ": model vectors disagree in length");
  return model;
}

}  // namespace welfarecast
