#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "welfarecast/ingest.hpp"
#include "welfarecast/weather.hpp"

namespace welfarecast {

// Which feature blocks enter the design; concatenation order is always
// ms | nl | weather.
struct FeatureSet {
  bool ms = false;
  bool nl = false;
  bool weather = false;

  bool empty() const { return !ms && !nl && !weather; }
  bool needs_image() const { return ms || nl; }
  std::size_t width() const {
    return (ms ? kImageFeatureDim : 0) + (nl ? kImageFeatureDim : 0) + (weather ? kWeatherFeatureDim : 0);
  }
  bool operator==(const FeatureSet&) const = default;
};

// "ms,nl,weather" (any non-empty subset, any order).
FeatureSet parse_feature_set(std::string_view text);
// Canonical comma form, e.g. "ms,nl,weather".
std::string to_string(FeatureSet set);
// Table label, e.g. "ms+nl+weather".
std::string feature_set_label(FeatureSet set);

std::vector<std::string> feature_names(FeatureSet set);

// Throws MissingBlockError when an enabled block is absent.
std::vector<double> fuse_features(const ImageFeatureRecord* image, const WeatherFeatureVector* weather,
                                  FeatureSet set);

struct DesignMatrix {
  std::vector<VisitKey> keys;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;
  std::vector<std::string> groups;  // ea_id per row

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Rows follow `keys`; each row is fused from the lookups. Group label = ea_id.
DesignMatrix build_design_matrix(const std::vector<VisitKey>& keys,
                                 const std::map<VisitKey, const ImageFeatureRecord*>& images,
                                 const std::map<VisitKey, const WeatherFeatureVector*>& weather, FeatureSet set);

DesignMatrix select_rows(const DesignMatrix& x, std::span<const Eigen::Index> rows);

struct RidgeModel {
  double lambda = 0.0;
  std::vector<std::string> feature_names;
  Eigen::VectorXd means;
  Eigen::VectorXd stdevs;        // 0 marks a column dropped for zero variance
  Eigen::VectorXd coefficients;  // per standardized feature; 0 for dropped columns
  double intercept = 0.0;
  std::map<std::string, std::string> train_metadata;
};

// Standardized ridge problem for one training set. Construction does the
// O(n p min(n,p)) work once so several shrinkage values can be solved cheaply.
class RidgeProblem {
 public:
  RidgeProblem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  // beta = (Z'Z + lambda I)^-1 Z'(y - ybar), intercept = ybar. Uses the
  // n x n dual system Z Z' + lambda I when there are more features than rows.
  RidgeModel solve(double lambda, const std::vector<std::string>& names) const;

 private:
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
  Eigen::VectorXd means_;
  Eigen::VectorXd stdevs_;
  std::vector<Eigen::Index> kept_;
  Eigen::MatrixXd z_;
  Eigen::VectorXd centered_y_;
  double y_mean_ = 0.0;
  bool dual_ = false;
  Eigen::MatrixXd gram_;  // Z'Z (primal) or Z Z' (dual)
  Eigen::VectorXd zty_;
};

RidgeModel ridge_fit(const DesignMatrix& x, const Eigen::VectorXd& y, double lambda);
RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

// Looks columns up by name; throws MissingFeatureError when one is absent.
Eigen::VectorXd predict(const RidgeModel& model, const DesignMatrix& rows);
// Row aligned with model.feature_names.
double predict_row(const RidgeModel& model, std::span<const double> row);
Eigen::VectorXd predict_aligned(const RidgeModel& model, const Eigen::MatrixXd& rows);

// 1 - SSres/SStot. Throws DegenerateTargetError when y is constant.
double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// 17 log-spaced values 1e-4 .. 1e4.
std::vector<double> default_lambda_grid();

// Fold index per row. Distinct groups are shuffled with the seed and dealt
// round-robin into k folds, so every row of a group shares a fold.
std::vector<int> assign_group_folds(const std::vector<std::string>& groups, int k, std::uint64_t seed);

struct CvCell {
  double lambda = 0.0;
  int fold = 0;
  double r2 = 0.0;
};

struct CvResult {
  double best_lambda = 0.0;
  double best_mean_r2 = 0.0;
  std::vector<double> grid;     // ascending
  std::vector<double> mean_r2;  // aligned with grid
  std::vector<CvCell> table;    // lambda-major, then fold
  std::vector<int> fold_of_row;
};

// Picks the lambda with the highest mean held-out R^2; ties go to the larger
// lambda. Standardization is refit inside every training fold.
CvResult cv_select_lambda(const DesignMatrix& x, const Eigen::VectorXd& y, std::span<const double> grid, int k,
                          std::uint64_t seed);

void write_cv_table(const CvResult& cv, const std::filesystem::path& file);

void write_model(const RidgeModel& model, const std::filesystem::path& file);
RidgeModel read_model(const std::filesystem::path& file);

}  // namespace welfarecast
