#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace welfarecast {

// Both R^2 conventions. r2_sse = 1 - SSres/SStot (negative out of sample is
// possible); r2_pearson = squared correlation of y and yhat, reported as 0
// with pearson_degenerate set when yhat is constant.
struct RSquared {
  double r2_sse = 0.0;
  double r2_pearson = 0.0;
  std::size_t n = 0;
  bool pearson_degenerate = false;
};

RSquared r_squared(std::span<const double> y, std::span<const double> yhat);

struct EvaluationReport {
  std::string model;
  std::string target;
  std::string feature_set;
  double r2_sse = 0.0;
  double r2_pearson = 0.0;
  std::size_t n = 0;

  bool operator==(const EvaluationReport&) const = default;
};

// Stable sort by (target, feature_set).
std::vector<EvaluationReport> performance_table(std::vector<EvaluationReport> reports);
void write_performance_csv(const std::vector<EvaluationReport>& reports, const std::filesystem::path& file);
std::vector<EvaluationReport> read_performance_csv(const std::filesystem::path& file);

struct SumOfSquares {
  double within = 0.0;   // sum over groups of squared deviations from the group mean
  double between = 0.0;  // sum over groups of n_g (group mean - grand mean)^2
  double total() const { return within + between; }
};

// Within/between split of one column. The total is assembled from the two
// parts, so within <= total holds exactly in floating point.
SumOfSquares sum_of_squares(std::span<const double> values, const std::vector<std::string>& groups);

// WSS/TSS per column; nullopt where TSS = 0.
std::vector<std::optional<double>> wss_tss_ratio(const Eigen::MatrixXd& x, const std::vector<std::string>& groups);
std::optional<double> wss_tss_ratio(std::span<const double> values, const std::vector<std::string>& groups);

struct EcdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

// Right-continuous steps at the sorted distinct values; the last fraction is 1.
std::vector<EcdfPoint> ecdf(std::span<const double> values);

void write_wss_tss_csv(const std::vector<std::string>& names, const std::vector<std::optional<double>>& ratios,
                       const std::filesystem::path& file);
void write_ecdf_csv(const std::vector<EcdfPoint>& points, const std::filesystem::path& file);

}  // namespace welfarecast
