#include "welfarecast/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "welfarecast/csv.hpp"
#include "welfarecast/error.hpp"

namespace welfarecast {

RSquared r_squared(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) fail(ErrorKind::Dimension, "y and yhat differ in length");
  if (y.size() < 2) fail(ErrorKind::Value, "R^2 needs at least 2 observations");
  const double n = static_cast<double>(y.size());
  double y_mean = 0.0;
  double f_mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y_mean += y[i];
    f_mean += yhat[i];
  }
  y_mean /= n;
  f_mean /= n;
  double ss_tot = 0.0;
  double ss_res = 0.0;
  double ss_fit = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dy = y[i] - y_mean;
    const double df = yhat[i] - f_mean;
    ss_tot += dy * dy;
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_fit += df * df;
    cross += dy * df;
  }
  if (!(ss_tot > 0.0)) fail(ErrorKind::DegenerateTarget, "target has zero variance");

  RSquared out;
  out.n = y.size();
  out.r2_sse = 1.0 - ss_res / ss_tot;
  if (ss_fit > 0.0) {
    out.r2_pearson = std::clamp(cross * cross / (ss_tot * ss_fit), 0.0, 1.0);
  } else {
    out.pearson_degenerate = true;
  }
  return out;
}

std::vector<EvaluationReport> performance_table(std::vector<EvaluationReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.target, a.feature_set) < std::tie(b.target, b.feature_set);
  });
  return reports;
}

void write_performance_csv(const std::vector<EvaluationReport>& reports, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"model", "target", "feature_set", "r2_sse", "r2_pearson", "n"});
  for (const auto& r : reports)
    out.row({r.model, r.target, r.feature_set, csv::format_real(r.r2_sse), csv::format_real(r.r2_pearson),
             std::to_string(r.n)});
  out.close();
}

std::vector<EvaluationReport> read_performance_csv(const std::filesystem::path& file) {
  const auto doc = csv::read(file);
  doc.require_prefix({"model", "target", "feature_set", "r2_sse", "r2_pearson", "n"});
  std::vector<EvaluationReport> reports;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string ctx = file.string() + " row " + std::to_string(r + 2);
    if (row.size() != doc.header.size()) fail(ErrorKind::Schema, ctx + ": wrong field count");
    reports.push_back({row[0], row[1], row[2], csv::parse_real(row[3], ctx), csv::parse_real(row[4], ctx),
                       static_cast<std::size_t>(csv::parse_int(row[5], ctx))});
  }
  return reports;
}

SumOfSquares sum_of_squares(std::span<const double> values, const std::vector<std::string>& groups) {
  if (values.size() != groups.size()) fail(ErrorKind::Dimension, "one group label per value required");
  if (values.empty()) return {};

  std::map<std::string_view, std::pair<double, std::size_t>> acc;
  double grand = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& [sum, count] = acc[groups[i]];
    sum += values[i];
    ++count;
    grand += values[i];
  }
  grand /= static_cast<double>(values.size());
  std::map<std::string_view, double> group_mean;
  for (const auto& [g, a] : acc) group_mean.emplace(g, a.first / static_cast<double>(a.second));

  SumOfSquares ss;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - group_mean.at(groups[i]);
    ss.within += d * d;
  }
  for (const auto& [g, a] : acc) {
    const double d = group_mean.at(g) - grand;
    ss.between += static_cast<double>(a.second) * d * d;
  }
  return ss;
}

std::optional<double> wss_tss_ratio(std::span<const double> values, const std::vector<std::string>& groups) {
  const SumOfSquares ss = sum_of_squares(values, groups);
  const double total = ss.total();
  if (!(total > 0.0)) return std::nullopt;
  return ss.within / total;
}

std::vector<std::optional<double>> wss_tss_ratio(const Eigen::MatrixXd& x, const std::vector<std::string>& groups) {
  if (static_cast<Eigen::Index>(groups.size()) != x.rows())
    fail(ErrorKind::Dimension, "one group label per row required");
  std::vector<std::optional<double>> ratios;
  ratios.reserve(static_cast<std::size_t>(x.cols()));
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
    ratios.push_back(wss_tss_ratio(column, groups));
  }
  return ratios;
}

std::vector<EcdfPoint> ecdf(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::Empty, "ECDF of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "ECDF input must be finite");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<EcdfPoint> points;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    points.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return points;
}

void write_wss_tss_csv(const std::vector<std::string>& names, const std::vector<std::optional<double>>& ratios,
                       const std::filesystem::path& file) {
  if (names.size() != ratios.size()) fail(ErrorKind::Dimension, "one name per ratio required");
  csv::Writer out(file);
  out.row({"feature_name", "ratio"});
  for (std::size_t j = 0; j < names.size(); ++j) out.row({names[j], csv::format_optional(ratios[j])});
  out.close();
}

void write_ecdf_csv(const std::vector<EcdfPoint>& points, const std::filesystem::path& file) {
  csv::Writer out(file);
  out.row({"value", "fraction"});
  for (const auto& p : points) out.row({csv::format_real(p.value), csv::format_real(p.fraction)});
  out.close();
}

}  // namespace welfarecast
